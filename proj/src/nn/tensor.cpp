#include "rfprint/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "rfprint/error.hpp"

namespace rfprint::nn {

std::string to_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (data_.size() != element_count(shape_))
        throw ShapeMismatch("tensor: " + std::to_string(data_.size()) + " values for shape " + to_string(shape_));
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::reshape(Shape shape) {
    if (element_count(shape) != data_.size())
        throw ShapeMismatch("tensor: cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void require_shape(const Tensor& t, std::initializer_list<std::size_t> expected, const char* what) {
    bool ok = t.rank() == expected.size();
    std::size_t axis = 0;
    for (auto e : expected) {
        if (!ok) break;
        ok = e == 0 || t.dim(axis) == e;
        ++axis;
    }
    if (!ok) {
        Shape want(expected);
        throw ShapeMismatch(std::string(what) + ": got shape " + to_string(t.shape()) + ", expected " +
                            to_string(want) + " (0 = any)");
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape())
        throw ShapeMismatch(std::string(what) + ": shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                            " differ");
}

}  // namespace rfprint::nn
