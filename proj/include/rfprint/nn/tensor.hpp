#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace rfprint::nn {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

/// Dense row-major float32 tensor.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> values);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }
    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    void fill(float value);
    /// Same element count, new shape.
    void reshape(Shape shape);
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<float> data_;
};

/// Throws ShapeMismatch unless t has exactly `expected` (0 = any extent).
void require_shape(const Tensor& t, std::initializer_list<std::size_t> expected, const char* what);
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace rfprint::nn
