#include "rfprint/nn/checkpoint.hpp"

#include <fstream>

#include "rfprint/binary_io.hpp"
#include "rfprint/error.hpp"

namespace rfprint::nn {

namespace {

void put_tensor(std::ostream& out, const Tensor& t) {
    binio::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (auto d : t.shape()) binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) binio::put_f32(out, v);
}

void get_tensor(std::istream& in, Tensor& t, std::size_t index) {
    const std::size_t rank = binio::get_le<std::uint8_t>(in);
    Shape shape(rank);
    for (auto& d : shape) d = binio::get_le<std::uint32_t>(in);
    if (shape != t.shape())
        throw IoError("checkpoint: tensor " + std::to_string(index) + " has shape " + to_string(shape) +
                      ", the architecture expects " + to_string(t.shape()));
    for (auto& v : t.values()) v = binio::get_f32(in);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Model& model) {
    const auto& c = model.config();
    binio::put_magic(out, "RFCK");
    binio::put_le<std::uint16_t>(out, kCheckpointVersion);
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(c.conv_filters.size()));
    for (auto f : c.conv_filters) binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f));
    for (auto v : {c.kernel_width, c.avg_pool, c.classes, c.input_rows, c.input_width})
        binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    binio::put_f32(out, c.dropout_rate);
    binio::put_f32(out, c.batchnorm.epsilon);
    binio::put_f32(out, c.batchnorm.momentum);
    const auto params = model.parameters();
    const auto buffers = model.buffers();
    binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size() + buffers.size()));
    for (const Tensor* t : params) put_tensor(out, *t);
    for (const Tensor* t : buffers) put_tensor(out, *t);
    if (!out) throw IoError("checkpoint: write failed");
}

Model read_checkpoint(std::istream& in) {
    binio::expect_magic(in, "RFCK", "checkpoint");
    const auto version = binio::get_le<std::uint16_t>(in);
    if (version != kCheckpointVersion) throw IoError("checkpoint: unsupported version " + std::to_string(version));
    ModelConfig c;
    const std::size_t blocks = binio::get_le<std::uint32_t>(in);
    if (blocks == 0 || blocks > 64) throw IoError("checkpoint: implausible block count");
    c.conv_filters.resize(blocks);
    for (auto& f : c.conv_filters) f = binio::get_le<std::uint32_t>(in);
    for (auto* v : {&c.kernel_width, &c.avg_pool, &c.classes, &c.input_rows, &c.input_width})
        *v = binio::get_le<std::uint32_t>(in);
    c.dropout_rate = binio::get_f32(in);
    c.batchnorm.epsilon = binio::get_f32(in);
    c.batchnorm.momentum = binio::get_f32(in);
    Model model(c);
    auto params = model.parameters();
    auto buffers = model.buffers();
    const std::size_t count = binio::get_le<std::uint32_t>(in);
    if (count != params.size() + buffers.size()) throw IoError("checkpoint: tensor count disagrees with the architecture");
    std::size_t index = 0;
    for (Tensor* t : params) get_tensor(in, *t, index++);
    for (Tensor* t : buffers) get_tensor(in, *t, index++);
    return model;
}

void save_checkpoint(const std::string& path, const Model& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    write_checkpoint(out, model);
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    try {
        return read_checkpoint(in);
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("checkpoint: invalid architecture: ") + e.what());
    }
}

}  // namespace rfprint::nn
