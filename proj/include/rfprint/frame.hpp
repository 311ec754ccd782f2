#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rfprint {

inline constexpr std::size_t kFrameLength = 1024;

/// 2 x len real IQ tensor, row 0 = I, row 1 = Q, plus the device label.
struct Frame {
    std::vector<float> data;  // 2 * length values, row-major
    std::uint8_t label = 0;

    std::size_t length() const { return data.size() / 2; }
    const float* i_row() const { return data.data(); }
    const float* q_row() const { return data.data() + length(); }
};

}  // namespace rfprint
