#pragma once

#include <iosfwd>
#include <string>

#include "rfprint/nn/model.hpp"

namespace rfprint::nn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// "RFCK", u16 version, the architecture, then every parameter and running
/// statistic as (u8 rank, u32 dims..., little-endian float32 values).
void write_checkpoint(std::ostream& out, const Model& model);
Model read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const Model& model);
Model load_checkpoint(const std::string& path);

}  // namespace rfprint::nn
