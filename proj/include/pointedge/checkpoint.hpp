#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pointedge/params.hpp"

namespace pointedge {

// Binary layout, all integers little-endian:
//   magic "PEDGCKPT" (8 bytes), u32 version, u64 param count, then per parameter
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 values[product(dims)].
inline constexpr char checkpoint_magic[8] = {'P', 'E', 'D', 'G', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t checkpoint_version = 1;

std::vector<std::uint8_t> encode_checkpoint(const ParamStore& params);
ParamStore decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path);

/// Throws ValidationError listing every missing, unexpected, or mis-shaped parameter.
void require_compatible(const ParamStore& expected, const ParamStore& loaded);

}  // namespace pointedge
