#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "team/model.hpp"

namespace team {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "TEAM", u32 version, u32 D, u32 M, u32 r, then for every
/// parameter in canonical order: u32 name length, name bytes, u32 rows,
/// u32 cols, rows*cols little-endian f32.
std::vector<std::uint8_t> encode_checkpoint(const PatternPool<float>& pool);
PatternPool<float> decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source);

void save_checkpoint(const PatternPool<float>& pool, const std::filesystem::path& path);
PatternPool<float> load_checkpoint(const std::filesystem::path& path);

/// FNV-1a over the encoded checkpoint; cheap identity check for a pool.
std::uint64_t checkpoint_digest(const PatternPool<float>& pool);

}  // namespace team
