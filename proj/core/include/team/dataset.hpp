#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "team/matrix.hpp"

namespace team {

/// One video's per-frame features, T x D.
using FeatureSequence = Matrix<float>;

struct VideoRecord {
  std::string id;
  /// Blob location relative to the manifest; generated on save when empty.
  std::string blob_path;
  FeatureSequence features;
};

struct ClassRecord {
  std::string name;
  std::vector<VideoRecord> videos;
};

/// Per-class collections of feature sequences. Every sequence shares `dim`;
/// frame counts may differ between videos.
struct FeatureDataset {
  std::size_t dim = 0;
  std::vector<ClassRecord> classes;

  std::size_t num_videos() const;
  /// Throws ContractError on inconsistent dims or empty sequences.
  void validate() const;
};

inline constexpr std::uint32_t kBlobVersion = 1;
inline constexpr std::uint32_t kManifestVersion = 1;
inline constexpr const char* kManifestName = "manifest.json";

/// Blob layout: "TFEA", u32 version, u32 T, u32 D, T*D little-endian f32.
std::vector<std::uint8_t> encode_blob(const FeatureSequence& features);
FeatureSequence decode_blob(std::span<const std::uint8_t> bytes, const std::string& source);

void write_blob(const std::filesystem::path& path, const FeatureSequence& features);
FeatureSequence read_blob(const std::filesystem::path& path);

/// Writes `dir/manifest.json` plus one blob per video.
void save_dataset(const FeatureDataset& dataset, const std::filesystem::path& dir);
/// Reads a dataset written by `save_dataset` (or any exporter of the same
/// format). Throws FormatError on malformed content, IoError on missing files.
FeatureDataset load_dataset(const std::filesystem::path& dir);

/// Classes [first, first + count) as a new dataset.
FeatureDataset class_slice(const FeatureDataset& dataset, std::size_t first, std::size_t count);

}  // namespace team
