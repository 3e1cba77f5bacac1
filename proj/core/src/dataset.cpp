#include "team/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <string_view>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "team/error.hpp"

namespace team {

namespace {

constexpr std::string_view kBlobMagic = "TFEA";
constexpr std::size_t kBlobHeaderBytes = 16;
constexpr const char* kManifestFormat = "team-features";

using nlohmann::json;

std::string default_blob_path(std::size_t class_index, std::size_t video_index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "videos/c%04zu_v%05zu.tfea", class_index, video_index);
  return buf;
}

const json& field(const json& obj, const char* key, const std::string& where,
                  const std::string& file) {
  if (!obj.is_object()) throw FormatError(file, FormatError::kNoOffset, where + " is not an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw FormatError(file, FormatError::kNoOffset, where + ": missing field '" + key + "'");
  return *it;
}

std::size_t as_count(const json& v, const std::string& where, const std::string& file) {
  if (!v.is_number_unsigned())
    throw FormatError(file, FormatError::kNoOffset, where + " must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string as_string(const json& v, const std::string& where, const std::string& file) {
  if (!v.is_string()) throw FormatError(file, FormatError::kNoOffset, where + " must be a string");
  return v.get<std::string>();
}

void check_relative(const std::string& p, const std::string& where, const std::string& file) {
  const std::filesystem::path path(p);
  if (p.empty() || path.is_absolute())
    throw FormatError(file, FormatError::kNoOffset, where + ": blob path must be relative");
  for (const auto& part : path)
    if (part == "..")
      throw FormatError(file, FormatError::kNoOffset, where + ": blob path escapes the dataset");
}

}  // namespace

std::size_t FeatureDataset::num_videos() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.videos.size();
  return n;
}

void FeatureDataset::validate() const {
  for (const auto& c : classes)
    for (const auto& v : c.videos) {
      if (v.features.rows() == 0)
        throw ContractError("video '" + v.id + "' in class '" + c.name + "' has no frames");
      if (v.features.cols() != dim)
        throw ContractError("video '" + v.id + "' has dim " + std::to_string(v.features.cols()) +
                            ", dataset dim is " + std::to_string(dim));
    }
}

std::vector<std::uint8_t> encode_blob(const FeatureSequence& features) {
  detail::ByteWriter w;
  w.raw(kBlobMagic);
  w.u32(kBlobVersion);
  w.u32(static_cast<std::uint32_t>(features.rows()));
  w.u32(static_cast<std::uint32_t>(features.cols()));
  for (float v : features.flat()) w.f32(v);
  return std::move(w).bytes();
}

FeatureSequence decode_blob(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (r.str(4, "blob magic") != kBlobMagic) r.fail(0, "bad magic, expected \"TFEA\"");
  const std::uint32_t version = r.u32("blob version");
  if (version != kBlobVersion)
    r.fail(4, "unsupported blob version " + std::to_string(version));
  const std::uint32_t frames = r.u32("frame count");
  if (frames == 0) r.fail(8, "blob has zero frames");
  const std::uint32_t dim = r.u32("feature dim");
  if (dim == 0) r.fail(12, "blob has zero feature dim");
  const std::uint64_t expected = std::uint64_t{frames} * dim * 4;
  if (r.remaining() != expected)
    r.fail(r.remaining() < expected ? bytes.size() : kBlobHeaderBytes + expected,
           "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
               std::to_string(expected) + " for " + std::to_string(frames) + "x" +
               std::to_string(dim));
  FeatureSequence out(frames, dim);
  for (auto& v : out.flat()) {
    const std::size_t at = r.offset();
    v = r.f32("feature value");
    if (!std::isfinite(v)) r.fail(at, "non-finite feature value");
  }
  return out;
}

void write_blob(const std::filesystem::path& path, const FeatureSequence& features) {
  detail::write_file(path, encode_blob(features));
}

FeatureSequence read_blob(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_blob(bytes, path.string());
}

void save_dataset(const FeatureDataset& dataset, const std::filesystem::path& dir) {
  dataset.validate();
  json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = kManifestVersion;
  manifest["dim"] = dataset.dim;
  json classes = json::array();
  for (std::size_t c = 0; c < dataset.classes.size(); ++c) {
    const auto& cls = dataset.classes[c];
    json videos = json::array();
    for (std::size_t v = 0; v < cls.videos.size(); ++v) {
      const auto& rec = cls.videos[v];
      const std::string blob = rec.blob_path.empty() ? default_blob_path(c, v) : rec.blob_path;
      check_relative(blob, rec.id, (dir / kManifestName).string());
      write_blob(dir / blob, rec.features);
      videos.push_back({{"id", rec.id}, {"frames", rec.features.rows()}, {"blob", blob}});
    }
    classes.push_back({{"name", cls.name}, {"videos", std::move(videos)}});
  }
  manifest["classes"] = std::move(classes);
  const std::string text = manifest.dump(2) + "\n";
  detail::write_file(dir / kManifestName,
                     std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

FeatureDataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / kManifestName;
  const std::string file = manifest_path.string();
  const auto bytes = detail::read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError(file, e.byte > 0 ? e.byte - 1 : 0, std::string("invalid JSON: ") + e.what());
  }
  if (as_string(field(manifest, "format", "manifest", file), "format", file) != kManifestFormat)
    throw FormatError(file, FormatError::kNoOffset, "not a team-features manifest");
  const std::size_t version = as_count(field(manifest, "version", "manifest", file), "version", file);
  if (version != kManifestVersion)
    throw FormatError(file, FormatError::kNoOffset, "unsupported manifest version " + std::to_string(version));

  FeatureDataset ds;
  ds.dim = as_count(field(manifest, "dim", "manifest", file), "dim", file);
  const json& classes = field(manifest, "classes", "manifest", file);
  if (!classes.is_array()) throw FormatError(file, FormatError::kNoOffset, "classes must be an array");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string cw = "classes[" + std::to_string(c) + "]";
    ClassRecord cls;
    cls.name = as_string(field(classes[c], "name", cw, file), cw + ".name", file);
    const json& videos = field(classes[c], "videos", cw, file);
    if (!videos.is_array()) throw FormatError(file, FormatError::kNoOffset, cw + ".videos must be an array");
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const std::string vw = cw + ".videos[" + std::to_string(v) + "]";
      VideoRecord rec;
      rec.id = as_string(field(videos[v], "id", vw, file), vw + ".id", file);
      const std::size_t frames = as_count(field(videos[v], "frames", vw, file), vw + ".frames", file);
      rec.blob_path = as_string(field(videos[v], "blob", vw, file), vw + ".blob", file);
      check_relative(rec.blob_path, vw, file);
      rec.features = read_blob(dir / rec.blob_path);
      const std::string blob_file = (dir / rec.blob_path).string();
      if (rec.features.rows() != frames)
        throw FormatError(blob_file, 8, "blob has " + std::to_string(rec.features.rows()) +
                                            " frames, manifest " + vw + " says " + std::to_string(frames));
      if (rec.features.cols() != ds.dim)
        throw FormatError(blob_file, 12, "blob dim " + std::to_string(rec.features.cols()) +
                                             " does not match manifest dim " + std::to_string(ds.dim));
      cls.videos.push_back(std::move(rec));
    }
    ds.classes.push_back(std::move(cls));
  }
  return ds;
}

FeatureDataset class_slice(const FeatureDataset& dataset, std::size_t first, std::size_t count) {
  if (first + count > dataset.classes.size())
    throw ContractError("class_slice [" + std::to_string(first) + ", " +
                        std::to_string(first + count) + ") exceeds " +
                        std::to_string(dataset.classes.size()) + " classes");
  FeatureDataset out;
  out.dim = dataset.dim;
  out.classes.assign(dataset.classes.begin() + static_cast<std::ptrdiff_t>(first),
                     dataset.classes.begin() + static_cast<std::ptrdiff_t>(first + count));
  return out;
}

}  // namespace team
