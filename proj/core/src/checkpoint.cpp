#include "team/checkpoint.hpp"

#include <cmath>
#include <string_view>

#include "binary_io.hpp"
#include "team/error.hpp"

namespace team {

namespace {
constexpr std::string_view kMagic = "TEAM";
}

std::vector<std::uint8_t> encode_checkpoint(const PatternPool<float>& pool) {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(pool.config().dim));
  w.u32(static_cast<std::uint32_t>(pool.config().tokens));
  w.u32(static_cast<std::uint32_t>(pool.config().mlp_ratio));
  for (const Parameter<float>* p : pool.parameters()) {
    w.u32(static_cast<std::uint32_t>(p->name.size()));
    w.raw(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (float v : p->value.flat()) w.f32(v);
  }
  return std::move(w).bytes();
}

PatternPool<float> decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (r.str(4, "checkpoint magic") != kMagic) r.fail(0, "bad magic, expected \"TEAM\"");
  const std::uint32_t version = r.u32("format version");
  if (version != kCheckpointVersion) r.fail(4, "unsupported checkpoint version " + std::to_string(version));
  ModelConfig cfg;
  cfg.dim = r.u32("D");
  cfg.tokens = r.u32("M");
  cfg.mlp_ratio = r.u32("r");
  if (cfg.dim == 0 || cfg.tokens == 0 || cfg.mlp_ratio == 0)
    r.fail(8, "zero entry in header (D=" + std::to_string(cfg.dim) + ", M=" +
                  std::to_string(cfg.tokens) + ", r=" + std::to_string(cfg.mlp_ratio) + ")");
  if (cfg.dim > (1u << 16) || cfg.tokens > (1u << 16) || cfg.mlp_ratio > 64)
    r.fail(8, "implausible header (D=" + std::to_string(cfg.dim) + ", M=" +
                  std::to_string(cfg.tokens) + ", r=" + std::to_string(cfg.mlp_ratio) + ")");

  PatternPool<float> pool = PatternPool<float>::zeros(cfg);
  for (Parameter<float>* p : pool.parameters()) {
    const std::size_t name_at = r.offset();
    const std::uint32_t len = r.u32("parameter name length");
    if (len != p->name.size()) r.fail(name_at, "expected parameter '" + p->name + "'");
    if (r.str(len, "parameter name") != p->name) r.fail(name_at + 4, "expected parameter '" + p->name + "'");
    const std::size_t shape_at = r.offset();
    const std::uint32_t rows = r.u32("rows");
    const std::uint32_t cols = r.u32("cols");
    if (rows != p->value.rows() || cols != p->value.cols())
      r.fail(shape_at, "parameter '" + p->name + "' has shape " + Matrix<float>::shape_string(rows, cols) +
                           ", expected " + p->value.shape());
    for (auto& v : p->value.flat()) {
      const std::size_t at = r.offset();
      v = r.f32("parameter value");
      if (!std::isfinite(v)) r.fail(at, "non-finite value in parameter '" + p->name + "'");
    }
  }
  if (!r.at_end()) r.fail(r.offset(), "trailing bytes after last parameter");
  return pool;
}

void save_checkpoint(const PatternPool<float>& pool, const std::filesystem::path& path) {
  detail::write_file(path, encode_checkpoint(pool));
}

PatternPool<float> load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return decode_checkpoint(bytes, path.string());
}

std::uint64_t checkpoint_digest(const PatternPool<float>& pool) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::uint8_t b : encode_checkpoint(pool)) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace team
