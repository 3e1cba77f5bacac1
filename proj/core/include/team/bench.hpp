#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace team {

struct TimingRow {
  std::string method;
  std::size_t frames = 0;
  double median_ms = 0;
  std::uint64_t units_compared = 0;
  std::size_t inner_loops = 1;
};

struct ScalingFit {
  std::string method;
  double slope = 0;      // least-squares slope of log(time) against log(T)
  double r_squared = 0;
};

struct BenchConfig {
  std::vector<std::size_t> frames{8, 16, 32, 64, 128};
  std::size_t dim = 64;
  std::size_t tokens = 8;
  std::size_t repeats = 9;
  std::size_t tuple_cardinality = 2;
  std::uint64_t seed = 0;
  /// Calls are batched until one timed batch lasts at least this long.
  double min_batch_ms = 10.0;

  void validate() const;
};

struct BenchReport {
  std::vector<TimingRow> rows;
  std::vector<ScalingFit> fits;
};

inline constexpr const char* kTeamMethod = "team";
inline constexpr const char* kFrameMethod = "frame_align";
inline constexpr const char* kTupleMethod = "tuple_align";

/// Times every matching strategy on one random video pair per frame count,
/// on the calling thread. Each cell is calibrated (the calibration batches are
/// discarded as warm-up), then `repeats` batches are timed round-robin across
/// the whole grid and the median per cell is reported.
BenchReport run_scaling_bench(const BenchConfig& config);

/// Log-log least squares over (frames, time) pairs; needs >= 2 points.
ScalingFit fit_loglog(const std::string& method, std::span<const double> frames,
                      std::span<const double> times);

/// `method,T,median_ms,units_compared`
void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows);
/// Log-log line chart of median time against T, one polyline per method.
std::string render_timing_svg(std::span<const TimingRow> rows);

}  // namespace team
