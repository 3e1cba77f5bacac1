#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "team/matching.hpp"

namespace team {

/// Tiny random episode on which the analytic gradient of the full training
/// loss is compared with central differences, in double precision.
struct GradCheckConfig {
  std::size_t way = 3;
  std::size_t shot = 1;
  std::size_t queries = 1;
  std::size_t frames = 4;
  std::size_t dim = 8;
  std::size_t tokens = 2;
  std::uint64_t seed = 0;
  double step = 1e-5;
  MatchingConfig matching;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t size = 0;
  /// |analytic - numeric|_2 / max(|analytic|_2, |numeric|_2)
  double rel_error = 0;
  double max_abs_error = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0;
  double loss = 0;
};

GradCheckReport gradient_check(const GradCheckConfig& config);

}  // namespace team
