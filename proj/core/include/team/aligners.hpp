#pragma once

#include <cstddef>
#include <cstdint>

#include "team/matrix.hpp"
#include "team/model.hpp"

namespace team {

/// Distance between two videos plus the number of unit pairs the strategy
/// compared to obtain it.
struct AlignmentResult {
  double distance = 0;
  std::uint64_t units_compared = 0;
};

/// Monotonic frame alignment: minimal cumulative cosine distance along a
/// path through the Ta x Tb frame-distance grid using match, insert and
/// delete moves. Compares Ta * Tb frame pairs.
template <typename T>
AlignmentResult frame_align_distance(const Matrix<T>& a, const Matrix<T>& b);

/// Ordered-tuple matching: every increasing index tuple of `cardinality`
/// frames is represented by its concatenated features; returns the mean over
/// tuples of `a` of the minimal cosine distance to a tuple of `b`.
/// Compares C(Ta, w) * C(Tb, w) tuple pairs.
template <typename T>
AlignmentResult tuple_align_distance(const Matrix<T>& a, const Matrix<T>& b,
                                     std::size_t cardinality = 2);

/// Token-wise matching: both videos are aggregated into M instance tokens
/// and the distance is sum_m d(a_m, b_m). Compares M token pairs for any T.
template <typename T>
AlignmentResult team_match_distance(const PatternPool<T>& pool, const Matrix<T>& a,
                                    const Matrix<T>& b);

/// n choose k in 64 bits.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

}  // namespace team
