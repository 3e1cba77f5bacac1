#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "team/error.hpp"

namespace team {

/// Floor added to the product of norms in every cosine term.
inline constexpr double kCosineEpsilon = 1e-8;

template <typename T>
T dot(std::span<const T> u, std::span<const T> v) {
  if (u.size() != v.size())
    throw DimensionError("dot: length " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  T acc = 0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

template <typename T>
T norm(std::span<const T> u) {
  return std::sqrt(dot(u, u));
}

/// (u . v) / (|u| |v| + eps), clamped to [-1, 1].
template <typename T>
T cosine_similarity(std::span<const T> u, std::span<const T> v) {
  const T denom = norm(u) * norm(v) + static_cast<T>(kCosineEpsilon);
  return std::clamp(dot(u, v) / denom, T(-1), T(1));
}

/// 1 - cosine_similarity; lies in [0, 2].
template <typename T>
T cosine_distance(std::span<const T> u, std::span<const T> v) {
  return T(1) - cosine_similarity(u, v);
}

/// Numerically stable softmax of a vector.
template <typename T>
std::vector<T> softmax(std::span<const T> x) {
  std::vector<T> out(x.size());
  if (x.empty()) return out;
  const T mx = *std::max_element(x.begin(), x.end());
  T sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

template <typename T>
std::size_t argmax(std::span<const T> x) {
  return static_cast<std::size_t>(std::distance(x.begin(), std::max_element(x.begin(), x.end())));
}

}  // namespace team
