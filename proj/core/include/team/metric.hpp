#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "team/autodiff.hpp"
#include "team/matrix.hpp"

namespace team {

// Token-wise distances: token m of one set is compared only with token m of
// the other, never across indices.

/// 1 x N row with pd[n] = sum_m -d(support[n]_m, query_m).
template <typename T>
Var<T> positive_distance(std::span<const Var<T>> support, Var<T> query);

template <typename T>
struct NegativeDistance {
  Var<T> nd;                          // 1 x N
  std::vector<std::size_t> argmin;    // class o selected by the min for each n
};

/// nd[n] = min over o != n of sum_m ( -d(S-_{o,m}, Q+_m) - d(S+_{o,m}, Q-_m) ).
/// The gradient flows through the selected o only; ties go to the lowest o.
template <typename T>
NegativeDistance<T> negative_distance(std::span<const Var<T>> support_plus,
                                      std::span<const Var<T>> support_minus, Var<T> query_plus,
                                      Var<T> query_minus);

// Plain-value counterparts.

struct ClassScores {
  std::vector<double> pd;
  std::vector<double> nd;
  std::vector<std::size_t> argmin_class;
};

template <typename T>
std::vector<double> positive_distance(std::span<const Matrix<T>> support, const Matrix<T>& query);

template <typename T>
ClassScores class_scores(std::span<const Matrix<T>> support_plus,
                         std::span<const Matrix<T>> support_minus, const Matrix<T>& query_plus,
                         const Matrix<T>& query_minus);

struct Probabilities {
  std::vector<double> p_plus;
  std::vector<double> p_minus;
  std::vector<double> p_combined;
};

/// p+ = softmax(pd / tau), p- = softmax(nd / tau), p = softmax((pd + nd) / tau).
Probabilities probabilities(std::span<const double> pd, std::span<const double> nd,
                            double temperature = 1.0);

/// -log p+[label] - log p-[label].
double loss(const Probabilities& p, std::size_t label);

}  // namespace team
