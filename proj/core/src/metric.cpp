#include "team/metric.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "team/error.hpp"
#include "team/vector_ops.hpp"

namespace team {

namespace {

void check_classes(std::size_t support, std::size_t other, const char* what) {
  if (support != other)
    throw DimensionError(std::string(what) + ": " + std::to_string(support) + " vs " +
                         std::to_string(other) + " classes");
}

template <typename T>
void check_tokens(const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b))
    throw DimensionError("token sets differ in shape: " + a.shape() + " vs " + b.shape());
}

/// Lowest-index minimum and runner-up of `terms`.
std::pair<std::size_t, std::size_t> two_smallest(std::span<const double> terms) {
  std::size_t best = 0;
  for (std::size_t o = 1; o < terms.size(); ++o)
    if (terms[o] < terms[best]) best = o;
  std::size_t second = best == 0 ? 1 : 0;
  for (std::size_t o = 0; o < terms.size(); ++o)
    if (o != best && terms[o] < terms[second]) second = o;
  return {best, second};
}

}  // namespace

template <typename T>
Var<T> positive_distance(std::span<const Var<T>> support, Var<T> query) {
  if (support.empty()) throw ContractError("positive_distance: no support classes");
  const T tokens = static_cast<T>(query.rows());
  std::vector<Var<T>> cols;
  cols.reserve(support.size());
  for (const auto& s : support) {
    check_tokens(s.value(), query.value());
    // sum_m -(1 - cos) = sum_m cos - M
    cols.push_back(affine(sum(row_cosine(s, query)), T(1), -tokens));
  }
  return concat_cols(cols);
}

template <typename T>
NegativeDistance<T> negative_distance(std::span<const Var<T>> support_plus,
                                      std::span<const Var<T>> support_minus, Var<T> query_plus,
                                      Var<T> query_minus) {
  const std::size_t n = support_plus.size();
  check_classes(n, support_minus.size(), "negative_distance");
  if (n < 2)
    throw ContractError("negative_distance needs at least two classes, got " + std::to_string(n));
  const T tokens = static_cast<T>(query_plus.rows());
  std::vector<Var<T>> terms;
  std::vector<double> values;
  terms.reserve(n);
  values.reserve(n);
  for (std::size_t o = 0; o < n; ++o) {
    check_tokens(support_minus[o].value(), query_plus.value());
    check_tokens(support_plus[o].value(), query_minus.value());
    Var<T> cos_sum = add(sum(row_cosine(support_minus[o], query_plus)),
                         sum(row_cosine(support_plus[o], query_minus)));
    terms.push_back(affine(cos_sum, T(1), T(-2) * tokens));
    values.push_back(static_cast<double>(terms.back().scalar()));
  }
  const auto [best, second] = two_smallest(values);
  NegativeDistance<T> out;
  std::vector<Var<T>> cols;
  cols.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t o = c == best ? second : best;
    out.argmin.push_back(o);
    cols.push_back(terms[o]);
  }
  out.nd = concat_cols(cols);
  return out;
}

template <typename T>
std::vector<double> positive_distance(std::span<const Matrix<T>> support, const Matrix<T>& query) {
  std::vector<double> pd;
  pd.reserve(support.size());
  for (const auto& s : support) {
    check_tokens(s, query);
    double acc = 0;
    for (std::size_t m = 0; m < query.rows(); ++m)
      acc -= static_cast<double>(cosine_distance(s.row(m), query.row(m)));
    pd.push_back(acc);
  }
  return pd;
}

template <typename T>
ClassScores class_scores(std::span<const Matrix<T>> support_plus,
                         std::span<const Matrix<T>> support_minus, const Matrix<T>& query_plus,
                         const Matrix<T>& query_minus) {
  const std::size_t n = support_plus.size();
  check_classes(n, support_minus.size(), "class_scores");
  if (n < 2)
    throw ContractError("negative_distance needs at least two classes, got " + std::to_string(n));
  ClassScores scores;
  scores.pd = positive_distance(support_plus, query_plus);
  std::vector<double> terms(n, 0.0);
  for (std::size_t o = 0; o < n; ++o) {
    check_tokens(support_minus[o], query_plus);
    check_tokens(support_plus[o], query_minus);
    for (std::size_t m = 0; m < query_plus.rows(); ++m)
      terms[o] -= static_cast<double>(cosine_distance(support_minus[o].row(m), query_plus.row(m))) +
                  static_cast<double>(cosine_distance(support_plus[o].row(m), query_minus.row(m)));
  }
  const auto [best, second] = two_smallest(terms);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t o = c == best ? second : best;
    scores.argmin_class.push_back(o);
    scores.nd.push_back(terms[o]);
  }
  return scores;
}

Probabilities probabilities(std::span<const double> pd, std::span<const double> nd,
                            double temperature) {
  if (!(temperature > 0.0))
    throw ConfigError("temperature must be positive, got " + std::to_string(temperature));
  if (pd.size() != nd.size())
    throw DimensionError("probabilities: pd has " + std::to_string(pd.size()) + " classes, nd " +
                         std::to_string(nd.size()));
  std::vector<double> a(pd.size()), b(pd.size()), c(pd.size());
  for (std::size_t i = 0; i < pd.size(); ++i) {
    a[i] = pd[i] / temperature;
    b[i] = nd[i] / temperature;
    c[i] = (pd[i] + nd[i]) / temperature;
  }
  return {softmax<double>(a), softmax<double>(b), softmax<double>(c)};
}

double loss(const Probabilities& p, std::size_t label) {
  if (label >= p.p_plus.size())
    throw ContractError("label " + std::to_string(label) + " out of range for " +
                        std::to_string(p.p_plus.size()) + " classes");
  return -std::log(p.p_plus[label]) - std::log(p.p_minus[label]);
}

#define TEAM_INSTANTIATE_METRIC(T)                                                          \
  template Var<T> positive_distance<T>(std::span<const Var<T>>, Var<T>);                    \
  template NegativeDistance<T> negative_distance<T>(std::span<const Var<T>>,                \
                                                    std::span<const Var<T>>, Var<T>, Var<T>); \
  template std::vector<double> positive_distance<T>(std::span<const Matrix<T>>,             \
                                                    const Matrix<T>&);                      \
  template ClassScores class_scores<T>(std::span<const Matrix<T>>, std::span<const Matrix<T>>, \
                                       const Matrix<T>&, const Matrix<T>&);

TEAM_INSTANTIATE_METRIC(float)
TEAM_INSTANTIATE_METRIC(double)

}  // namespace team
