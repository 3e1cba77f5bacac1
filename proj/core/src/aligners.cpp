#include "team/aligners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "team/autodiff.hpp"
#include "team/error.hpp"
#include "team/vector_ops.hpp"

namespace team {

namespace {

template <typename T>
void check_pair(const Matrix<T>& a, const Matrix<T>& b, const char* who) {
  if (a.cols() != b.cols())
    throw DimensionError(std::string(who) + ": feature dims differ (" + a.shape() + " vs " +
                         b.shape() + ")");
  if (a.rows() == 0 || b.rows() == 0) throw ContractError(std::string(who) + ": empty sequence");
}

template <typename T>
std::vector<T> row_norms(const Matrix<T>& m) {
  std::vector<T> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = norm(m.row(r));
  return out;
}

/// a * b^T
template <typename T>
Matrix<T> gram(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> g;
  gemm(a, transpose(b), g);
  return g;
}

/// Increasing index tuples of length w over [0, n), flattened, lexicographic.
std::vector<std::uint32_t> index_tuples(std::size_t n, std::size_t w) {
  std::vector<std::uint32_t> out;
  std::vector<std::uint32_t> cur(w);
  for (std::size_t i = 0; i < w; ++i) cur[i] = static_cast<std::uint32_t>(i);
  while (true) {
    out.insert(out.end(), cur.begin(), cur.end());
    std::size_t i = w;
    while (i > 0 && cur[i - 1] == n - w + (i - 1)) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < w; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

}  // namespace

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <typename T>
AlignmentResult frame_align_distance(const Matrix<T>& a, const Matrix<T>& b) {
  check_pair(a, b, "frame_align_distance");
  const std::size_t ta = a.rows(), tb = b.rows();
  const auto na = row_norms(a), nb = row_norms(b);
  const T eps = static_cast<T>(kCosineEpsilon);

  // One DP row at a time; prev[j] holds D(i-1, j).
  std::vector<double> prev(tb), cur(tb);
  for (std::size_t i = 0; i < ta; ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < tb; ++j) {
      const T cs = std::clamp(dot(ai, b.row(j)) / (na[i] * nb[j] + eps), T(-1), T(1));
      const double cost = static_cast<double>(T(1) - cs);
      double best;
      if (i == 0 && j == 0) best = 0;
      else if (i == 0) best = cur[j - 1];
      else if (j == 0) best = prev[j];
      else best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      cur[j] = best + cost;
    }
    std::swap(prev, cur);
  }
  return {prev[tb - 1], static_cast<std::uint64_t>(ta) * tb};
}

template <typename T>
AlignmentResult tuple_align_distance(const Matrix<T>& a, const Matrix<T>& b,
                                     std::size_t cardinality) {
  check_pair(a, b, "tuple_align_distance");
  if (cardinality == 0) throw ConfigError("tuple cardinality must be positive");
  if (a.rows() < cardinality || b.rows() < cardinality)
    throw ContractError("tuple_align_distance: sequences of " + std::to_string(a.rows()) + " and " +
                        std::to_string(b.rows()) + " frames are shorter than cardinality " +
                        std::to_string(cardinality));
  const std::size_t w = cardinality;
  // The dot product of two concatenated tuples is the sum of frame-pair dot
  // products, so one Gram matrix serves every tuple pair.
  const Matrix<T> g = gram(a, b);
  const auto ta = index_tuples(a.rows(), w);
  const auto tb = index_tuples(b.rows(), w);
  const std::size_t ca = ta.size() / w, cb = tb.size() / w;
  auto tuple_norms = [w](const Matrix<T>& m, const std::vector<std::uint32_t>& tuples) {
    std::vector<T> sq(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) sq[r] = dot(m.row(r), m.row(r));
    std::vector<T> out(tuples.size() / w);
    for (std::size_t t = 0; t < out.size(); ++t) {
      T s = 0;
      for (std::size_t j = 0; j < w; ++j) s += sq[tuples[t * w + j]];
      out[t] = std::sqrt(s);
    }
    return out;
  };
  const auto norm_a = tuple_norms(a, ta);
  const auto norm_b = tuple_norms(b, tb);
  const T eps = static_cast<T>(kCosineEpsilon);

  double total = 0;
  if (w == 2) {
    // b tuples are (k, l) for k < l in lexicographic order.
    const std::size_t nbf = b.rows();
    for (std::size_t t = 0; t < ca; ++t) {
      const T* gi = &g(ta[2 * t], 0);
      const T* gj = &g(ta[2 * t + 1], 0);
      const T na = norm_a[t];
      T best = T(-1);
      std::size_t idx = 0;
      for (std::size_t k = 0; k + 1 < nbf; ++k) {
        const T gik = gi[k];
        const T* nbk = norm_b.data() + idx;
        const std::size_t len = nbf - k - 1;
        for (std::size_t l = 0; l < len; ++l) {
          const T c = (gik + gj[k + 1 + l]) / (na * nbk[l] + eps);
          best = c > best ? c : best;
        }
        idx += len;
      }
      total += static_cast<double>(T(1) - std::min(best, T(1)));
    }
  } else {
    for (std::size_t t = 0; t < ca; ++t) {
      T best = T(-1);
      for (std::size_t u = 0; u < cb; ++u) {
        T d = 0;
        for (std::size_t j = 0; j < w; ++j) d += g(ta[t * w + j], tb[u * w + j]);
        best = std::max(best, d / (norm_a[t] * norm_b[u] + eps));
      }
      total += static_cast<double>(T(1) - std::min(best, T(1)));
    }
  }
  return {total / static_cast<double>(ca), static_cast<std::uint64_t>(ca) * cb};
}

template <typename T>
AlignmentResult team_match_distance(const PatternPool<T>& pool, const Matrix<T>& a,
                                    const Matrix<T>& b) {
  check_pair(a, b, "team_match_distance");
  Tape<T> tape;
  const auto pv = bind_frozen(tape, pool);
  const Var<T> va = aggregate_instance(pv, feature_input(pv, a));
  const Var<T> vb = aggregate_instance(pv, feature_input(pv, b));
  // No further nodes are recorded, so these references stay valid.
  const Matrix<T>& pa = va.value();
  const Matrix<T>& pb = vb.value();
  double dist = 0;
  for (std::size_t m = 0; m < pa.rows(); ++m)
    dist += static_cast<double>(cosine_distance(pa.row(m), pb.row(m)));
  return {dist, static_cast<std::uint64_t>(pa.rows())};
}

#define TEAM_INSTANTIATE_ALIGNERS(T)                                                          \
  template AlignmentResult frame_align_distance<T>(const Matrix<T>&, const Matrix<T>&);       \
  template AlignmentResult tuple_align_distance<T>(const Matrix<T>&, const Matrix<T>&,        \
                                                   std::size_t);                              \
  template AlignmentResult team_match_distance<T>(const PatternPool<T>&, const Matrix<T>&,    \
                                                  const Matrix<T>&);

TEAM_INSTANTIATE_ALIGNERS(float)
TEAM_INSTANTIATE_ALIGNERS(double)

}  // namespace team
