#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "team/autodiff.hpp"
#include "team/matrix.hpp"
#include "team/parameter.hpp"

namespace team {

struct ModelConfig {
  std::size_t dim = 64;        // D, feature width
  std::size_t tokens = 8;      // M, pattern tokens in the pool
  std::size_t mlp_ratio = 2;   // r, hidden width of the MLP is r * D
  bool positional_encoding = false;

  void validate() const;
};

/// Named presets for the pool size used at full scale, keyed by dataset,
/// backbone and shot count.
struct TokenPreset {
  const char* dataset;
  const char* backbone;
  std::size_t shots;
  std::size_t tokens;
};
std::span<const TokenPreset> token_presets();

/// The learnable pattern pool together with the cross-attention and MLP
/// weights. One pool is shared by the instance, exclusive and adaptive paths.
template <typename T>
class PatternPool {
 public:
  PatternPool() = default;
  /// Randomly initialised pool: tokens ~ N(0, 0.02^2), projections
  /// Glorot-uniform, biases zero.
  PatternPool(const ModelConfig& config, std::uint64_t seed);
  /// Pool with every parameter zero.
  static PatternPool zeros(const ModelConfig& config) { return PatternPool(config); }

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return config_.dim; }
  std::size_t num_tokens() const noexcept { return config_.tokens; }
  /// Toggle positional encoding on frames; not stored in checkpoints.
  void set_positional_encoding(bool on) { config_.positional_encoding = on; }

  /// Parameters in their canonical (checkpoint) order.
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;

  template <typename U>
  PatternPool<U> cast() const {
    PatternPool<U> out;
    out.config_ = config_;
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i)
      *dst[i] = Parameter<U>(src[i]->name, src[i]->value.template cast<U>());
    return out;
  }

  Parameter<T> tokens;  // M x D
  Parameter<T> w_q, w_k, w_v, w_o;  // D x D
  Parameter<T> fc1_w;  // D x rD
  Parameter<T> fc1_b;  // 1 x rD
  Parameter<T> fc2_w;  // rD x D
  Parameter<T> fc2_b;  // 1 x D

 private:
  template <typename U>
  friend class PatternPool;
  /// Allocates zero-valued parameters of the right shapes.
  explicit PatternPool(const ModelConfig& config);

  ModelConfig config_;
};

/// A pool's parameters bound to one tape.
template <typename T>
struct PoolVars {
  Tape<T>* tape = nullptr;
  const ModelConfig* config = nullptr;
  Var<T> tokens, w_q, w_k, w_v, w_o, fc1_w, fc1_b, fc2_w, fc2_b;
  Var<T> query;  // P W_q / sqrt(D), shared by every video attended through this binding
};

/// Binds for training: gradients flow into the pool's parameters.
template <typename T>
PoolVars<T> bind_trainable(Tape<T>& tape, PatternPool<T>& pool);
/// Binds read-only; no gradient is ever written to the pool.
template <typename T>
PoolVars<T> bind_frozen(Tape<T>& tape, const PatternPool<T>& pool);

/// T x D sinusoidal table (sin on even columns, cos on odd).
template <typename T>
Matrix<T> sinusoidal_encoding(std::size_t frames, std::size_t dim);

/// Records one video's features (plus positional encoding when enabled).
template <typename T>
Var<T> feature_input(const PoolVars<T>& pv, const Matrix<T>& features);

template <typename T>
struct AttentionResult {
  Var<T> output;   // M x D, CA(P_m, F, F) per row
  Var<T> weights;  // M x T, rows sum to one
};

/// Single-head scaled dot-product cross-attention of the pattern tokens
/// over the frames of `frames`.
template <typename T>
AttentionResult<T> cross_attend(const PoolVars<T>& pv, Var<T> frames);

/// Two-layer ReLU MLP applied row-wise.
template <typename T>
Var<T> mlp(const PoolVars<T>& pv, Var<T> x);

enum class TokenKind { kInstance, kExclusive };

/// Residual aggregation from a cross-attention readout:
/// P' = P +/- readout; out = P' + MLP(P').
template <typename T>
Var<T> aggregate_from_readout(const PoolVars<T>& pv, Var<T> readout, TokenKind kind);

template <typename T>
Var<T> aggregate_instance(const PoolVars<T>& pv, Var<T> frames);
template <typename T>
Var<T> aggregate_exclusive(const PoolVars<T>& pv, Var<T> frames);

/// Mean of the per-shot cross-attention outputs of one class.
template <typename T>
Var<T> class_readout(const PoolVars<T>& pv, std::span<const Matrix<T>* const> shots);

/// Per-token cosine similarity between every pair of class prototypes.
/// cell(n, o) is an M x 1 column; the diagonal is left unset.
template <typename T>
struct EntanglementMatrix {
  std::size_t classes = 0;
  std::vector<Var<T>> cells;

  Var<T> at(std::size_t n, std::size_t o) const { return cells[n * classes + o]; }
  /// Entry E_{n,o,m} as a plain value.
  T value(std::size_t n, std::size_t o, std::size_t m) const { return at(n, o).value()(m, 0); }
};

template <typename T>
EntanglementMatrix<T> entanglement(std::span<const Var<T>> prototypes);

/// Replaces every off-diagonal cell with a constant column (ablations and
/// reduction checks).
template <typename T>
EntanglementMatrix<T> constant_entanglement(Tape<T>& tape, std::size_t classes,
                                            std::size_t tokens, T value);

/// Episode adaptation of support tokens. For each class n, averages over the
/// other classes o the residual aggregation of
///   P + (1 + E) CA_n - E CA_o   (instance)  or
///   P - (1 + E) CA_n + E CA_o   (exclusive).
template <typename T>
std::vector<Var<T>> adapt_support(const PoolVars<T>& pv, std::span<const Var<T>> readouts,
                                  const EntanglementMatrix<T>& e, TokenKind kind);

// Convenience forward-only wrappers on plain matrices.

template <typename T>
Matrix<T> cross_attend(const PatternPool<T>& pool, const Matrix<T>& features);
template <typename T>
Matrix<T> aggregate_instance(const PatternPool<T>& pool, const Matrix<T>& features);
template <typename T>
Matrix<T> aggregate_exclusive(const PatternPool<T>& pool, const Matrix<T>& features);
/// M x T attention weights of the instance aggregation.
template <typename T>
Matrix<T> export_attention(const PatternPool<T>& pool, const Matrix<T>& features);

}  // namespace team
