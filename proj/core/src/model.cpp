#include "team/model.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>

#include "team/error.hpp"

namespace team {

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("model dim must be positive");
  if (tokens == 0) throw ConfigError("model must have at least one pattern token");
  if (mlp_ratio == 0) throw ConfigError("mlp ratio must be positive");
}

namespace {

constexpr std::array<TokenPreset, 14> kTokenPresets{{
    {"hmdb51", "resnet", 1, 60},   {"hmdb51", "resnet", 5, 70},
    {"hmdb51", "vit", 1, 50},      {"hmdb51", "vit", 5, 60},
    {"kinetics", "resnet", 1, 60}, {"kinetics", "resnet", 5, 80},
    {"kinetics", "vit", 1, 80},    {"kinetics", "vit", 5, 80},
    {"ucf101", "resnet", 1, 60},   {"ucf101", "resnet", 5, 80},
    {"ucf101", "vit", 1, 70},      {"ucf101", "vit", 5, 70},
    {"ssv2-small", "vit", 1, 50},  {"ssv2-small", "vit", 5, 80},
}};

template <typename T>
void glorot_uniform(Matrix<T>& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : m.flat()) v = static_cast<T>(dist(rng));
}

}  // namespace

std::span<const TokenPreset> token_presets() { return kTokenPresets; }

template <typename T>
PatternPool<T>::PatternPool(const ModelConfig& config) : config_(config) {
  config_.validate();
  const std::size_t d = config.dim, m = config.tokens, h = config.mlp_ratio * config.dim;
  tokens = Parameter<T>("pattern_tokens", Matrix<T>(m, d));
  w_q = Parameter<T>("attn.w_q", Matrix<T>(d, d));
  w_k = Parameter<T>("attn.w_k", Matrix<T>(d, d));
  w_v = Parameter<T>("attn.w_v", Matrix<T>(d, d));
  w_o = Parameter<T>("attn.w_o", Matrix<T>(d, d));
  fc1_w = Parameter<T>("mlp.fc1.weight", Matrix<T>(d, h));
  fc1_b = Parameter<T>("mlp.fc1.bias", Matrix<T>(1, h));
  fc2_w = Parameter<T>("mlp.fc2.weight", Matrix<T>(h, d));
  fc2_b = Parameter<T>("mlp.fc2.bias", Matrix<T>(1, d));
}

template <typename T>
PatternPool<T>::PatternPool(const ModelConfig& config, std::uint64_t seed)
    : PatternPool(config) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> token_dist(0.0, 0.02);
  for (auto& v : tokens.value.flat()) v = static_cast<T>(token_dist(rng));
  for (Parameter<T>* p : {&w_q, &w_k, &w_v, &w_o, &fc1_w, &fc2_w}) glorot_uniform(p->value, rng);
}

template <typename T>
std::vector<Parameter<T>*> PatternPool<T>::parameters() {
  return {&tokens, &w_q, &w_k, &w_v, &w_o, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
}

template <typename T>
std::vector<const Parameter<T>*> PatternPool<T>::parameters() const {
  return {&tokens, &w_q, &w_k, &w_v, &w_o, &fc1_w, &fc1_b, &fc2_w, &fc2_b};
}

namespace {

template <typename T>
void bind_query(PoolVars<T>& pv) {
  pv.query = scale(matmul(pv.tokens, pv.w_q), T(1) / std::sqrt(static_cast<T>(pv.config->dim)));
}

}  // namespace

template <typename T>
PoolVars<T> bind_trainable(Tape<T>& tape, PatternPool<T>& pool) {
  PoolVars<T> pv;
  pv.tape = &tape;
  pv.config = &pool.config();
  pv.tokens = tape.parameter(pool.tokens);
  pv.w_q = tape.parameter(pool.w_q);
  pv.w_k = tape.parameter(pool.w_k);
  pv.w_v = tape.parameter(pool.w_v);
  pv.w_o = tape.parameter(pool.w_o);
  pv.fc1_w = tape.parameter(pool.fc1_w);
  pv.fc1_b = tape.parameter(pool.fc1_b);
  pv.fc2_w = tape.parameter(pool.fc2_w);
  pv.fc2_b = tape.parameter(pool.fc2_b);
  bind_query(pv);
  return pv;
}

template <typename T>
PoolVars<T> bind_frozen(Tape<T>& tape, const PatternPool<T>& pool) {
  PoolVars<T> pv;
  pv.tape = &tape;
  pv.config = &pool.config();
  pv.tokens = tape.constant_ref(pool.tokens.value);
  pv.w_q = tape.constant_ref(pool.w_q.value);
  pv.w_k = tape.constant_ref(pool.w_k.value);
  pv.w_v = tape.constant_ref(pool.w_v.value);
  pv.w_o = tape.constant_ref(pool.w_o.value);
  pv.fc1_w = tape.constant_ref(pool.fc1_w.value);
  pv.fc1_b = tape.constant_ref(pool.fc1_b.value);
  pv.fc2_w = tape.constant_ref(pool.fc2_w.value);
  pv.fc2_b = tape.constant_ref(pool.fc2_b.value);
  bind_query(pv);
  return pv;
}

template <typename T>
Matrix<T> sinusoidal_encoding(std::size_t frames, std::size_t dim) {
  Matrix<T> pe(frames, dim);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate =
          std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(t) * rate;
      pe(t, i) = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename T>
Var<T> feature_input(const PoolVars<T>& pv, const Matrix<T>& features) {
  if (features.rows() == 0) throw ContractError("feature sequence has no frames");
  if (features.cols() != pv.config->dim)
    throw DimensionError("feature dim " + std::to_string(features.cols()) +
                         " does not match model dim " + std::to_string(pv.config->dim));
  if (!pv.config->positional_encoding) return pv.tape->constant_ref(features);
  Matrix<T> f = features;
  const Matrix<T> pe = sinusoidal_encoding<T>(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] += pe.data()[i];
  return pv.tape->constant(std::move(f));
}

template <typename T>
AttentionResult<T> cross_attend(const PoolVars<T>& pv, Var<T> frames) {
  if (frames.cols() != pv.config->dim)
    throw DimensionError("cross_attend: frames " + frames.value().shape() +
                         " against model dim " + std::to_string(pv.config->dim));
  Var<T> k = matmul(frames, pv.w_k);
  Var<T> v = matmul(frames, pv.w_v);
  Var<T> weights = softmax_rows(matmul_nt(pv.query, k));
  Var<T> out = matmul(matmul(weights, v), pv.w_o);
  return {out, weights};
}

template <typename T>
Var<T> mlp(const PoolVars<T>& pv, Var<T> x) {
  Var<T> h = relu(add_row_bias(matmul(x, pv.fc1_w), pv.fc1_b));
  return add_row_bias(matmul(h, pv.fc2_w), pv.fc2_b);
}

template <typename T>
Var<T> aggregate_from_readout(const PoolVars<T>& pv, Var<T> readout, TokenKind kind) {
  Var<T> base = kind == TokenKind::kInstance ? add(pv.tokens, readout) : sub(pv.tokens, readout);
  return add(base, mlp(pv, base));
}

template <typename T>
Var<T> aggregate_instance(const PoolVars<T>& pv, Var<T> frames) {
  return aggregate_from_readout(pv, cross_attend(pv, frames).output, TokenKind::kInstance);
}

template <typename T>
Var<T> aggregate_exclusive(const PoolVars<T>& pv, Var<T> frames) {
  return aggregate_from_readout(pv, cross_attend(pv, frames).output, TokenKind::kExclusive);
}

template <typename T>
Var<T> class_readout(const PoolVars<T>& pv, std::span<const Matrix<T>* const> shots) {
  if (shots.empty()) throw ContractError("class_readout: class has no support shots");
  std::vector<Var<T>> outs;
  outs.reserve(shots.size());
  for (const Matrix<T>* shot : shots)
    outs.push_back(cross_attend(pv, feature_input(pv, *shot)).output);
  if (outs.size() == 1) return outs.front();
  return average(outs);
}

template <typename T>
EntanglementMatrix<T> entanglement(std::span<const Var<T>> prototypes) {
  const std::size_t n = prototypes.size();
  if (n < 2) throw ContractError("entanglement needs at least two classes, got " + std::to_string(n));
  EntanglementMatrix<T> e;
  e.classes = n;
  e.cells.resize(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      Var<T> c = row_cosine(prototypes[a], prototypes[b]);
      e.cells[a * n + b] = c;
      e.cells[b * n + a] = c;
    }
  return e;
}

template <typename T>
EntanglementMatrix<T> constant_entanglement(Tape<T>& tape, std::size_t classes,
                                            std::size_t tokens, T value) {
  EntanglementMatrix<T> e;
  e.classes = classes;
  e.cells.assign(classes * classes, tape.constant(Matrix<T>(tokens, 1, value)));
  return e;
}

template <typename T>
std::vector<Var<T>> adapt_support(const PoolVars<T>& pv, std::span<const Var<T>> readouts,
                                  const EntanglementMatrix<T>& e, TokenKind kind) {
  const std::size_t n = readouts.size();
  if (n < 2) throw ContractError("adapt_support needs at least two classes, got " + std::to_string(n));
  if (e.classes != n)
    throw DimensionError("adapt_support: entanglement for " + std::to_string(e.classes) +
                         " classes, readouts for " + std::to_string(n));
  std::vector<Var<T>> adapted;
  adapted.reserve(n);
  std::vector<Var<T>> terms;
  for (std::size_t a = 0; a < n; ++a) {
    terms.clear();
    for (std::size_t o = 0; o < n; ++o) {
      if (o == a) continue;
      Var<T> ent = e.at(a, o);
      Var<T> own = row_scale(readouts[a], affine(ent, T(1), T(1)));
      Var<T> other = row_scale(readouts[o], ent);
      Var<T> shifted = kind == TokenKind::kInstance ? sub(add(pv.tokens, own), other)
                                                    : add(sub(pv.tokens, own), other);
      terms.push_back(add(shifted, mlp(pv, shifted)));
    }
    adapted.push_back(terms.size() == 1 ? terms.front() : average(terms));
  }
  return adapted;
}

template <typename T>
Matrix<T> cross_attend(const PatternPool<T>& pool, const Matrix<T>& features) {
  Tape<T> tape;
  auto pv = bind_frozen(tape, pool);
  return cross_attend(pv, feature_input(pv, features)).output.value();
}

template <typename T>
Matrix<T> aggregate_instance(const PatternPool<T>& pool, const Matrix<T>& features) {
  Tape<T> tape;
  auto pv = bind_frozen(tape, pool);
  return aggregate_instance(pv, feature_input(pv, features)).value();
}

template <typename T>
Matrix<T> aggregate_exclusive(const PatternPool<T>& pool, const Matrix<T>& features) {
  Tape<T> tape;
  auto pv = bind_frozen(tape, pool);
  return aggregate_exclusive(pv, feature_input(pv, features)).value();
}

template <typename T>
Matrix<T> export_attention(const PatternPool<T>& pool, const Matrix<T>& features) {
  Tape<T> tape;
  auto pv = bind_frozen(tape, pool);
  return cross_attend(pv, feature_input(pv, features)).weights.value();
}

#define TEAM_INSTANTIATE_MODEL(T)                                                             \
  template class PatternPool<T>;                                                              \
  template PoolVars<T> bind_trainable<T>(Tape<T>&, PatternPool<T>&);                          \
  template PoolVars<T> bind_frozen<T>(Tape<T>&, const PatternPool<T>&);                       \
  template Matrix<T> sinusoidal_encoding<T>(std::size_t, std::size_t);                        \
  template Var<T> feature_input<T>(const PoolVars<T>&, const Matrix<T>&);                     \
  template AttentionResult<T> cross_attend<T>(const PoolVars<T>&, Var<T>);                    \
  template Var<T> mlp<T>(const PoolVars<T>&, Var<T>);                                         \
  template Var<T> aggregate_from_readout<T>(const PoolVars<T>&, Var<T>, TokenKind);           \
  template Var<T> aggregate_instance<T>(const PoolVars<T>&, Var<T>);                          \
  template Var<T> aggregate_exclusive<T>(const PoolVars<T>&, Var<T>);                         \
  template Var<T> class_readout<T>(const PoolVars<T>&, std::span<const Matrix<T>* const>);    \
  template EntanglementMatrix<T> entanglement<T>(std::span<const Var<T>>);                    \
  template EntanglementMatrix<T> constant_entanglement<T>(Tape<T>&, std::size_t, std::size_t, \
                                                          T);                                 \
  template std::vector<Var<T>> adapt_support<T>(const PoolVars<T>&, std::span<const Var<T>>,  \
                                                const EntanglementMatrix<T>&, TokenKind);     \
  template Matrix<T> cross_attend<T>(const PatternPool<T>&, const Matrix<T>&);                \
  template Matrix<T> aggregate_instance<T>(const PatternPool<T>&, const Matrix<T>&);          \
  template Matrix<T> aggregate_exclusive<T>(const PatternPool<T>&, const Matrix<T>&);         \
  template Matrix<T> export_attention<T>(const PatternPool<T>&, const Matrix<T>&);

TEAM_INSTANTIATE_MODEL(float)
TEAM_INSTANTIATE_MODEL(double)

}  // namespace team
