#include "team/matching.hpp"

#include <string>

#include "team/error.hpp"
#include "team/metric.hpp"

namespace team {

void MatchingConfig::validate() const {
  if (!(temperature > 0.0))
    throw ConfigError("temperature must be positive, got " + std::to_string(temperature));
}

template <typename T>
SupportTokens<T> support_tokens(const PoolVars<T>& pv, const Episode<T>& episode,
                                const MatchingConfig& config) {
  const std::size_t n = episode.support.size();
  std::vector<Var<T>> readouts;
  readouts.reserve(n);
  for (const auto& shots : episode.support) readouts.push_back(class_readout<T>(pv, shots));

  auto unadapted = [&](TokenKind kind) {
    std::vector<Var<T>> out;
    out.reserve(n);
    for (const auto& r : readouts) out.push_back(aggregate_from_readout(pv, r, kind));
    return out;
  };

  SupportTokens<T> s;
  if (config.adaptation == Adaptation::kNone || n < 2) {
    s.plus = unadapted(TokenKind::kInstance);
    if (config.use_exclusive) s.minus = unadapted(TokenKind::kExclusive);
    return s;
  }
  if (config.adaptation == Adaptation::kFixed) {
    const auto e = constant_entanglement(*pv.tape, n, pv.config->tokens,
                                         static_cast<T>(config.fixed_entanglement));
    s.plus = adapt_support<T>(pv, readouts, e, TokenKind::kInstance);
    if (config.use_exclusive) s.minus = adapt_support<T>(pv, readouts, e, TokenKind::kExclusive);
    return s;
  }
  const auto protos_plus = unadapted(TokenKind::kInstance);
  s.plus = adapt_support<T>(pv, readouts, entanglement<T>(protos_plus), TokenKind::kInstance);
  if (config.use_exclusive) {
    const auto protos_minus = unadapted(TokenKind::kExclusive);
    s.minus = adapt_support<T>(pv, readouts, entanglement<T>(protos_minus), TokenKind::kExclusive);
  }
  return s;
}

template <typename T>
EpisodeGraph<T> forward_episode(const PoolVars<T>& pv, const Episode<T>& episode,
                                const MatchingConfig& config, bool with_loss) {
  config.validate();
  const std::size_t n = episode.support.size();
  if (n == 0) throw ContractError("episode has no classes");
  if (with_loss && n < 2) throw ContractError("training loss needs at least two classes");
  const bool exclusive = config.use_exclusive && n >= 2;
  const T inv_tau = static_cast<T>(1.0 / config.temperature);

  const SupportTokens<T> support = support_tokens(pv, episode, config);
  EpisodeGraph<T> g;
  std::vector<Var<T>> losses;
  for (const auto& q : episode.queries) {
    const Var<T> ca = cross_attend(pv, feature_input(pv, *q.features)).output;
    const Var<T> q_plus = aggregate_from_readout(pv, ca, TokenKind::kInstance);
    const Var<T> pd = positive_distance<T>(support.plus, q_plus);
    g.pd.push_back(pd);

    std::vector<T> logits(pd.value().flat().begin(), pd.value().flat().end());
    Var<T> nd;
    if (exclusive) {
      const Var<T> q_minus = aggregate_from_readout(pv, ca, TokenKind::kExclusive);
      nd = negative_distance<T>(support.plus, support.minus, q_plus, q_minus).nd;
      g.nd.push_back(nd);
      for (std::size_t c = 0; c < n; ++c) logits[c] += nd.value()(0, c);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < n; ++c)
      if (logits[c] > logits[best]) best = c;
    g.predictions.push_back(best);

    if (with_loss) {
      if (q.label >= n)
        throw ContractError("query label " + std::to_string(q.label) + " out of range for " +
                            std::to_string(n) + " classes");
      Var<T> l = scale(pick(log_softmax_rows(scale(pd, inv_tau)), 0, q.label), T(-1));
      if (exclusive)
        l = sub(l, pick(log_softmax_rows(scale(nd, inv_tau)), 0, q.label));
      losses.push_back(l);
    }
  }
  if (with_loss) {
    if (losses.empty()) throw ContractError("training episode has no queries");
    g.loss = losses.size() == 1 ? losses.front() : average(losses);
    g.has_loss = true;
  }
  return g;
}

#define TEAM_INSTANTIATE_MATCHING(T)                                                     \
  template SupportTokens<T> support_tokens<T>(const PoolVars<T>&, const Episode<T>&,     \
                                              const MatchingConfig&);                    \
  template EpisodeGraph<T> forward_episode<T>(const PoolVars<T>&, const Episode<T>&,     \
                                              const MatchingConfig&, bool);

TEAM_INSTANTIATE_MATCHING(float)
TEAM_INSTANTIATE_MATCHING(double)

}  // namespace team
