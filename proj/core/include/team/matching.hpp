#pragma once

#include <cstddef>
#include <vector>

#include "team/autodiff.hpp"
#include "team/episode.hpp"
#include "team/model.hpp"

namespace team {

enum class Adaptation {
  kNone,       // support tokens come straight from the class readout
  kFixed,      // adaptation with a constant entanglement for every pair
  kEntangled,  // adaptation weighted by per-token prototype similarity
};

/// Which components of the matcher are active. The four ablation rows are
/// {exclusive off, kNone}, {kNone}, {kFixed}, {kEntangled}.
struct MatchingConfig {
  bool use_exclusive = true;
  Adaptation adaptation = Adaptation::kEntangled;
  double fixed_entanglement = 1.0;
  double temperature = 1.0;

  void validate() const;
};

template <typename T>
struct EpisodeGraph {
  std::vector<Var<T>> pd;                // per query, 1 x N
  std::vector<Var<T>> nd;                // per query, 1 x N (empty without exclusive tokens)
  std::vector<std::size_t> predictions;  // per query, argmax of pd + nd
  Var<T> loss;                           // mean over queries, when requested
  bool has_loss = false;
};

/// Support tokens for every class of an episode, after adaptation when enabled.
template <typename T>
struct SupportTokens {
  std::vector<Var<T>> plus;
  std::vector<Var<T>> minus;  // empty without exclusive tokens
};

template <typename T>
SupportTokens<T> support_tokens(const PoolVars<T>& pv, const Episode<T>& episode,
                                const MatchingConfig& config);

/// Records the full matching graph of one episode on `pv.tape`.
template <typename T>
EpisodeGraph<T> forward_episode(const PoolVars<T>& pv, const Episode<T>& episode,
                                const MatchingConfig& config, bool with_loss);

}  // namespace team
