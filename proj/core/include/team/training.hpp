#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "team/dataset.hpp"
#include "team/matching.hpp"
#include "team/model.hpp"

namespace team {

struct TrainConfig {
  std::size_t iterations = 10000;
  double lr = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t queries = 1;
  ModelConfig model;
  MatchingConfig matching;

  void validate() const;
};

struct TrainResult {
  PatternPool<float> pool;
  std::vector<double> losses;  // one entry per iteration
};

using ProgressFn = std::function<void(std::size_t iteration, double loss)>;

/// Initialises a pool from `config.seed` and trains it episodically with
/// momentum SGD. Throws NumericError if a loss turns non-finite.
TrainResult train(const FeatureDataset& dataset, const TrainConfig& config,
                  const ProgressFn& progress = {});

/// Continues training an existing pool in place; returns the loss curve.
std::vector<double> train_pool(PatternPool<float>& pool, const FeatureDataset& dataset,
                               const TrainConfig& config, const ProgressFn& progress = {});

struct EvalConfig {
  std::size_t episodes = 1000;
  std::size_t way = 5;
  std::size_t shot = 1;
  std::size_t queries = 1;
  std::uint64_t seed = 0;
  MatchingConfig matching;
  /// Worker threads; 0 means one per hardware core.
  std::size_t threads = 0;
};

struct EvalResult {
  std::size_t episodes = 0;
  std::size_t correct = 0;
  std::size_t predictions = 0;
  double accuracy = 0;
  double ci_low = 0;   // 95% normal-approximation binomial interval
  double ci_high = 0;
};

/// Mean query accuracy over independently seeded episodes. The pool is only
/// read; results do not depend on the thread count.
EvalResult evaluate(const PatternPool<float>& pool, const FeatureDataset& dataset,
                    const EvalConfig& config);

/// Thread cap from TEAM_THREADS, or 0 (all cores) when unset or invalid.
std::size_t threads_from_env();

/// rng for episode `index` of a run seeded with `seed`.
std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace team
