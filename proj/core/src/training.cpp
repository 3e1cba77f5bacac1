#include "team/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "team/error.hpp"
#include "team/optim.hpp"

namespace team {

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (way < 2) throw ConfigError("training episodes need way >= 2");
  if (shot == 0 || queries == 0) throw ConfigError("training episodes need shot >= 1 and queries >= 1");
  model.validate();
  matching.validate();
}

std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<double> train_pool(PatternPool<float>& pool, const FeatureDataset& dataset,
                               const TrainConfig& config, const ProgressFn& progress) {
  config.validate();
  if (dataset.dim != pool.dim())
    throw DimensionError("dataset dim " + std::to_string(dataset.dim) + " vs model dim " +
                         std::to_string(pool.dim()));
  pool.set_positional_encoding(config.model.positional_encoding);
  std::mt19937_64 rng = episode_rng(config.seed, 0xE915'0DE5ull);
  const auto params = pool.parameters();
  for (Parameter<float>* p : params) p->zero_grad();

  std::vector<double> losses;
  losses.reserve(config.iterations);
  Tape<float> tape;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const Episode<float> ep = sample_episode(dataset, config.way, config.shot, config.queries, rng);
    tape.clear();
    const auto pv = bind_trainable(tape, pool);
    const auto graph = forward_episode(pv, ep, config.matching, true);
    const double loss = graph.loss.scalar();
    if (!std::isfinite(loss))
      throw NumericError("non-finite loss at iteration " + std::to_string(it));
    tape.backward(graph.loss);
    sgd_step<float>(params, static_cast<float>(config.lr), static_cast<float>(config.momentum));
    losses.push_back(loss);
    if (progress) progress(it, loss);
  }
  return losses;
}

TrainResult train(const FeatureDataset& dataset, const TrainConfig& config,
                  const ProgressFn& progress) {
  config.validate();
  TrainResult r{PatternPool<float>(config.model, config.seed), {}};
  r.losses = train_pool(r.pool, dataset, config, progress);
  return r;
}

EvalResult evaluate(const PatternPool<float>& pool, const FeatureDataset& dataset,
                    const EvalConfig& config) {
  config.matching.validate();
  if (dataset.dim != pool.dim())
    throw DimensionError("dataset dim " + std::to_string(dataset.dim) + " vs model dim " +
                         std::to_string(pool.dim()));
  if (config.episodes == 0) throw ConfigError("evaluation needs at least one episode");
  if (config.queries == 0) throw ConfigError("evaluation needs at least one query per class");

  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, config.episodes);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> correct{0}, total{0};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    Tape<float> tape;
    std::size_t local_correct = 0, local_total = 0;
    try {
      for (std::size_t e = next++; e < config.episodes; e = next++) {
        auto rng = episode_rng(config.seed, e);
        const auto ep = sample_episode(dataset, config.way, config.shot, config.queries, rng);
        tape.clear();
        const auto pv = bind_frozen(tape, pool);
        const auto graph = forward_episode(pv, ep, config.matching, false);
        for (std::size_t q = 0; q < ep.queries.size(); ++q)
          local_correct += graph.predictions[q] == ep.queries[q].label;
        local_total += ep.queries.size();
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = config.episodes;
    }
    correct += local_correct;
    total += local_total;
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool_threads;
    for (std::size_t t = 0; t < threads; ++t) pool_threads.emplace_back(worker);
    for (auto& t : pool_threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EvalResult r;
  r.episodes = config.episodes;
  r.correct = correct;
  r.predictions = total;
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.predictions);
  const double half = 1.96 * std::sqrt(r.accuracy * (1.0 - r.accuracy) / static_cast<double>(r.predictions));
  r.ci_low = std::max(0.0, r.accuracy - half);
  r.ci_high = std::min(1.0, r.accuracy + half);
  return r;
}

std::size_t threads_from_env() {
  const char* v = std::getenv("TEAM_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (end == v || *end != '\0') return 0;
  return static_cast<std::size_t>(n);
}

}  // namespace team
