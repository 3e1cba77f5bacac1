#include "team/episode.hpp"

#include <numeric>
#include <string>

#include "team/error.hpp"

namespace team {

namespace {

/// First `k` entries of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> choose(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> d(i, n - 1);
    std::swap(idx[i], idx[d(rng)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

Episode<float> sample_episode(const FeatureDataset& dataset, std::size_t way, std::size_t shot,
                              std::size_t queries_per_class, std::mt19937_64& rng) {
  if (way == 0 || shot == 0) throw ConfigError("episode needs way >= 1 and shot >= 1");
  if (dataset.classes.size() < way)
    throw ContractError("dataset has " + std::to_string(dataset.classes.size()) +
                        " classes, episode needs " + std::to_string(way));
  const std::size_t per_class = shot + queries_per_class;
  for (const auto& c : dataset.classes)
    if (c.videos.size() < per_class)
      throw ContractError("class '" + c.name + "' has " + std::to_string(c.videos.size()) +
                          " videos, episode needs " + std::to_string(per_class) + " per class");

  Episode<float> ep;
  ep.way = way;
  ep.shot = shot;
  ep.queries_per_class = queries_per_class;
  ep.class_ids = choose(dataset.classes.size(), way, rng);
  ep.support.resize(way);
  for (std::size_t n = 0; n < way; ++n) {
    const auto& cls = dataset.classes[ep.class_ids[n]];
    const auto picks = choose(cls.videos.size(), per_class, rng);
    for (std::size_t k = 0; k < shot; ++k) ep.support[n].push_back(&cls.videos[picks[k]].features);
    for (std::size_t u = 0; u < queries_per_class; ++u)
      ep.queries.push_back({&cls.videos[picks[shot + u]].features, n});
  }
  return ep;
}

}  // namespace team
