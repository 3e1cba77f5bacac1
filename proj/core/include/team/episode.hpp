#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "team/dataset.hpp"
#include "team/matrix.hpp"

namespace team {

/// One N-way K-shot task. Features are borrowed from the dataset the episode
/// was sampled from; labels are episode-local in [0, N).
template <typename T>
struct Episode {
  struct Query {
    const Matrix<T>* features = nullptr;
    std::size_t label = 0;
  };

  std::size_t way = 0;
  std::size_t shot = 0;
  std::size_t queries_per_class = 0;
  std::vector<std::vector<const Matrix<T>*>> support;  // [class][shot]
  std::vector<Query> queries;                           // grouped by class
  std::vector<std::size_t> class_ids;                   // dataset class of each local label
};

/// Uniform choice of `way` classes, then of `shot + queries` distinct videos
/// within each class. Deterministic for a given rng state.
Episode<float> sample_episode(const FeatureDataset& dataset, std::size_t way, std::size_t shot,
                              std::size_t queries_per_class, std::mt19937_64& rng);

}  // namespace team
