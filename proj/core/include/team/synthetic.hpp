#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "team/dataset.hpp"

namespace team {

/// Parameters of the synthetic episodic generator. Each class owns
/// `signatures` unit directions; every video embeds them, in class order, as
/// contiguous runs whose length is a base duration stretched by a random
/// speed factor, placed at random offsets among noise frames.
struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t videos_per_class = 20;
  std::size_t dim = 64;
  std::size_t t_min = 8;
  std::size_t t_max = 8;
  std::size_t signatures = 2;
  std::size_t duration_min = 2;
  std::size_t duration_max = 3;
  double noise = 0.1;
  double speed_min = 1.0;
  double speed_max = 2.0;
  /// Fraction of each signature's energy drawn from a direction shared by all
  /// classes; 0 gives independent classes.
  double overlap = 0.0;
  /// How many of each class's signatures are drawn (without replacement) from
  /// a pool of `shared_pool` signatures common to all classes.
  std::size_t shared_signatures = 0;
  std::size_t shared_pool = 4;
  std::uint64_t seed = 0;
  std::string class_prefix = "class";

  void validate() const;
};

FeatureDataset generate_synthetic(const SyntheticSpec& spec);

/// Leave-one-out nearest-class-mean accuracy on mean-pooled features (cosine
/// similarity). Independent of the network; used to confirm separability.
double nearest_mean_accuracy(const FeatureDataset& dataset);

}  // namespace team
