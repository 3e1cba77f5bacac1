#include "team/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "team/error.hpp"
#include "team/vector_ops.hpp"

namespace team {

void SyntheticSpec::validate() const {
  if (dim == 0) throw ConfigError("synthetic dim must be positive");
  if (videos_per_class == 0) throw ConfigError("videos per class must be positive");
  if (signatures == 0) throw ConfigError("need at least one class signature");
  if (t_min < signatures)
    throw ConfigError("t_min (" + std::to_string(t_min) + ") must be at least the signature count (" +
                      std::to_string(signatures) + ")");
  if (t_max < t_min) throw ConfigError("t_max must be >= t_min");
  if (duration_min == 0 || duration_max < duration_min)
    throw ConfigError("signature duration range must satisfy 1 <= min <= max");
  if (!(noise >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (!(speed_min > 0.0) || speed_max < speed_min)
    throw ConfigError("speed jitter range must satisfy 0 < min <= max");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("overlap must lie in [0, 1)");
  if (shared_signatures > signatures) throw ConfigError("shared signatures exceed the signature count");
  if (shared_signatures > shared_pool) throw ConfigError("shared signatures exceed the shared pool size");
}

namespace {

std::vector<double> random_unit(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double n = 0;
  do {
    for (auto& x : v) x = g(rng);
    n = norm<double>(v);
  } while (n < 1e-12);
  for (auto& x : v) x /= n;
  return v;
}

/// Shrinks the longest runs until they fit in `frames`; every run keeps >= 1.
void fit_durations(std::vector<std::size_t>& d, std::size_t frames) {
  std::size_t total = std::accumulate(d.begin(), d.end(), std::size_t{0});
  while (total > frames) {
    auto it = std::max_element(d.begin(), d.end());
    --*it;
    --total;
  }
}

}  // namespace

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> frames_dist(spec.t_min, spec.t_max);
  std::uniform_int_distribution<std::size_t> dur_dist(spec.duration_min, spec.duration_max);
  std::uniform_real_distribution<double> speed_dist(spec.speed_min, spec.speed_max);

  std::vector<std::vector<double>> shared;
  for (std::size_t i = 0; i < spec.signatures; ++i) shared.push_back(random_unit(spec.dim, rng));
  const double ws = std::sqrt(spec.overlap), wu = std::sqrt(1.0 - spec.overlap);
  std::vector<std::vector<double>> common;
  if (spec.shared_signatures > 0)
    for (std::size_t i = 0; i < spec.shared_pool; ++i) common.push_back(random_unit(spec.dim, rng));
  std::vector<std::size_t> pool_order(common.size());

  FeatureDataset ds;
  ds.dim = spec.dim;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    ClassRecord cls;
    char name[96];
    std::snprintf(name, sizeof(name), "%s_%03zu", spec.class_prefix.c_str(), c);
    cls.name = name;

    std::vector<std::vector<double>> sigs;
    for (std::size_t i = 0; i < spec.signatures; ++i) {
      auto u = random_unit(spec.dim, rng);
      for (std::size_t k = 0; k < spec.dim; ++k) u[k] = ws * shared[i][k] + wu * u[k];
      const double n = norm<double>(u);
      for (auto& x : u) x /= n;
      sigs.push_back(std::move(u));
    }
    if (spec.shared_signatures > 0) {
      std::iota(pool_order.begin(), pool_order.end(), std::size_t{0});
      std::shuffle(pool_order.begin(), pool_order.end(), rng);
      std::vector<std::size_t> slots(spec.signatures);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      std::shuffle(slots.begin(), slots.end(), rng);
      for (std::size_t i = 0; i < spec.shared_signatures; ++i) sigs[slots[i]] = common[pool_order[i]];
    }

    for (std::size_t v = 0; v < spec.videos_per_class; ++v) {
      const std::size_t frames = frames_dist(rng);
      const double speed = speed_dist(rng);
      std::vector<std::size_t> dur(spec.signatures);
      for (auto& d : dur)
        d = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(dur_dist(rng)) * speed)));
      fit_durations(dur, frames);
      const std::size_t slack = frames - std::accumulate(dur.begin(), dur.end(), std::size_t{0});

      // Split the slack into signatures+1 gaps via sorted cut points.
      std::uniform_int_distribution<std::size_t> cut_dist(0, slack);
      std::vector<std::size_t> cuts(spec.signatures);
      for (auto& x : cuts) x = cut_dist(rng);
      std::sort(cuts.begin(), cuts.end());

      std::vector<int> owner(frames, -1);
      std::size_t t = 0, prev_cut = 0;
      for (std::size_t i = 0; i < spec.signatures; ++i) {
        t += cuts[i] - prev_cut;
        prev_cut = cuts[i];
        for (std::size_t k = 0; k < dur[i]; ++k) owner[t++] = static_cast<int>(i);
      }

      FeatureSequence f(frames, spec.dim);
      for (std::size_t r = 0; r < frames; ++r)
        for (std::size_t k = 0; k < spec.dim; ++k) {
          double x = spec.noise * noise(rng);
          if (owner[r] >= 0) x += sigs[static_cast<std::size_t>(owner[r])][k];
          f(r, k) = static_cast<float>(x);
        }

      char id[128];
      std::snprintf(id, sizeof(id), "%s_v%04zu", cls.name.c_str(), v);
      cls.videos.push_back(VideoRecord{id, {}, std::move(f)});
    }
    ds.classes.push_back(std::move(cls));
  }
  return ds;
}

double nearest_mean_accuracy(const FeatureDataset& dataset) {
  const std::size_t d = dataset.dim;
  const std::size_t nc = dataset.classes.size();
  if (nc < 2) throw ContractError("nearest_mean_accuracy needs at least two classes");
  std::vector<std::vector<std::vector<double>>> pooled(nc);
  std::vector<std::vector<double>> sums(nc, std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < nc; ++c) {
    if (dataset.classes[c].videos.size() < 2)
      throw ContractError("nearest_mean_accuracy needs two videos per class");
    for (const auto& v : dataset.classes[c].videos) {
      std::vector<double> m(d, 0.0);
      for (std::size_t r = 0; r < v.features.rows(); ++r)
        for (std::size_t k = 0; k < d; ++k) m[k] += v.features(r, k);
      for (auto& x : m) x /= static_cast<double>(v.features.rows());
      for (std::size_t k = 0; k < d; ++k) sums[c][k] += m[k];
      pooled[c].push_back(std::move(m));
    }
  }
  std::size_t correct = 0, total = 0;
  std::vector<double> mean(d);
  for (std::size_t c = 0; c < nc; ++c)
    for (const auto& x : pooled[c]) {
      std::size_t best = 0;
      double best_sim = -2.0;
      for (std::size_t k = 0; k < nc; ++k) {
        const double cnt = static_cast<double>(pooled[k].size()) - (k == c ? 1.0 : 0.0);
        for (std::size_t j = 0; j < d; ++j) mean[j] = (sums[k][j] - (k == c ? x[j] : 0.0)) / cnt;
        const double s = cosine_similarity<double>(x, mean);
        if (s > best_sim) {
          best_sim = s;
          best = k;
        }
      }
      correct += best == c;
      ++total;
    }
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace team
