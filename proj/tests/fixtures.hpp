#pragma once

#include <deque>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "team/episode.hpp"

namespace fixture {

/// An episode over random features that owns its videos.
template <typename T>
struct RandomEpisode {
  std::deque<team::Matrix<T>> videos;
  team::Episode<T> episode;

  RandomEpisode(std::size_t way, std::size_t shot, std::size_t queries, std::size_t frames,
                std::size_t dim, std::uint64_t seed, bool vary_frames = false) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> len(1, frames);
    auto make = [&]() -> const team::Matrix<T>* {
      videos.push_back(oracle::random_matrix<T>(vary_frames ? len(rng) : frames, dim, rng));
      return &videos.back();
    };
    episode.way = way;
    episode.shot = shot;
    episode.queries_per_class = queries;
    episode.support.resize(way);
    for (std::size_t n = 0; n < way; ++n) {
      episode.class_ids.push_back(n);
      for (std::size_t k = 0; k < shot; ++k) episode.support[n].push_back(make());
    }
    for (std::size_t n = 0; n < way; ++n)
      for (std::size_t u = 0; u < queries; ++u) episode.queries.push_back({make(), n});
  }
  RandomEpisode(const RandomEpisode&) = delete;
  RandomEpisode& operator=(const RandomEpisode&) = delete;

  std::vector<std::vector<oracle::Mat>> support_mats() const {
    std::vector<std::vector<oracle::Mat>> out;
    for (const auto& shots : episode.support) {
      out.emplace_back();
      for (const auto* s : shots) out.back().push_back(oracle::to_mat(*s));
    }
    return out;
  }
  std::vector<oracle::Mat> query_mats() const {
    std::vector<oracle::Mat> out;
    for (const auto& q : episode.queries) out.push_back(oracle::to_mat(*q.features));
    return out;
  }
  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    for (const auto& q : episode.queries) out.push_back(q.label);
    return out;
  }
};

/// Unique scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("team_test_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixture
