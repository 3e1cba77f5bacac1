#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "oracles.hpp"
#include "team/analysis.hpp"
#include "team/error.hpp"
#include "team/synthetic.hpp"
#include "team/training.hpp"

using team::Matrix;

namespace {

Matrix<float> one_hot_tokens(std::size_t m, std::size_t d, std::size_t hot) {
  Matrix<float> t(m, d);
  for (std::size_t k = 0; k < m; ++k) t(k, (hot + k) % d) = 1.0f;
  return t;
}

}  // namespace

TEST(DiscriminativePower, MatchesDirectComputation) {
  std::mt19937_64 rng(1);
  std::vector<std::vector<Matrix<float>>> tokens(3);
  for (auto& cls : tokens)
    for (int v = 0; v < 4; ++v) cls.push_back(oracle::random_matrix<float>(2, 5, rng));
  const std::vector<std::string> names{"a", "b", "c"};
  const auto scores = team::discriminative_power(tokens, names);
  ASSERT_EQ(scores.size(), 6u);

  std::vector<oracle::Mat> protos;
  for (const auto& cls : tokens) {
    oracle::Mat p(2, oracle::Vec(5, 0.0));
    for (const auto& t : cls)
      for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 5; ++j) p[i][j] += t(i, j) / 4.0;
    protos.push_back(p);
  }
  for (const auto& s : scores) {
    const std::size_t c = static_cast<std::size_t>(s.class_name[0] - 'a');
    double intra = 0;
    for (const auto& t : tokens[c]) intra += oracle::cosine(oracle::to_mat(t)[s.token], protos[c][s.token]) / 4.0;
    double inter = -1;
    for (std::size_t o = 0; o < 3; ++o)
      if (o != c) inter = std::max(inter, oracle::cosine(protos[c][s.token], protos[o][s.token]));
    EXPECT_NEAR(s.intra, intra, 1e-6);
    EXPECT_NEAR(s.inter, inter, 1e-6);
    EXPECT_NEAR(s.score, intra - inter, 1e-6);
  }
}

TEST(DiscriminativePower, DuplicatedClassHasNoMargin) {
  std::mt19937_64 rng(2);
  std::vector<std::vector<Matrix<float>>> tokens(2);
  for (int v = 0; v < 3; ++v) tokens[0].push_back(oracle::random_matrix<float>(3, 4, rng));
  tokens[1] = tokens[0];
  const std::vector<std::string> names{"x", "y"};
  for (const auto& s : team::discriminative_power(tokens, names)) {
    EXPECT_NEAR(s.inter, 1.0, 1e-6);
    EXPECT_LE(s.score, 1e-6);
  }
}

TEST(DiscriminativePower, OrthogonalPrototypesScoreOne) {
  std::vector<std::vector<Matrix<float>>> tokens(3);
  for (std::size_t c = 0; c < 3; ++c)
    for (int v = 0; v < 2; ++v) tokens[c].push_back(one_hot_tokens(2, 6, 2 * c));
  const std::vector<std::string> names{"a", "b", "c"};
  for (const auto& s : team::discriminative_power(tokens, names)) {
    EXPECT_NEAR(s.intra, 1.0, 1e-6);
    EXPECT_NEAR(s.inter, 0.0, 1e-6);
    EXPECT_NEAR(s.score, 1.0, 1e-6);
  }
}

TEST(DiscriminativePower, Errors) {
  std::vector<std::vector<Matrix<float>>> tokens(2);
  tokens[0].push_back(one_hot_tokens(2, 4, 0));
  tokens[0].push_back(one_hot_tokens(2, 4, 1));
  tokens[1].push_back(one_hot_tokens(2, 4, 2));
  const std::vector<std::string> names{"a", "b"};
  EXPECT_THROW(team::discriminative_power(tokens, names), team::ContractError);
  std::vector<std::vector<Matrix<float>>> single(1, tokens[0]);
  const std::vector<std::string> one{"a"};
  EXPECT_THROW(team::discriminative_power(single, one), team::ContractError);
}

TEST(DiscriminativePower, RankingsDifferAcrossClassesAfterTraining) {
  team::SyntheticSpec s;
  s.classes = 6;
  s.videos_per_class = 8;
  s.dim = 16;
  s.signatures = 3;
  s.t_min = s.t_max = 10;
  s.seed = 4;
  const auto ds = team::generate_synthetic(s);
  team::TrainConfig cfg;
  cfg.iterations = 200;
  cfg.model.dim = 16;
  cfg.model.tokens = 6;
  cfg.way = 3;
  const auto pool = team::train(ds, cfg).pool;
  const auto scores = team::discriminative_power(pool, ds);
  ASSERT_EQ(scores.size(), 36u);
  std::set<std::vector<std::size_t>> rankings;
  for (const auto& c : ds.classes) {
    const auto r = team::token_ranking(scores, c.name);
    ASSERT_EQ(r.size(), 6u);
    rankings.insert(r);
  }
  EXPECT_GT(rankings.size(), 1u);
  const std::vector<std::size_t> subset{0, 2};
  EXPECT_EQ(team::discriminative_power(pool, ds, subset).size(), 12u);
}

TEST(AnalysisCsv, HeatmapAndAttentionLayout) {
  std::ostringstream heat;
  std::vector<team::TokenScore> scores{{"walk", 0, 0.9, 0.4, 0.5}, {"walk", 1, 0.8, 0.6, 0.2}};
  team::write_heatmap_csv(heat, scores);
  EXPECT_EQ(heat.str(), "class,token,score\nwalk,0,0.5\nwalk,1,0.2\n");

  team::ModelConfig c;
  c.dim = 4;
  c.tokens = 2;
  const team::PatternPool<float> pool(c, 3);
  std::mt19937_64 rng(5);
  const auto att = team::export_attention(pool, oracle::random_matrix<float>(3, 4, rng));
  std::ostringstream out;
  team::write_attention_csv(out, att);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "token,frame_0,frame_1,frame_2");
  int rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    EXPECT_EQ(cell, std::to_string(rows));
    double sum = 0;
    while (std::getline(ss, cell, ',')) sum += std::stod(cell);
    EXPECT_NEAR(sum, 1.0, 1e-5);
    ++rows;
  }
  EXPECT_EQ(rows, 2);
}
