#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "team/autodiff.hpp"
#include "team/error.hpp"
#include "team/metric.hpp"
#include "team/vector_ops.hpp"

using team::Matrix;
using team::Tape;
using team::Var;

namespace {

struct Instance {
  std::vector<Matrix<double>> sp, sm;
  Matrix<double> qp, qm;
};

Instance random_instance(std::size_t n, std::size_t m, std::size_t d, std::mt19937_64& rng) {
  Instance in;
  for (std::size_t c = 0; c < n; ++c) {
    in.sp.push_back(oracle::random_matrix<double>(m, d, rng));
    in.sm.push_back(oracle::random_matrix<double>(m, d, rng));
  }
  in.qp = oracle::random_matrix<double>(m, d, rng);
  in.qm = oracle::random_matrix<double>(m, d, rng);
  return in;
}

std::vector<oracle::Mat> mats(const std::vector<Matrix<double>>& v) {
  std::vector<oracle::Mat> out;
  for (const auto& m : v) out.push_back(oracle::to_mat(m));
  return out;
}

}  // namespace

TEST(Metric, NegativeDistanceMatchesEnumeration) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::size_t> way(2, 6), tokens(1, 4), dim(1, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = way(rng);
    const auto in = random_instance(n, tokens(rng), dim(rng), rng);
    const auto ref = oracle::nd(mats(in.sp), mats(in.sm), oracle::to_mat(in.qp), oracle::to_mat(in.qm));

    const auto plain = team::class_scores<double>(in.sp, in.sm, in.qp, in.qm);
    Tape<double> tape;
    std::vector<Var<double>> sp, sm;
    for (std::size_t c = 0; c < n; ++c) {
      sp.push_back(tape.constant(in.sp[c]));
      sm.push_back(tape.constant(in.sm[c]));
    }
    const auto g = team::negative_distance<double>(sp, sm, tape.constant(in.qp), tape.constant(in.qm));
    for (std::size_t c = 0; c < n; ++c) {
      ASSERT_NEAR(plain.nd[c], ref[c], 1e-10) << "trial " << trial;
      ASSERT_NEAR(g.nd.value()(0, c), ref[c], 1e-10) << "trial " << trial;
      ASSERT_NE(g.argmin[c], c);
      ASSERT_EQ(plain.argmin_class[c], g.argmin[c]);
    }
  }
}

TEST(Metric, NegativeDistanceTiesPickLowestIndex) {
  std::mt19937_64 rng(1);
  auto in = random_instance(4, 2, 3, rng);
  Matrix<double> neg_qp = in.qp, neg_qm = in.qm;
  for (auto& v : neg_qp.flat()) v = -v;
  for (auto& v : neg_qm.flat()) v = -v;
  // Classes 1..3 are equally and maximally far, so they tie for the minimum.
  for (std::size_t o = 1; o < 4; ++o) {
    in.sm[o] = neg_qp;
    in.sp[o] = neg_qm;
  }
  const auto s = team::class_scores<double>(in.sp, in.sm, in.qp, in.qm);
  EXPECT_EQ(s.argmin_class[0], 1u);
  EXPECT_EQ(s.argmin_class[1], 2u);
  EXPECT_EQ(s.argmin_class[2], 1u);
  EXPECT_EQ(s.argmin_class[3], 1u);
}

TEST(Metric, NegativeDistanceNeedsTwoClasses) {
  std::mt19937_64 rng(1);
  const auto in = random_instance(1, 2, 3, rng);
  EXPECT_THROW(team::class_scores<double>(in.sp, in.sm, in.qp, in.qm), team::ContractError);
}

TEST(Metric, PositiveDistanceRangeAndIdentity) {
  std::mt19937_64 rng(3);
  const auto in = random_instance(3, 4, 5, rng);
  std::vector<Matrix<double>> support = in.sp;
  support.push_back(in.qp);
  const auto pd = team::positive_distance<double>(support, in.qp);
  ASSERT_EQ(pd.size(), 4u);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_NEAR(pd[c], oracle::pd(oracle::to_mat(in.sp[c]), oracle::to_mat(in.qp)), 1e-12);
    EXPECT_GE(pd[c], -8.0);
    EXPECT_LE(pd[c], 0.0);
  }
  EXPECT_NEAR(pd[3], 0.0, 1e-7);  // the epsilon guard keeps self-similarity just below 1
}

TEST(Metric, GraphPositiveDistanceMatchesPlain) {
  std::mt19937_64 rng(4);
  const auto in = random_instance(5, 3, 4, rng);
  Tape<double> tape;
  std::vector<Var<double>> sp;
  for (const auto& m : in.sp) sp.push_back(tape.constant(m));
  const auto g = team::positive_distance<double>(sp, tape.constant(in.qp));
  const auto p = team::positive_distance<double>(in.sp, in.qp);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_NEAR(g.value()(0, c), p[c], 1e-12);
}

TEST(Metric, ProbabilitiesSumToOneAndArgmaxIgnoresTemperature) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> pd(5), nd(5);
    for (auto& v : pd) v = g(rng);
    for (auto& v : nd) v = g(rng);
    std::size_t ref = 0;
    for (std::size_t i = 0; i < 5; ++i)
      if (pd[i] + nd[i] > pd[ref] + nd[ref]) ref = i;
    for (double tau : {0.05, 0.5, 1.0, 7.0}) {
      const auto p = team::probabilities(pd, nd, tau);
      for (const auto* v : {&p.p_plus, &p.p_minus, &p.p_combined}) {
        double s = 0;
        for (double x : *v) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
      }
      EXPECT_EQ(team::argmax<double>(p.p_combined), ref);
    }
  }
}

TEST(Metric, LossIsSumOfNegativeLogs) {
  const std::vector<double> pd{-1.0, -0.2, -3.0}, nd{-2.0, -1.0, -0.5};
  const auto p = team::probabilities(pd, nd, 1.0);
  const auto sp = oracle::softmax(pd), sn = oracle::softmax(nd);
  EXPECT_NEAR(team::loss(p, 1), -std::log(sp[1]) - std::log(sn[1]), 1e-12);
  EXPECT_THROW(team::loss(p, 3), team::ContractError);
  EXPECT_THROW(team::probabilities(pd, nd, 0.0), team::ConfigError);
  EXPECT_THROW(team::probabilities(pd, nd, -1.0), team::ConfigError);
}
