// Acceptance suite: prints one PASS/FAIL line per criterion and exits with the
// number of failures. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "team/aligners.hpp"
#include "team/bench.hpp"
#include "team/checkpoint.hpp"
#include "team/dataset.hpp"
#include "team/error.hpp"
#include "team/gradcheck.hpp"
#include "team/matching.hpp"
#include "team/metric.hpp"
#include "team/synthetic.hpp"
#include "team/training.hpp"
#include "team/vector_ops.hpp"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// 1 ---------------------------------------------------------------------------

void gradient_correctness(Outcome& o) {
  const auto t0 = Clock::now();
  team::GradCheckConfig cfg;  // N=3, K=1, U=1, T=4, D=8, M=2, double precision
  double worst = 0;
  std::size_t params = 0;
  for (std::uint64_t seed : {0, 1, 2}) {
    cfg.seed = seed;
    const auto r = team::gradient_check(cfg);
    worst = std::max(worst, r.max_rel_error);
    params = r.entries.size();
  }
  const double secs = seconds_since(t0);
  o.detail << "max rel-err " << worst << " over " << params << " parameters x 3 seeds, " << secs << " s";
  o.check(params == 9, "all nine parameters checked");
  o.check(worst <= 1e-5, "rel-err <= 1e-5");
  o.check(secs < 30, "runtime < 30 s");
}

// 2 ---------------------------------------------------------------------------

void scaling_reproduction(Outcome& o) {
  const auto t0 = Clock::now();
  team::BenchConfig cfg;
  cfg.frames = {8, 16, 32, 64, 128, 256};
  const auto r = team::run_scaling_bench(cfg);
  const double secs = seconds_since(t0);
  for (const auto& f : r.fits) {
    o.detail << f.method << " slope " << f.slope << " r2 " << f.r_squared << "; ";
    o.check(f.r_squared >= 0.95, f.method + " r2 >= 0.95");
    if (f.method == "team") o.check(f.slope <= 1.2, "team slope <= 1.2");
    if (f.method == "frame_align") o.check(f.slope >= 1.7 && f.slope <= 2.3, "frame slope in [1.7, 2.3]");
    if (f.method == "tuple_align") o.check(f.slope >= 3.0, "tuple slope >= 3.0");
  }
  bool units = r.rows.size() == 18;
  for (const auto& row : r.rows) {
    const std::uint64_t t = row.frames;
    if (row.method == "team") units &= row.units_compared == cfg.tokens;
    else if (row.method == "frame_align") units &= row.units_compared == t * t;
    else if (row.method == "tuple_align") units &= row.units_compared == team::binomial(t, 2) * team::binomial(t, 2);
    else units = false;
  }
  o.detail << "units exact " << (units ? "yes" : "no") << ", " << secs << " s";
  o.check(units, "units-compared columns equal M, T^2, C(T,2)^2");
  o.check(secs < 300, "runtime < 5 min");
}

// 3 ---------------------------------------------------------------------------

team::SyntheticSpec separable_spec(std::size_t classes, std::uint64_t seed, const std::string& prefix) {
  team::SyntheticSpec s;
  s.classes = classes;
  s.videos_per_class = 20;
  s.dim = 64;
  s.noise = 0.1;
  s.speed_min = 1.0;
  s.speed_max = 2.0;
  s.seed = seed;
  s.class_prefix = prefix;
  return s;
}

void synthetic_learning(Outcome& o) {
  const auto t0 = Clock::now();
  const auto train_ds = team::generate_synthetic(separable_spec(10, 101, "base"));
  const auto eval_ds = team::generate_synthetic(separable_spec(5, 202, "novel"));
  team::TrainConfig tc;
  tc.iterations = 2000;
  tc.seed = 3;
  const auto pool = team::train(train_ds, tc).pool;
  team::EvalConfig ec;
  ec.episodes = 1000;
  ec.seed = 4;
  const auto r = team::evaluate(pool, eval_ds, ec);
  const double nm_train = team::nearest_mean_accuracy(train_ds);
  const double nm_eval = team::nearest_mean_accuracy(eval_ds);
  const double secs = seconds_since(t0);
  o.detail << "5-way 1-shot accuracy " << r.accuracy << " [" << r.ci_low << ", " << r.ci_high << "] over "
           << r.episodes << " episodes (chance 0.2); nearest-mean " << nm_train << " / " << nm_eval << ", "
           << secs << " s";
  o.check(r.episodes == 1000, "1000 episodes");
  o.check(r.accuracy >= 0.90, "accuracy >= 90%");
  o.check(nm_train >= 0.99 && nm_eval >= 0.99, "nearest-mean >= 99%");
  o.check(secs < 600, "runtime < 10 min");
}

// 4 ---------------------------------------------------------------------------

team::SyntheticSpec overlapping_spec(std::size_t classes, std::uint64_t seed, const std::string& prefix) {
  team::SyntheticSpec s;
  s.classes = classes;
  s.videos_per_class = 20;
  s.dim = 64;
  s.t_min = s.t_max = 16;
  s.signatures = 4;
  s.shared_signatures = 2;
  s.shared_pool = 8;
  s.noise = 0.2;
  s.seed = seed;
  s.class_prefix = prefix;
  return s;
}

void ablation_ordering(Outcome& o) {
  const auto t0 = Clock::now();
  struct Row {
    const char* name;
    bool exclusive;
    team::Adaptation adaptation;
  };
  const Row rows[] = {{"a", false, team::Adaptation::kNone},
                      {"b", true, team::Adaptation::kNone},
                      {"d", true, team::Adaptation::kEntangled}};
  constexpr std::size_t kSeeds = 5;
  double acc[3][kSeeds];
  for (std::size_t s = 0; s < kSeeds; ++s) {
    const auto train_ds = team::generate_synthetic(overlapping_spec(10, 1000 + 10 * s, "base"));
    const auto eval_ds = team::generate_synthetic(overlapping_spec(5, 1001 + 10 * s, "novel"));
    for (std::size_t r = 0; r < 3; ++r) {
      team::TrainConfig tc;
      tc.iterations = 1000;
      tc.seed = s;
      tc.matching.use_exclusive = rows[r].exclusive;
      tc.matching.adaptation = rows[r].adaptation;
      const auto pool = team::train(train_ds, tc).pool;
      team::EvalConfig ec;
      ec.episodes = 500;
      ec.seed = 77 + s;  // identical episodes for every row of a seed
      ec.matching = tc.matching;
      acc[r][s] = team::evaluate(pool, eval_ds, ec).accuracy;
    }
  }
  auto paired = [&](std::size_t lo, std::size_t hi) {
    double mean = 0, sq = 0;
    for (std::size_t s = 0; s < kSeeds; ++s) mean += (acc[hi][s] - acc[lo][s]) / kSeeds;
    for (std::size_t s = 0; s < kSeeds; ++s) sq += std::pow(acc[hi][s] - acc[lo][s] - mean, 2);
    const double se = std::sqrt(sq / (kSeeds - 1) / kSeeds);
    return std::make_pair(mean, se > 0 ? mean / se : 0.0);
  };
  for (std::size_t r = 0; r < 3; ++r) {
    double m = 0;
    for (std::size_t s = 0; s < kSeeds; ++s) m += acc[r][s] / kSeeds;
    o.detail << "(" << rows[r].name << ") " << m << "; ";
  }
  const auto ab = paired(0, 1), bd = paired(1, 2);
  o.detail << "paired b-a " << ab.first << " (t " << ab.second << "), d-b " << bd.first << " (t " << bd.second
           << "), " << seconds_since(t0) << " s";
  o.check(ab.first >= 0, "mean (a) <= (b)");
  o.check(bd.first >= 0, "mean (b) <= (d)");
}

// 5 ---------------------------------------------------------------------------

team::PatternPool<double> random_pool(std::size_t dim, std::size_t tokens, std::uint64_t seed) {
  team::ModelConfig c;
  c.dim = dim;
  c.tokens = tokens;
  team::PatternPool<double> pool(c, seed);
  std::mt19937_64 rng(seed + 1);
  for (auto* p : pool.parameters())
    p->value = oracle::random_matrix<double>(p->value.rows(), p->value.cols(), rng, 0.5);
  return pool;
}

team::Matrix<double> shuffled_rows(const team::Matrix<double>& m, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(m.rows());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  team::Matrix<double> out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(idx[r], c);
  return out;
}

void algebraic_reductions(Outcome& o) {
  // E = 0 adaptation against unadapted aggregation, instance and exclusive, K in {1, 3}.
  double e0 = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pool = random_pool(8, 4, seed);
    fixture::RandomEpisode<double> ep(5, 1 + 2 * (seed % 2), 1, 6, 8, seed, true);
    team::MatchingConfig none, zero;
    none.adaptation = team::Adaptation::kNone;
    zero.adaptation = team::Adaptation::kFixed;
    zero.fixed_entanglement = 0.0;
    team::Tape<double> tape;
    const auto pv = team::bind_frozen(tape, pool);
    const auto a = team::support_tokens(pv, ep.episode, none);
    const auto b = team::support_tokens(pv, ep.episode, zero);
    for (std::size_t n = 0; n < 5; ++n) {
      e0 = std::max(e0, team::max_abs_diff(a.plus[n].value(), b.plus[n].value()));
      e0 = std::max(e0, team::max_abs_diff(a.minus[n].value(), b.minus[n].value()));
    }
  }
  o.detail << "E=0 diff " << e0 << "; ";
  o.check(e0 <= 1e-6, "E=0 adaptation equals unadapted");

  // Zero MLP: P+ + P- = 2P.
  double zm = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto pool = random_pool(8, 4, seed);
    for (auto* p : pool.parameters())
      if (p->name.rfind("mlp.", 0) == 0) p->value.fill(0.0);
    std::mt19937_64 rng(seed);
    const auto f = oracle::random_matrix<double>(3 + seed % 7, 8, rng);
    const auto plus = team::aggregate_instance(pool, f), minus = team::aggregate_exclusive(pool, f);
    const auto& p = pool.parameters()[0]->value;
    for (std::size_t i = 0; i < p.size(); ++i)
      zm = std::max(zm, std::abs(plus.data()[i] + minus.data()[i] - 2 * p.data()[i]));
  }
  o.detail << "zero-MLP diff " << zm << "; ";
  o.check(zm <= 1e-6, "zero-MLP identity");

  // Frame permutation invariance of query tokens and adapted support tokens.
  double perm = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pool = random_pool(8, 4, seed);
    fixture::RandomEpisode<double> ep(4, 2, 1, 7, 8, seed + 50);
    std::mt19937_64 rng(seed);
    std::deque<team::Matrix<double>> shuffled;
    team::Episode<double> pe = ep.episode;
    for (auto& shots : pe.support)
      for (auto& s : shots) {
        shuffled.push_back(shuffled_rows(*s, rng));
        s = &shuffled.back();
      }
    for (auto mode : {team::Adaptation::kNone, team::Adaptation::kFixed, team::Adaptation::kEntangled}) {
      team::MatchingConfig mc;
      mc.adaptation = mode;
      team::Tape<double> tape;
      const auto pv = team::bind_frozen(tape, pool);
      const auto a = team::support_tokens(pv, ep.episode, mc);
      const auto b = team::support_tokens(pv, pe, mc);
      for (std::size_t n = 0; n < 4; ++n) {
        perm = std::max(perm, team::max_abs_diff(a.plus[n].value(), b.plus[n].value()));
        perm = std::max(perm, team::max_abs_diff(a.minus[n].value(), b.minus[n].value()));
      }
    }
    const auto& q = *ep.episode.queries[0].features;
    const auto qs = shuffled_rows(q, rng);
    perm = std::max(perm, team::max_abs_diff(team::aggregate_instance(pool, q), team::aggregate_instance(pool, qs)));
    perm = std::max(perm, team::max_abs_diff(team::aggregate_exclusive(pool, q), team::aggregate_exclusive(pool, qs)));
  }
  o.detail << "permutation diff " << perm << "; ";
  o.check(perm <= 1e-6, "frame-permutation invariance");

  // Negative distance against enumeration, 1000 instances with N <= 6.
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> way(2, 6), tok(1, 5), dim(1, 8);
  double nd = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = way(rng), m = tok(rng), d = dim(rng);
    std::vector<team::Matrix<double>> sp, sm;
    std::vector<oracle::Mat> rsp, rsm;
    for (std::size_t c = 0; c < n; ++c) {
      sp.push_back(oracle::random_matrix<double>(m, d, rng));
      sm.push_back(oracle::random_matrix<double>(m, d, rng));
      rsp.push_back(oracle::to_mat(sp.back()));
      rsm.push_back(oracle::to_mat(sm.back()));
    }
    const auto qp = oracle::random_matrix<double>(m, d, rng), qm = oracle::random_matrix<double>(m, d, rng);
    const auto ref = oracle::nd(rsp, rsm, oracle::to_mat(qp), oracle::to_mat(qm));
    const auto got = team::class_scores<double>(sp, sm, qp, qm);
    team::Tape<double> tape;
    std::vector<team::Var<double>> vsp, vsm;
    for (std::size_t c = 0; c < n; ++c) {
      vsp.push_back(tape.constant(sp[c]));
      vsm.push_back(tape.constant(sm[c]));
    }
    const auto g = team::negative_distance<double>(vsp, vsm, tape.constant(qp), tape.constant(qm));
    for (std::size_t c = 0; c < n; ++c) {
      nd = std::max(nd, std::abs(got.nd[c] - ref[c]));
      nd = std::max(nd, std::abs(g.nd.value()(0, c) - ref[c]));
    }
  }
  o.detail << "negative-distance diff " << nd << " over 1000 instances";
  o.check(nd <= 1e-9, "negative_distance equals enumeration");
}

// 6 ---------------------------------------------------------------------------

void protocol_invariants(Outcome& o) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0, 4);
  double worst_sum = 0;
  bool argmax_stable = true;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> pd(5), nd(5);
    for (auto& v : pd) v = g(rng);
    for (auto& v : nd) v = g(rng);
    std::size_t ref = 0;
    for (double tau : {0.01, 0.1, 1.0, 3.0, 100.0}) {
      const auto p = team::probabilities(pd, nd, tau);
      for (const auto* v : {&p.p_plus, &p.p_minus, &p.p_combined})
        worst_sum = std::max(worst_sum, std::abs(std::accumulate(v->begin(), v->end(), 0.0) - 1.0));
      const std::size_t a = team::argmax<double>(p.p_combined);
      if (tau == 0.01) ref = a;
      argmax_stable &= a == ref;
    }
  }
  o.detail << "prob-sum err " << worst_sum << "; ";
  o.check(worst_sum <= 1e-6, "probabilities sum to 1");
  o.check(argmax_stable, "argmax invariant to tau");

  // Episode-level argmax under several temperatures.
  const auto train_ds = team::generate_synthetic(separable_spec(6, 7, "base"));
  team::TrainConfig tc;
  tc.iterations = 150;
  tc.model.tokens = 4;
  tc.seed = 8;
  const auto run1 = team::train(train_ds, tc);
  const auto run2 = team::train(train_ds, tc);
  const bool identical = run1.losses == run2.losses &&
                         team::encode_checkpoint(run1.pool) == team::encode_checkpoint(run2.pool);
  o.check(identical, "fixed seed reproduces loss curve bit-identically");

  bool tau_eval = true;
  {
    team::EvalConfig ec;
    ec.episodes = 100;
    ec.seed = 3;
    std::size_t ref = 0;
    for (double tau : {0.05, 1.0, 20.0}) {
      ec.matching.temperature = tau;
      const auto r = team::evaluate(run1.pool, train_ds, ec);
      if (tau == 0.05) ref = r.correct;
      tau_eval &= r.correct == ref;
    }
  }
  o.check(tau_eval, "evaluation accuracy invariant to tau");

  fixture::TempDir dir("acceptance_ckpt");
  const auto path = dir.path / "pool.ckpt";
  team::save_checkpoint(run1.pool, path);
  const auto before = slurp(path);
  const auto loaded = team::load_checkpoint(path);
  const auto digest = team::checkpoint_digest(loaded);
  team::EvalConfig ec;
  ec.episodes = 50;
  team::evaluate(loaded, train_ds, ec);
  const bool unchanged = slurp(path) == before && team::checkpoint_digest(loaded) == digest;
  o.check(unchanged, "evaluation leaves checkpoint bytes unchanged");
  o.detail << "argmax stable " << (argmax_stable && tau_eval ? "yes" : "no") << ", loss curves identical "
           << (identical ? "yes" : "no") << ", checkpoint unchanged " << (unchanged ? "yes" : "no");
}

// 7 ---------------------------------------------------------------------------

template <typename Decode>
std::pair<std::size_t, std::size_t> corrupt_all(const std::vector<std::uint8_t>& good, Decode decode, bool& ok) {
  std::size_t errors = 0, tried = 0;
  auto attempt = [&](const std::vector<std::uint8_t>& bytes, bool must_fail) {
    ++tried;
    try {
      decode(bytes);
      if (must_fail) ok = false;
    } catch (const team::FormatError& e) {
      ++errors;
      if (e.offset() == team::FormatError::kNoOffset || e.offset() > bytes.size()) ok = false;
    } catch (...) {
      ok = false;
    }
  };
  for (std::size_t n = 0; n < good.size(); ++n)
    attempt(std::vector<std::uint8_t>(good.begin(), good.begin() + static_cast<long>(n)), true);
  auto extra = good;
  extra.push_back(0);
  attempt(extra, true);
  std::mt19937_64 rng(1);
  for (std::size_t i = 0; i < good.size(); ++i) {
    auto flip = good;
    flip[i] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
    attempt(flip, false);
  }
  return {errors, tried};
}

void format_round_trips(Outcome& o) {
  fixture::TempDir a("acc_ds_a"), b("acc_ds_b");
  auto spec = separable_spec(4, 9, "fmt");
  spec.t_min = 4;
  spec.t_max = 12;
  spec.videos_per_class = 5;
  const auto ds = team::generate_synthetic(spec);
  team::save_dataset(ds, a.path);
  team::save_dataset(team::load_dataset(a.path), b.path);
  bool ds_exact = true;
  for (const auto& e : fs::recursive_directory_iterator(a.path))
    if (e.is_regular_file()) ds_exact &= slurp(e.path()) == slurp(b.path / fs::relative(e.path(), a.path));
  o.check(ds_exact, "dataset save-load-save bit-exact");

  team::ModelConfig mc;
  mc.dim = 16;
  mc.tokens = 3;
  const team::PatternPool<float> pool(mc, 4);
  const auto bytes = team::encode_checkpoint(pool);
  const bool ck_exact = team::encode_checkpoint(team::decode_checkpoint(bytes, "mem")) == bytes;
  o.check(ck_exact, "checkpoint round-trip bit-exact");

  bool ok = true;
  const auto ck = corrupt_all(bytes, [](const auto& v) { team::decode_checkpoint(v, "ckpt"); }, ok);
  const auto blob = team::encode_blob(ds.classes[0].videos[0].features);
  const auto bl = corrupt_all(blob, [](const auto& v) { team::decode_blob(v, "blob"); }, ok);

  // Manifest corruption: every truncation must fail cleanly.
  const auto manifest = slurp(a.path / "manifest.json");
  std::size_t manifest_errors = 0;
  for (std::size_t n = 0; n + 1 < manifest.size(); n += 7) {
    std::ofstream(a.path / "manifest.json", std::ios::binary | std::ios::trunc)
        .write(reinterpret_cast<const char*>(manifest.data()), static_cast<std::streamsize>(n));
    try {
      team::load_dataset(a.path);
      ok = false;
    } catch (const team::FormatError& e) {
      ++manifest_errors;
      // JSON syntax errors carry a byte offset; structural ones name the field.
      if (std::string(e.what()).find("manifest.json") == std::string::npos) ok = false;
    } catch (...) {
      ok = false;
    }
  }
  o.check(ok, "corruptions yield parse errors with offsets");
  o.detail << "dataset exact " << (ds_exact ? "yes" : "no") << ", checkpoint exact " << (ck_exact ? "yes" : "no")
           << "; checkpoint " << ck.first << "/" << ck.second << " corruptions rejected, blob " << bl.first << "/"
           << bl.second << ", manifest " << manifest_errors << " truncations rejected, no crashes";
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all{{1, "gradient correctness", gradient_correctness},
                                   {2, "matching-time scaling", scaling_reproduction},
                                   {3, "synthetic 5-way 1-shot learning", synthetic_learning},
                                   {4, "ablation ordering", ablation_ordering},
                                   {5, "algebraic reductions", algebraic_reductions},
                                   {6, "protocol invariants", protocol_invariants},
                                   {7, "format round-trips and corruption", format_round_trips}};
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    o.detail.precision(4);
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
              << std::endl;
  }
  return failures;
}
