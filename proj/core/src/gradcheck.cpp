#include "team/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "team/error.hpp"

namespace team {

GradCheckReport gradient_check(const GradCheckConfig& config) {
  ModelConfig mc;
  mc.dim = config.dim;
  mc.tokens = config.tokens;
  PatternPool<double> pool(mc, config.seed);

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ull);
  std::normal_distribution<double> g(0.0, 1.0);
  auto random_video = [&] {
    Matrix<double> f(config.frames, config.dim);
    for (auto& v : f.flat()) v = g(rng);
    return f;
  };
  std::vector<Matrix<double>> videos;
  videos.reserve(config.way * (config.shot + config.queries));
  for (std::size_t i = 0; i < config.way * (config.shot + config.queries); ++i)
    videos.push_back(random_video());

  Episode<double> ep;
  ep.way = config.way;
  ep.shot = config.shot;
  ep.queries_per_class = config.queries;
  ep.support.resize(config.way);
  std::size_t next = 0;
  for (std::size_t n = 0; n < config.way; ++n) {
    for (std::size_t k = 0; k < config.shot; ++k) ep.support[n].push_back(&videos[next++]);
    for (std::size_t u = 0; u < config.queries; ++u) ep.queries.push_back({&videos[next++], n});
    ep.class_ids.push_back(n);
  }

  auto loss_at = [&] {
    Tape<double> tape;
    const auto pv = bind_frozen(tape, pool);
    return forward_episode(pv, ep, config.matching, true).loss.scalar();
  };

  GradCheckReport report;
  {
    Tape<double> tape;
    const auto pv = bind_trainable(tape, pool);
    const auto graph = forward_episode(pv, ep, config.matching, true);
    report.loss = graph.loss.scalar();
    tape.backward(graph.loss);
  }

  for (Parameter<double>* p : pool.parameters()) {
    Matrix<double> numeric(p->value.rows(), p->value.cols());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + config.step;
      const double up = loss_at();
      w = saved - config.step;
      const double down = loss_at();
      w = saved;
      numeric.data()[i] = (up - down) / (2.0 * config.step);
    }
    double diff2 = 0, a2 = 0, n2 = 0, max_abs = 0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      const double a = p->grad.data()[i], n = numeric.data()[i];
      diff2 += (a - n) * (a - n);
      a2 += a * a;
      n2 += n * n;
      max_abs = std::max(max_abs, std::abs(a - n));
    }
    const double scale = std::sqrt(std::max(a2, n2));
    GradCheckEntry e{p->name, p->value.size(), scale > 1e-12 ? std::sqrt(diff2) / scale : 0.0, max_abs};
    if (!std::isfinite(e.rel_error)) throw NumericError("non-finite gradient for " + p->name);
    report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace team
