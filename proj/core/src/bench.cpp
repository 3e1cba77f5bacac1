#include "team/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "team/aligners.hpp"
#include "team/error.hpp"
#include "team/model.hpp"

namespace team {

void BenchConfig::validate() const {
  if (frames.size() < 2) throw ConfigError("bench needs at least two frame counts");
  if (repeats < 5) throw ConfigError("bench needs at least 5 repeats");
  if (dim == 0 || tokens == 0) throw ConfigError("bench dim and tokens must be positive");
  for (std::size_t t : frames)
    if (t < tuple_cardinality)
      throw ConfigError("frame count " + std::to_string(t) + " is below the tuple cardinality");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

/// One (method, T) cell of the benchmark grid.
struct Case {
  const char* method;
  std::size_t frames;
  std::function<AlignmentResult()> run;
  std::size_t inner = 1;
  std::vector<double> samples;
};

double run_batch(Case& c, std::size_t inner) {
  volatile double sink = 0;
  const auto t0 = Clock::now();
  for (std::size_t i = 0; i < inner; ++i) sink = sink + c.run().distance;
  return elapsed_ms(t0, Clock::now());
}

Matrix<float> random_video(std::size_t frames, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  Matrix<float> m(frames, dim);
  for (auto& v : m.flat()) v = g(rng);
  return m;
}

}  // namespace

ScalingFit fit_loglog(const std::string& method, std::span<const double> frames,
                      std::span<const double> times) {
  if (frames.size() != times.size() || frames.size() < 2)
    throw ContractError("fit_loglog needs matching series of at least two points");
  const std::size_t n = frames.size();
  double sx = 0, sy = 0;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(frames[i] > 0) || !(times[i] > 0)) throw ContractError("fit_loglog needs positive values");
    x[i] = std::log(frames[i]);
    y[i] = std::log(times[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  ScalingFit fit;
  fit.method = method;
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (intercept + fit.slope * x[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

BenchReport run_scaling_bench(const BenchConfig& config) {
  config.validate();
  ModelConfig mc;
  mc.dim = config.dim;
  mc.tokens = config.tokens;
  const PatternPool<float> pool(mc, config.seed);
  std::mt19937_64 rng(config.seed + 1);

  std::vector<std::pair<Matrix<float>, Matrix<float>>> videos;
  videos.reserve(config.frames.size());
  for (std::size_t t : config.frames)
    videos.emplace_back(random_video(t, config.dim, rng), random_video(t, config.dim, rng));

  std::vector<Case> cases;
  for (const auto& [a, b] : videos) {
    const Matrix<float>* pa = &a;
    const Matrix<float>* pb = &b;
    cases.push_back({kTeamMethod, a.rows(), [&pool, pa, pb] { return team_match_distance(pool, *pa, *pb); }, 1, {}});
    cases.push_back({kFrameMethod, a.rows(), [pa, pb] { return frame_align_distance(*pa, *pb); }, 1, {}});
    const std::size_t w = config.tuple_cardinality;
    cases.push_back({kTupleMethod, a.rows(), [pa, pb, w] { return tuple_align_distance(*pa, *pb, w); }, 1, {}});
  }
  // Calibration doubles as the discarded warm-up. Repeats then sweep the whole
  // grid round-robin so slow periods of the machine hit every cell alike.
  for (auto& c : cases)
    while (run_batch(c, c.inner) < config.min_batch_ms && c.inner < (std::size_t{1} << 24)) c.inner *= 2;
  for (std::size_t r = 0; r < config.repeats; ++r)
    for (auto& c : cases) c.samples.push_back(run_batch(c, c.inner) / static_cast<double>(c.inner));

  BenchReport report;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  for (auto& c : cases) {
    std::nth_element(c.samples.begin(), c.samples.begin() + c.samples.size() / 2, c.samples.end());
    const double median = c.samples[c.samples.size() / 2];
    report.rows.push_back({c.method, c.frames, median, c.run().units_compared, c.inner});
    series[c.method].first.push_back(static_cast<double>(c.frames));
    series[c.method].second.push_back(median);
  }
  for (const char* name : {kTeamMethod, kFrameMethod, kTupleMethod}) {
    const auto& s = series[name];
    report.fits.push_back(fit_loglog(name, s.first, s.second));
  }
  return report;
}

void write_timing_csv(std::ostream& out, std::span<const TimingRow> rows) {
  out << "method,T,median_ms,units_compared\n";
  for (const auto& r : rows) out << r.method << ',' << r.frames << ',' << r.median_ms << ',' << r.units_compared << '\n';
}

std::string render_timing_svg(std::span<const TimingRow> rows) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 150, kTop = 20, kBottom = 50;
  if (rows.empty()) return "<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n";
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& r : rows) {
    const double lx = std::log10(static_cast<double>(r.frames));
    const double ly = std::log10(std::max(r.median_ms, 1e-9));
    x0 = std::min(x0, lx);
    x1 = std::max(x1, lx);
    y0 = std::min(y0, ly);
    y1 = std::max(y1, ly);
  }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double lx) { return kLeft + (lx - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto py = [&](double ly) { return kH - kBottom - (ly - y0) / (y1 - y0) * (kH - kTop - kBottom); };

  std::map<std::string, std::vector<const TimingRow*>> by_method;
  for (const auto& r : rows) by_method[r.method].push_back(&r);
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<path d=\"M" << kLeft << ' ' << kTop << " V" << kH - kBottom << " H" << kW - kRight
      << "\" stroke=\"black\" fill=\"none\"/>\n";
  svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\" font-size=\"13\">frames T (log)</text>\n";
  svg << "<text x=\"16\" y=\"" << (kTop + kH - kBottom) / 2
      << "\" font-size=\"13\" transform=\"rotate(-90 16 " << (kTop + kH - kBottom) / 2
      << ")\" text-anchor=\"middle\">median ms (log)</text>\n";
  for (const auto& r : by_method.begin()->second)
    svg << "<text x=\"" << px(std::log10(static_cast<double>(r->frames))) << "\" y=\"" << kH - kBottom + 16
        << "\" text-anchor=\"middle\" font-size=\"11\">" << r->frames << "</text>\n";
  std::size_t ci = 0;
  for (const auto& [method, pts] : by_method) {
    const char* color = colors[ci % 5];
    svg << "<path d=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      svg << (i ? " L" : "M") << px(std::log10(static_cast<double>(pts[i]->frames))) << ' '
          << py(std::log10(std::max(pts[i]->median_ms, 1e-9)));
    svg << "\" stroke=\"" << color << "\" stroke-width=\"2\" fill=\"none\"/>\n";
    svg << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << kTop + 20 + 18 * ci << "\" fill=\"" << color
        << "\" font-size=\"13\">" << method << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace team
