#include "team/analysis.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include "team/error.hpp"
#include "team/vector_ops.hpp"

namespace team {

std::vector<TokenScore> discriminative_power(
    std::span<const std::vector<Matrix<float>>> tokens, std::span<const std::string> class_names) {
  const std::size_t nc = tokens.size();
  if (nc != class_names.size()) throw DimensionError("discriminative_power: names and classes differ in count");
  if (nc < 2) throw ContractError("discriminative_power needs at least two classes");
  std::vector<Matrix<double>> protos;
  for (std::size_t c = 0; c < nc; ++c) {
    if (tokens[c].size() < 2)
      throw ContractError("class '" + class_names[c] + "' needs at least two videos for intra similarity");
    const auto& first = tokens[c].front();
    Matrix<double> p(first.rows(), first.cols());
    for (const auto& t : tokens[c]) {
      if (!t.same_shape(first)) throw DimensionError("token sets differ in shape");
      for (std::size_t i = 0; i < t.size(); ++i) p.data()[i] += t.data()[i];
    }
    for (auto& v : p.flat()) v /= static_cast<double>(tokens[c].size());
    protos.push_back(std::move(p));
  }
  const std::size_t m = protos.front().rows();
  for (const auto& p : protos)
    if (p.rows() != m || p.cols() != protos.front().cols()) throw DimensionError("token sets differ in shape");

  std::vector<TokenScore> out;
  std::vector<double> row;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t k = 0; k < m; ++k) {
      double intra = 0;
      for (const auto& t : tokens[c]) {
        row.assign(t.row(k).begin(), t.row(k).end());
        intra += cosine_similarity<double>(row, protos[c].row(k));
      }
      intra /= static_cast<double>(tokens[c].size());
      double inter = -1.0;
      for (std::size_t o = 0; o < nc; ++o)
        if (o != c) inter = std::max(inter, cosine_similarity<double>(protos[c].row(k), protos[o].row(k)));
      out.push_back({class_names[c], k, intra, inter, intra - inter});
    }
  return out;
}

std::vector<TokenScore> discriminative_power(const PatternPool<float>& pool,
                                             const FeatureDataset& dataset,
                                             std::span<const std::size_t> class_subset) {
  std::vector<std::size_t> classes(class_subset.begin(), class_subset.end());
  if (classes.empty()) {
    classes.resize(dataset.classes.size());
    std::iota(classes.begin(), classes.end(), std::size_t{0});
  }
  std::vector<std::vector<Matrix<float>>> tokens;
  std::vector<std::string> names;
  for (std::size_t c : classes) {
    if (c >= dataset.classes.size()) throw ContractError("class index " + std::to_string(c) + " out of range");
    const auto& cls = dataset.classes[c];
    names.push_back(cls.name);
    auto& per_video = tokens.emplace_back();
    for (const auto& v : cls.videos) per_video.push_back(aggregate_instance(pool, v.features));
  }
  return discriminative_power(std::span<const std::vector<Matrix<float>>>(tokens), names);
}

std::vector<std::size_t> token_ranking(std::span<const TokenScore> scores, const std::string& class_name) {
  std::vector<const TokenScore*> mine;
  for (const auto& s : scores)
    if (s.class_name == class_name) mine.push_back(&s);
  std::stable_sort(mine.begin(), mine.end(),
                   [](const TokenScore* a, const TokenScore* b) { return a->score > b->score; });
  std::vector<std::size_t> out;
  for (const auto* s : mine) out.push_back(s->token);
  return out;
}

void write_heatmap_csv(std::ostream& out, std::span<const TokenScore> scores) {
  out << "class,token,score\n";
  for (const auto& s : scores) out << s.class_name << ',' << s.token << ',' << s.score << '\n';
}

void write_attention_csv(std::ostream& out, const Matrix<float>& weights) {
  out << "token";
  for (std::size_t t = 0; t < weights.cols(); ++t) out << ",frame_" << t;
  out << '\n';
  for (std::size_t m = 0; m < weights.rows(); ++m) {
    out << m;
    for (std::size_t t = 0; t < weights.cols(); ++t) out << ',' << weights(m, t);
    out << '\n';
  }
}

}  // namespace team
