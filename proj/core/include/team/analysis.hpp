#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "team/dataset.hpp"
#include "team/model.hpp"

namespace team {

struct TokenScore {
  std::string class_name;
  std::size_t token = 0;
  double intra = 0;  // mean similarity of the class's videos to its prototype
  double inter = 0;  // max similarity of the prototype to another class's prototype
  double score = 0;  // intra - inter
};

/// Per-token discriminative power from instance tokens already computed:
/// `tokens[c][v]` is the M x D token set of video v of class c.
std::vector<TokenScore> discriminative_power(
    std::span<const std::vector<Matrix<float>>> tokens, std::span<const std::string> class_names);

/// Same, aggregating every video of the chosen classes with `pool`. An empty
/// subset means all classes.
std::vector<TokenScore> discriminative_power(const PatternPool<float>& pool,
                                             const FeatureDataset& dataset,
                                             std::span<const std::size_t> class_subset = {});

/// Tokens of one class ordered from most to least discriminative.
std::vector<std::size_t> token_ranking(std::span<const TokenScore> scores, const std::string& class_name);

/// `class,token,score`
void write_heatmap_csv(std::ostream& out, std::span<const TokenScore> scores);
/// Header `token,frame_0,...,frame_{T-1}`, then one row of weights per token.
void write_attention_csv(std::ostream& out, const Matrix<float>& weights);

}  // namespace team
