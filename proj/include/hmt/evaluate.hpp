#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "hmt/data.hpp"
#include "hmt/model.hpp"

namespace hmt {

/// Micro-averaged exact-match score.
struct ExtractionScore {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// P = correct/predicted, R = correct/gold, F1 their harmonic mean; each is
  /// 0 when its denominator is 0.
  static ExtractionScore from_counts(std::size_t predicted, std::size_t gold, std::size_t correct);
};

/// Number of predictions matching a gold item, each gold item used at most once.
template <typename T>
std::size_t count_matches(std::vector<T> predicted, std::vector<T> gold) {
  std::sort(predicted.begin(), predicted.end());
  std::sort(gold.begin(), gold.end());
  std::size_t matched = 0;
  auto p = predicted.begin();
  auto g = gold.begin();
  while (p != predicted.end() && g != gold.end()) {
    if (*p < *g) {
      ++p;
    } else if (*g < *p) {
      ++g;
    } else {
      ++matched;
      ++p;
      ++g;
    }
  }
  return matched;
}

/// Triple match key ignores spans: head string, relation and tail string.
std::size_t count_triple_matches(std::span<const Triple> predicted, std::span<const Triple> gold);

struct Evaluation {
  ExtractionScore je;  // relational triples
  ExtractionScore ee;  // (span, type) entities; all zero for ablated models
};

/// Predicts tags per position by argmax and decodes them with the tagging
/// codecs. Does not modify the model.
Evaluation evaluate(HmtModel& model, std::span<const Example> examples, const TagInventory& ee,
                    const TagInventory& je);

}  // namespace hmt
