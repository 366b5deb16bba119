#include "hmt/evaluate.hpp"

#include <algorithm>
#include <tuple>

namespace hmt {

ExtractionScore ExtractionScore::from_counts(std::size_t predicted, std::size_t gold,
                                             std::size_t correct) {
  ExtractionScore s{predicted, gold, correct};
  s.precision = predicted == 0 ? 0.0 : double(correct) / double(predicted);
  s.recall = gold == 0 ? 0.0 : double(correct) / double(gold);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}


std::size_t count_triple_matches(std::span<const Triple> predicted, std::span<const Triple> gold) {
  using Key = std::tuple<std::string, std::string, std::string>;
  auto keys = [](std::span<const Triple> ts) {
    std::vector<Key> out;
    for (const auto& t : ts) out.emplace_back(t.head, t.relation, t.tail);
    return out;
  };
  return count_matches(keys(predicted), keys(gold));
}

Evaluation evaluate(HmtModel& model, std::span<const Example> examples, const TagInventory& ee,
                    const TagInventory& je) {
  std::size_t je_pred = 0, je_gold = 0, je_ok = 0;
  std::size_t ee_pred = 0, ee_gold = 0, ee_ok = 0;
  for (const auto& ex : examples) {
    TagPrediction tags = predict_tags(model, ex.ids);
    auto triples = decode_triples(tags.je, ex.tokens, je);
    je_pred += triples.size();
    je_gold += ex.triples.size();
    je_ok += count_triple_matches(triples, ex.triples);
    if (model.has_ee()) {
      auto entities = decode_entities(tags.ee, ee);
      ee_pred += entities.size();
      ee_gold += ex.entities.size();
      ee_ok += count_matches(entities, ex.entities);
    }
  }
  return {ExtractionScore::from_counts(je_pred, je_gold, je_ok),
          ExtractionScore::from_counts(ee_pred, ee_gold, ee_ok)};
}

}  // namespace hmt
