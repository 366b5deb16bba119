#pragma once

// Line-delimited JSON sentence records and their tagged training form.
//
//   {"tokens": ["United", "States", ...],
//    "entities": [{"start": 0, "end": 1, "type": "LOC"}, ...],
//    "triples": [{"head_start": 0, "head_end": 1, "tail_start": 5, "tail_end": 7,
//                 "relation": "Country--President"}, ...]}
//
// Spans are inclusive token indices. "entities" and "triples" are optional;
// extra keys are ignored.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hmt/model.hpp"
#include "hmt/tagging.hpp"
#include "hmt/vocab.hpp"

namespace hmt {

struct SentenceRecord {
  std::vector<std::string> tokens;
  std::vector<EntityAnnotation> entities;
  std::vector<TripleAnnotation> triples;
  bool annotated = false;  // the record carried an "entities" or "triples" key
};

/// Parses one record. Structural problems throw FormatError mentioning
/// line_no. Overlapping entities and triples that share tokens are repaired
/// (the earlier annotation wins) and described in warnings.
SentenceRecord parse_record(const std::string& line, std::size_t line_no,
                            std::vector<std::string>* warnings = nullptr);

/// Blank lines are skipped.
std::vector<SentenceRecord> read_records(std::istream& in, std::vector<std::string>* warnings = nullptr);
std::vector<SentenceRecord> read_records(const std::filesystem::path& path,
                                         std::vector<std::string>* warnings = nullptr);

nlohmann::json record_to_json(const SentenceRecord& r);

/// A record converted to model inputs and gold tags.
struct Example {
  std::vector<std::string> tokens;
  std::vector<Index> ids;
  TagSequence ee;
  TagSequence je;
  std::vector<EntityAnnotation> entities;
  std::vector<Triple> triples;
};

/// Annotations whose types are missing from the inventories raise AnnotationError.
Example make_example(const SentenceRecord& r, const Vocab& vocab, const TagInventory& ee,
                     const TagInventory& je);

/// Inputs and gold annotations only; tag sequences are left empty. Suitable
/// for evaluation, where gold types need not appear in the inventories.
Example make_eval_example(const SentenceRecord& r, const Vocab& vocab);

std::vector<std::string> collect_entity_types(const std::vector<SentenceRecord>& records);
std::vector<std::string> collect_relation_types(const std::vector<SentenceRecord>& records);

}  // namespace hmt
