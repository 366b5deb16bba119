#include "hmt/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "hmt/errors.hpp"

namespace hmt {
namespace {

std::string where(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

std::size_t index_field(const nlohmann::json& obj, const char* key, std::size_t n,
                        std::size_t line_no) {
  if (!obj.contains(key) || !obj.at(key).is_number_integer()) {
    throw FormatError(where(line_no) + "missing integer field '" + key + "'");
  }
  const auto v = obj.at(key).get<long long>();
  if (v < 0 || static_cast<std::size_t>(v) >= n) {
    throw FormatError(where(line_no) + "'" + key + "' = " + std::to_string(v) +
                      " outside the " + std::to_string(n) + " tokens");
  }
  return static_cast<std::size_t>(v);
}

std::string string_field(const nlohmann::json& obj, const char* key, std::size_t line_no) {
  if (!obj.contains(key) || !obj.at(key).is_string() || obj.at(key).get<std::string>().empty()) {
    throw FormatError(where(line_no) + "missing string field '" + key + "'");
  }
  return obj.at(key).get<std::string>();
}

Span span_field(const nlohmann::json& obj, const char* start, const char* end, std::size_t n,
                std::size_t line_no) {
  Span s{index_field(obj, start, n, line_no), index_field(obj, end, n, line_no)};
  if (s.start > s.end) {
    throw FormatError(where(line_no) + "'" + start + "' exceeds '" + end + "'");
  }
  return s;
}

}  // namespace

SentenceRecord parse_record(const std::string& line, std::size_t line_no,
                            std::vector<std::string>* warnings) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(where(line_no) + "malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw FormatError(where(line_no) + "record must be a JSON object");
  if (!j.contains("tokens") || !j["tokens"].is_array() || j["tokens"].empty()) {
    throw FormatError(where(line_no) + "'tokens' must be a non-empty array");
  }
  SentenceRecord r;
  for (const auto& t : j["tokens"]) {
    if (!t.is_string() || t.get<std::string>().empty()) {
      throw FormatError(where(line_no) + "tokens must be non-empty strings");
    }
    r.tokens.push_back(t.get<std::string>());
  }
  const std::size_t n = r.tokens.size();
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(where(line_no) + msg);
  };

  if (j.contains("entities")) {
    r.annotated = true;
    if (!j["entities"].is_array()) throw FormatError(where(line_no) + "'entities' must be an array");
    for (const auto& e : j["entities"]) {
      EntityAnnotation a{span_field(e, "start", "end", n, line_no), string_field(e, "type", line_no)};
      const bool clash = std::any_of(r.entities.begin(), r.entities.end(),
                                     [&](const EntityAnnotation& k) { return k.span.overlaps(a.span); });
      if (clash) {
        warn("dropped entity overlapping an earlier one at tokens " + std::to_string(a.span.start) +
             "-" + std::to_string(a.span.end));
        continue;
      }
      r.entities.push_back(std::move(a));
    }
  }
  if (j.contains("triples")) {
    r.annotated = true;
    if (!j["triples"].is_array()) throw FormatError(where(line_no) + "'triples' must be an array");
    std::vector<TripleAnnotation> raw;
    for (const auto& t : j["triples"]) {
      raw.push_back({span_field(t, "head_start", "head_end", n, line_no),
                     span_field(t, "tail_start", "tail_end", n, line_no),
                     string_field(t, "relation", line_no)});
    }
    auto resolved = resolve_triple_overlaps(raw);
    for (std::size_t k : resolved.dropped) {
      warn("dropped triple " + std::to_string(k) + " (" + raw[k].relation +
           ") sharing tokens with an earlier triple");
    }
    r.triples = std::move(resolved.kept);
  }
  return r;
}

std::vector<SentenceRecord> read_records(std::istream& in, std::vector<std::string>* warnings) {
  std::vector<SentenceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    out.push_back(parse_record(line, line_no, warnings));
  }
  if (in.bad()) throw IoError("error while reading records");
  return out;
}

std::vector<SentenceRecord> read_records(const std::filesystem::path& path,
                                         std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read data file " + path.string());
  try {
    return read_records(in, warnings);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

nlohmann::json record_to_json(const SentenceRecord& r) {
  nlohmann::json j;
  j["tokens"] = r.tokens;
  j["entities"] = nlohmann::json::array();
  for (const auto& e : r.entities) {
    j["entities"].push_back({{"start", e.span.start}, {"end", e.span.end}, {"type", e.type}});
  }
  j["triples"] = nlohmann::json::array();
  for (const auto& t : r.triples) {
    j["triples"].push_back({{"head_start", t.head.start},
                            {"head_end", t.head.end},
                            {"tail_start", t.tail.start},
                            {"tail_end", t.tail.end},
                            {"relation", t.relation}});
  }
  return j;
}

Example make_example(const SentenceRecord& r, const Vocab& vocab, const TagInventory& ee,
                     const TagInventory& je) {
  Example ex;
  ex.tokens = r.tokens;
  ex.ids = vocab.ids(r.tokens);
  ex.ee = encode_ee_tags(r.tokens.size(), r.entities, ee);
  ex.je = encode_je_tags(r.tokens.size(), r.triples, je);
  ex.entities = r.entities;
  std::sort(ex.entities.begin(), ex.entities.end());
  for (const auto& t : r.triples) ex.triples.push_back(make_triple(t, r.tokens));
  return ex;
}

Example make_eval_example(const SentenceRecord& r, const Vocab& vocab) {
  Example ex;
  ex.tokens = r.tokens;
  ex.ids = vocab.ids(r.tokens);
  ex.entities = r.entities;
  std::sort(ex.entities.begin(), ex.entities.end());
  for (const auto& t : r.triples) ex.triples.push_back(make_triple(t, r.tokens));
  return ex;
}

std::vector<std::string> collect_entity_types(const std::vector<SentenceRecord>& records) {
  std::set<std::string> s;
  for (const auto& r : records) {
    for (const auto& e : r.entities) s.insert(e.type);
  }
  return {s.begin(), s.end()};
}

std::vector<std::string> collect_relation_types(const std::vector<SentenceRecord>& records) {
  std::set<std::string> s;
  for (const auto& r : records) {
    for (const auto& t : r.triples) s.insert(t.relation);
  }
  return {s.begin(), s.end()};
}

}  // namespace hmt
