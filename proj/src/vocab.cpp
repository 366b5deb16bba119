#include "hmt/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hmt/errors.hpp"

namespace hmt {

Vocab::Vocab(bool lowercase) : lowercase_(lowercase) {
  add(kPadToken);
  add(kUnkToken);
}

void Vocab::add(const std::string& normalized) {
  index_.emplace(normalized, tokens_.size());
  tokens_.push_back(normalized);
}

std::string Vocab::normalize(const std::string& token) const {
  if (!lowercase_) return token;
  std::string out = token;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Vocab Vocab::build(std::span<const std::vector<std::string>> corpus, std::size_t min_count,
                   bool lowercase) {
  if (corpus.empty()) throw ArgumentError("build_vocab: empty corpus");
  if (min_count < 1) throw ArgumentError("build_vocab: min_count must be >= 1");
  Vocab v(lowercase);
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      auto [it, inserted] = counts.try_emplace(v.normalize(tok), 0);
      if (inserted) order.push_back(it->first);
      ++it->second;
    }
  }
  for (const auto& tok : order) {
    if (counts[tok] >= min_count && !v.index_.contains(tok)) v.add(tok);
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens, bool lowercase) {
  if (tokens.size() < 2 || tokens[kPad] != kPadToken || tokens[kUnk] != kUnkToken) {
    throw FormatError("vocabulary must start with the reserved padding and unknown tokens");
  }
  Vocab v(lowercase);
  for (std::size_t k = 2; k < tokens.size(); ++k) {
    if (v.index_.contains(tokens[k])) throw FormatError("duplicate vocabulary token '" + tokens[k] + "'");
    v.add(tokens[k]);
  }
  return v;
}

bool Vocab::contains(const std::string& token) const { return index_.contains(normalize(token)); }

std::size_t Vocab::id(const std::string& token) const {
  auto it = index_.find(normalize(token));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<nd::Index> Vocab::ids(std::span<const std::string> tokens) const {
  std::vector<nd::Index> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(static_cast<nd::Index>(id(t)));
  return out;
}

EmbeddingMatrix random_embeddings(const Vocab& vocab, std::size_t dim, std::mt19937_64& rng) {
  EmbeddingMatrix m{nd::Parameter<double>("embeddings", static_cast<nd::Index>(vocab.size()),
                                          static_cast<nd::Index>(dim)),
                    true};
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  for (nd::Index r = 0; r < m.table.value.rows(); ++r) {
    for (nd::Index c = 0; c < m.table.value.cols(); ++c) m.table.value(r, c) = dist(rng);
  }
  m.table.value.row(Vocab::kPad).setZero();
  return m;
}

EmbeddingMatrix load_pretrained(const std::filesystem::path& path, const Vocab& vocab,
                                std::size_t dim, std::mt19937_64& rng, std::size_t* found) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read pretrained vectors from " + path.string());
  EmbeddingMatrix m = random_embeddings(vocab, dim, rng);
  std::vector<bool> seen(vocab.size(), false);
  std::size_t hits = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    values.clear();
    std::string field;
    while (fields >> field) {
      double x = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
      if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
      }
      values.push_back(x);
    }
    if (values.size() != dim) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(values.size()));
    }
    // first line for a normalized token wins
    const std::size_t id = vocab.id(token);
    if (id == Vocab::kUnk || id == Vocab::kPad || seen[id]) continue;
    seen[id] = true;
    ++hits;
    for (std::size_t c = 0; c < dim; ++c) {
      m.table.value(static_cast<nd::Index>(id), static_cast<nd::Index>(c)) = values[c];
    }
  }
  if (in.bad()) throw IoError("error while reading " + path.string());
  if (found) *found = hits;
  return m;
}

nd::Var<double> embed(nd::Tape<double>& tape, std::span<const nd::Index> ids,
                      EmbeddingMatrix& matrix) {
  return tape.gather_rows(matrix.table, ids);
}

}  // namespace hmt
