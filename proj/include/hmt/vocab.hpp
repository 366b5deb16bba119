#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hmt/nd/tape.hpp"

namespace hmt {

/// Token <-> id mapping. Ids 0 and 1 are reserved for padding and unknown
/// tokens; lookups of anything else absent from the map return kUnk.
class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kUnkToken = "<unk>";

  explicit Vocab(bool lowercase = true);

  /// Tokens seen at least min_count times, in order of first occurrence.
  static Vocab build(std::span<const std::vector<std::string>> corpus, std::size_t min_count = 1,
                     bool lowercase = true);
  /// Rebuilds a vocabulary from its id-ordered token list (reserved entries first).
  static Vocab from_tokens(std::vector<std::string> tokens, bool lowercase);

  std::size_t size() const { return tokens_.size(); }
  bool lowercase() const { return lowercase_; }
  std::string normalize(const std::string& token) const;
  bool contains(const std::string& token) const;
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::vector<nd::Index> ids(std::span<const std::string> tokens) const;

 private:
  void add(const std::string& normalized);

  bool lowercase_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Embedding matrix: one row per vocabulary entry.
struct EmbeddingMatrix {
  nd::Parameter<double> table;
  bool trainable = true;

  std::size_t rows() const { return static_cast<std::size_t>(table.value.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(table.value.cols()); }
};

/// Uniform in [-0.05, 0.05] with a zero padding row.
EmbeddingMatrix random_embeddings(const Vocab& vocab, std::size_t dim, std::mt19937_64& rng);

/// Reads whitespace-separated "token v1 ... v_dim" lines. Rows of vocabulary
/// tokens found in the file are copied verbatim; the rest are drawn as in
/// random_embeddings. Throws FormatError (with line number) on a dimension
/// mismatch and IoError if the file cannot be read.
EmbeddingMatrix load_pretrained(const std::filesystem::path& path, const Vocab& vocab,
                                std::size_t dim, std::mt19937_64& rng,
                                std::size_t* found = nullptr);

/// Row gather that participates in differentiation.
nd::Var<double> embed(nd::Tape<double>& tape, std::span<const nd::Index> ids,
                      EmbeddingMatrix& matrix);

}  // namespace hmt
