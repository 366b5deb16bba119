#include "hmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmt/errors.hpp"

namespace hmt {
namespace {

constexpr char kMagic[8] = {'H', 'M', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr char kTrailer[8] = {'H', 'M', 'T', 'C', 'K', 'E', 'N', 'D'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  template <typename U>
  void uint(U v) {
    unsigned char b[sizeof(U)];
    for (std::size_t k = 0; k < sizeof(U); ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
    bytes(b, sizeof b);
  }
  void f64(double x) { uint(std::bit_cast<std::uint64_t>(x)); }
  void string(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}
  void bytes(void* p, std::size_t n, const char* field) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw CheckpointError(std::string("truncated checkpoint while reading ") + field);
    }
  }
  template <typename U>
  U uint(const char* field) {
    unsigned char b[sizeof(U)];
    bytes(b, sizeof b, field);
    U v = 0;
    for (std::size_t k = 0; k < sizeof(U); ++k) v |= static_cast<U>(U(b[k]) << (8 * k));
    return v;
  }
  double f64(const char* field) { return std::bit_cast<double>(uint<std::uint64_t>(field)); }
  std::string string(std::size_t max_len, const char* field) {
    const auto n = uint<std::uint32_t>(field);
    if (n > max_len) throw CheckpointError(std::string("implausible length for ") + field);
    std::string s(n, '\0');
    bytes(s.data(), n, field);
    return s;
  }

 private:
  std::istream& in_;
};

nlohmann::json dims_json(const ModelDims& d) {
  return {{"vocab_size", d.vocab_size}, {"embed_dim", d.embed_dim},   {"hidden_dim", d.hidden_dim},
          {"tag_dim", d.tag_dim},       {"ee_tags", d.ee_tags},       {"je_tags", d.je_tags},
          {"with_ee", d.with_ee}};
}

template <typename T>
T header_field(const nlohmann::json& h, const char* key) {
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError(std::string("checkpoint header field '") + key + "' missing or malformed");
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const HmtModel& model,
                     const TagInventory& ee, const TagInventory& je, const Vocab& vocab,
                     const TrainConfig& config) {
  if (vocab.size() != model.dims().vocab_size) {
    throw ArgumentError("vocabulary size does not match the model's embedding table");
  }
  nlohmann::json header;
  header["config"] = config;
  header["dims"] = dims_json(model.dims());
  header["entity_types"] = ee.types();
  header["relation_types"] = je.types();
  header["ee_tags"] = ee.labels();
  header["je_tags"] = je.labels();
  header["vocab"] = {{"lowercase", vocab.lowercase()}, {"tokens", vocab.tokens()}};
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.uint(kCheckpointVersion);
  w.uint(static_cast<std::uint64_t>(text.size()));
  w.bytes(text.data(), text.size());
  const auto params = model.parameters();
  w.uint(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.string(p->name);
    w.uint(static_cast<std::uint64_t>(p->value.rows()));
    w.uint(static_cast<std::uint64_t>(p->value.cols()));
    for (Index r = 0; r < p->value.rows(); ++r) {
      for (Index c = 0; c < p->value.cols(); ++c) w.f64(p->value(r, c));
    }
  }
  w.bytes(kTrailer, sizeof kTrailer);
  out.flush();
  if (!out) throw IoError("error while writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  Reader r(in);

  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw CheckpointError("not a checkpoint file (magic)");
  const auto version = r.uint<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = r.uint<std::uint64_t>("header_len");
  if (header_len > (std::uint64_t(1) << 34)) throw CheckpointError("implausible header_len");
  std::string text(static_cast<std::size_t>(header_len), '\0');
  r.bytes(text.data(), text.size(), "header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint header: ") + e.what());
  }

  TrainConfig config;
  try {
    config = header.at("config").get<TrainConfig>();
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint header field 'config': ") + e.what());
  }
  const nlohmann::json& dj = header.contains("dims") ? header["dims"] : nlohmann::json::object();
  ModelDims dims;
  dims.vocab_size = header_field<std::size_t>(dj, "vocab_size");
  dims.embed_dim = header_field<std::size_t>(dj, "embed_dim");
  dims.hidden_dim = header_field<std::size_t>(dj, "hidden_dim");
  dims.tag_dim = header_field<std::size_t>(dj, "tag_dim");
  dims.ee_tags = header_field<std::size_t>(dj, "ee_tags");
  dims.je_tags = header_field<std::size_t>(dj, "je_tags");
  dims.with_ee = header_field<bool>(dj, "with_ee");

  std::optional<TagInventory> ee, je;
  try {
    ee = TagInventory::entities(header_field<std::vector<std::string>>(header, "entity_types"));
    je = TagInventory::relations(header_field<std::vector<std::string>>(header, "relation_types"));
  } catch (const ArgumentError& e) {
    throw CheckpointError(std::string("checkpoint inventories: ") + e.what());
  }
  if (header_field<std::vector<std::string>>(header, "ee_tags") != ee->labels()) {
    throw CheckpointError("checkpoint header field 'ee_tags' disagrees with entity_types");
  }
  if (header_field<std::vector<std::string>>(header, "je_tags") != je->labels()) {
    throw CheckpointError("checkpoint header field 'je_tags' disagrees with relation_types");
  }
  if (dims.je_tags != je->size() || (dims.with_ee && dims.ee_tags != ee->size())) {
    throw CheckpointError("checkpoint header field 'dims' disagrees with the tag inventories");
  }
  const nlohmann::json& vj = header.contains("vocab") ? header["vocab"] : nlohmann::json::object();
  std::optional<Vocab> vocab;
  try {
    vocab = Vocab::from_tokens(header_field<std::vector<std::string>>(vj, "tokens"),
                               header_field<bool>(vj, "lowercase"));
  } catch (const FormatError& e) {
    throw CheckpointError(std::string("checkpoint header field 'vocab': ") + e.what());
  }
  if (vocab->size() != dims.vocab_size) {
    throw CheckpointError("checkpoint header field 'vocab' size disagrees with dims.vocab_size");
  }

  std::mt19937_64 rng(0);
  std::optional<HmtModel> model;
  try {
    model.emplace(dims, rng);
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint header field 'dims': ") + e.what());
  }
  auto params = model->parameters();
  const auto count = r.uint<std::uint32_t>("block_count");
  if (count != params.size()) {
    throw CheckpointError("checkpoint field 'block_count' is " + std::to_string(count) + ", expected " +
                          std::to_string(params.size()));
  }
  for (auto* p : params) {
    const std::string name = r.string(1024, "block name");
    if (name != p->name) throw CheckpointError("checkpoint block '" + name + "' where '" + p->name + "' was expected");
    const auto rows = r.uint<std::uint64_t>("block rows");
    const auto cols = r.uint<std::uint64_t>("block cols");
    if (rows != static_cast<std::uint64_t>(p->value.rows()) || cols != static_cast<std::uint64_t>(p->value.cols())) {
      throw CheckpointError("checkpoint block '" + name + "' has shape " +
                            nd::shape_string(Index(rows), Index(cols)) + ", expected " +
                            nd::shape_string(p->value));
    }
    for (Index i = 0; i < p->value.rows(); ++i) {
      for (Index c = 0; c < p->value.cols(); ++c) p->value(i, c) = r.f64(name.c_str());
    }
    if (!p->value.allFinite()) throw CheckpointError("checkpoint block '" + name + "' holds non-finite values");
  }
  char trailer[8];
  r.bytes(trailer, sizeof trailer, "trailer");
  if (std::memcmp(trailer, kTrailer, sizeof trailer) != 0) throw CheckpointError("corrupt checkpoint trailer");
  return Checkpoint{config, std::move(*ee), std::move(*je), std::move(*vocab), std::move(*model)};
}

}  // namespace hmt
