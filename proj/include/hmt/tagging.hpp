#pragma once

// Tag inventories and codecs for the two tagging tasks.
//
// EE tags are "<type>-<B|I|E|S>" (BIOES). JE tags are
// "<relation>-<E1|E2>-<B|I>" (BIO) where E1 marks the head entity of a triple
// and E2 the tail. Tag 0 is always "O".

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hmt {

using TagId = int;
using TagSequence = std::vector<TagId>;

enum class Task { kEE, kJE };
enum class Position : std::uint8_t { kBegin, kInside, kEnd, kSingle };
enum class Role : std::uint8_t { kHead, kTail };  // E1, E2

/// Inclusive token range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start + 1; }
  bool overlaps(const Span& o) const { return start <= o.end && o.start <= end; }
  auto operator<=>(const Span&) const = default;
};

struct EntityAnnotation {
  Span span;
  std::string type;
  auto operator<=>(const EntityAnnotation&) const = default;
};

struct TripleAnnotation {
  Span head;
  Span tail;
  std::string relation;
  auto operator<=>(const TripleAnnotation&) const = default;
};

/// An extracted triple with surface strings and provenance spans.
struct Triple {
  std::string head;
  std::string relation;
  std::string tail;
  Span head_span;
  Span tail_span;
  auto operator<=>(const Triple&) const = default;
};

struct Tag {
  bool outside = true;
  std::size_t type = 0;  // index into the inventory's type list
  Role role = Role::kHead;
  Position position = Position::kBegin;
};

class TagInventory {
 public:
  /// EE inventory: O then, for each type in sorted order, B I E S.
  static TagInventory entities(std::vector<std::string> types);
  /// JE inventory: O then, for each relation in sorted order, E1-B E1-I E2-B E2-I.
  static TagInventory relations(std::vector<std::string> relation_types);

  Task task() const { return task_; }
  std::size_t size() const { return tags_.size(); }
  const std::vector<std::string>& types() const { return types_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(TagId id) const { return labels_.at(static_cast<std::size_t>(id)); }
  const Tag& tag(TagId id) const { return tags_.at(static_cast<std::size_t>(id)); }

  std::optional<std::size_t> type_index(const std::string& type) const;
  std::optional<TagId> find_label(const std::string& label) const;
  /// EE tag id.
  TagId id(std::size_t type, Position pos) const;
  /// JE tag id.
  TagId id(std::size_t relation, Role role, Position pos) const;

  static constexpr TagId kOutside = 0;

 private:
  TagInventory(Task task, std::vector<std::string> types);

  Task task_;
  std::vector<std::string> types_;
  std::vector<Tag> tags_;
  std::vector<std::string> labels_;
};

/// Builds both inventories; type lists must be non-empty and duplicate-free.
std::pair<TagInventory, TagInventory> build_inventories(std::vector<std::string> entity_types,
                                                        std::vector<std::string> relation_types);

/// Free-form messages describing repairs made while decoding malformed tags.
using DecodeNotes = std::vector<std::string>;

TagSequence encode_ee_tags(std::size_t length, std::span<const EntityAnnotation> entities,
                           const TagInventory& inventory);

/// Lenient BIOES decoding. Valid sequences decode to exactly what encoded
/// them. Malformed input is repaired:
///   - O or the end of the sentence closes an open run, which is kept;
///   - B, S, or a tag of another type arriving while a run is open drops that run;
///   - I with no open run of its type starts a new run;
///   - E with no open run of its type is dropped.
std::vector<EntityAnnotation> decode_entities(std::span<const TagId> tags,
                                              const TagInventory& inventory,
                                              DecodeNotes* notes = nullptr);

/// Throws OverlapError if any token would receive two tags.
TagSequence encode_je_tags(std::size_t length, std::span<const TripleAnnotation> triples,
                           const TagInventory& inventory);

struct OverlapResolution {
  std::vector<TripleAnnotation> kept;
  std::vector<std::size_t> dropped;  // indices into the input
};

/// Keeps triples in annotation order, dropping any that would claim a token
/// already claimed by an earlier kept triple.
OverlapResolution resolve_triple_overlaps(std::span<const TripleAnnotation> triples);

struct RoleRun {
  std::size_t relation;
  Role role;
  Span span;
};

/// Maximal B(I)* runs of a JE sequence. An I that does not continue a run of
/// the same relation and role starts a new one.
std::vector<RoleRun> extract_role_runs(std::span<const TagId> tags, const TagInventory& inventory);

/// Pairs head and tail runs per relation. Head runs are visited left to right;
/// each takes the nearest unpaired tail run of its relation by distance between
/// run starts, ties going to the later run. Unpaired runs are dropped.
std::vector<TripleAnnotation> decode_triple_spans(std::span<const TagId> tags,
                                                  const TagInventory& inventory,
                                                  DecodeNotes* notes = nullptr);

std::vector<Triple> decode_triples(std::span<const TagId> tags,
                                   std::span<const std::string> tokens,
                                   const TagInventory& inventory, DecodeNotes* notes = nullptr);

/// Space-joined tokens of a span.
std::string surface(std::span<const std::string> tokens, const Span& span);

Triple make_triple(const TripleAnnotation& t, std::span<const std::string> tokens);

}  // namespace hmt
