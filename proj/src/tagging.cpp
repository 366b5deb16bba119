#include "hmt/tagging.hpp"

#include <algorithm>
#include <set>

#include "hmt/errors.hpp"

namespace hmt {
namespace {

constexpr Position kBioes[] = {Position::kBegin, Position::kInside, Position::kEnd, Position::kSingle};
constexpr Position kBio[] = {Position::kBegin, Position::kInside};

char position_letter(Position p) {
  switch (p) {
    case Position::kBegin: return 'B';
    case Position::kInside: return 'I';
    case Position::kEnd: return 'E';
    case Position::kSingle: return 'S';
  }
  return '?';
}

std::vector<std::string> sorted_unique(std::vector<std::string> types, const char* what) {
  if (types.empty()) throw ArgumentError(std::string(what) + " list is empty");
  std::sort(types.begin(), types.end());
  auto dup = std::adjacent_find(types.begin(), types.end());
  if (dup != types.end()) throw ArgumentError(std::string("duplicate ") + what + " '" + *dup + "'");
  for (const auto& t : types) {
    if (t.empty()) throw ArgumentError(std::string("empty ") + what + " name");
  }
  return types;
}

void check_span(const Span& s, std::size_t length, const char* what) {
  if (s.start > s.end || s.end >= length) {
    throw AnnotationError(std::string(what) + " span [" + std::to_string(s.start) + ", " +
                          std::to_string(s.end) + "] invalid for sentence of length " +
                          std::to_string(length));
  }
}

void note(DecodeNotes* notes, std::string msg) {
  if (notes) notes->push_back(std::move(msg));
}

}  // namespace

TagInventory::TagInventory(Task task, std::vector<std::string> types)
    : task_(task), types_(std::move(types)) {
  tags_.push_back(Tag{});
  labels_.emplace_back("O");
  for (std::size_t k = 0; k < types_.size(); ++k) {
    if (task_ == Task::kEE) {
      for (Position p : kBioes) {
        tags_.push_back(Tag{false, k, Role::kHead, p});
        labels_.push_back(types_[k] + "-" + position_letter(p));
      }
    } else {
      for (Role r : {Role::kHead, Role::kTail}) {
        for (Position p : kBio) {
          tags_.push_back(Tag{false, k, r, p});
          labels_.push_back(types_[k] + (r == Role::kHead ? "-E1-" : "-E2-") + position_letter(p));
        }
      }
    }
  }
}

TagInventory TagInventory::entities(std::vector<std::string> types) {
  return TagInventory(Task::kEE, sorted_unique(std::move(types), "entity type"));
}

TagInventory TagInventory::relations(std::vector<std::string> relation_types) {
  return TagInventory(Task::kJE, sorted_unique(std::move(relation_types), "relation type"));
}

std::optional<std::size_t> TagInventory::type_index(const std::string& type) const {
  auto it = std::lower_bound(types_.begin(), types_.end(), type);
  if (it == types_.end() || *it != type) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

std::optional<TagId> TagInventory::find_label(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<TagId>(it - labels_.begin());
}

TagId TagInventory::id(std::size_t type, Position pos) const {
  if (task_ != Task::kEE || type >= types_.size() ) throw ArgumentError("not an EE tag");
  return static_cast<TagId>(1 + 4 * type + static_cast<std::size_t>(pos));
}

TagId TagInventory::id(std::size_t relation, Role role, Position pos) const {
  if (task_ != Task::kJE || relation >= types_.size() ||
      (pos != Position::kBegin && pos != Position::kInside)) {
    throw ArgumentError("not a JE tag");
  }
  return static_cast<TagId>(1 + 4 * relation + 2 * static_cast<std::size_t>(role) +
                            static_cast<std::size_t>(pos));
}

std::pair<TagInventory, TagInventory> build_inventories(std::vector<std::string> entity_types,
                                                        std::vector<std::string> relation_types) {
  return {TagInventory::entities(std::move(entity_types)),
          TagInventory::relations(std::move(relation_types))};
}

TagSequence encode_ee_tags(std::size_t length, std::span<const EntityAnnotation> entities,
                           const TagInventory& inventory) {
  if (inventory.task() != Task::kEE) throw ArgumentError("encode_ee_tags needs an EE inventory");
  TagSequence tags(length, TagInventory::kOutside);
  std::vector<bool> used(length, false);
  for (const auto& e : entities) {
    check_span(e.span, length, "entity");
    auto type = inventory.type_index(e.type);
    if (!type) throw AnnotationError("unknown entity type '" + e.type + "'");
    for (std::size_t t = e.span.start; t <= e.span.end; ++t) {
      if (used[t]) throw AnnotationError("overlapping entity spans at token " + std::to_string(t));
      used[t] = true;
    }
    if (e.span.length() == 1) {
      tags[e.span.start] = inventory.id(*type, Position::kSingle);
      continue;
    }
    tags[e.span.start] = inventory.id(*type, Position::kBegin);
    for (std::size_t t = e.span.start + 1; t < e.span.end; ++t) {
      tags[t] = inventory.id(*type, Position::kInside);
    }
    tags[e.span.end] = inventory.id(*type, Position::kEnd);
  }
  return tags;
}

std::vector<EntityAnnotation> decode_entities(std::span<const TagId> tags,
                                              const TagInventory& inventory, DecodeNotes* notes) {
  std::vector<EntityAnnotation> out;
  std::optional<std::pair<std::size_t, std::size_t>> open;  // (type, start)

  auto keep_open = [&](std::size_t end) {
    if (!open) return;
    out.push_back({{open->second, end}, inventory.types()[open->first]});
    note(notes, "kept run without E ending at token " + std::to_string(end));
    open.reset();
  };
  auto drop_open = [&](std::size_t at) {
    if (!open) return;
    note(notes, "dropped dangling run interrupted at token " + std::to_string(at));
    open.reset();
  };

  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Tag& tag = inventory.tag(tags[t]);
    if (tag.outside) {
      if (open) keep_open(t - 1);
      continue;
    }
    const bool continues = open && open->first == tag.type;
    switch (tag.position) {
      case Position::kBegin:
        drop_open(t);
        open = std::make_pair(tag.type, t);
        break;
      case Position::kSingle:
        drop_open(t);
        out.push_back({{t, t}, inventory.types()[tag.type]});
        break;
      case Position::kInside:
        if (!continues) {
          drop_open(t);
          note(notes, "promoted orphan I at token " + std::to_string(t));
          open = std::make_pair(tag.type, t);
        }
        break;
      case Position::kEnd:
        if (continues) {
          out.push_back({{open->second, t}, inventory.types()[tag.type]});
          open.reset();
        } else {
          drop_open(t);
          note(notes, "dropped dangling E at token " + std::to_string(t));
        }
        break;
    }
  }
  if (open) keep_open(tags.size() - 1);
  return out;
}

TagSequence encode_je_tags(std::size_t length, std::span<const TripleAnnotation> triples,
                           const TagInventory& inventory) {
  if (inventory.task() != Task::kJE) throw ArgumentError("encode_je_tags needs a JE inventory");
  TagSequence tags(length, TagInventory::kOutside);
  std::vector<bool> used(length, false);
  auto mark = [&](const Span& s, std::size_t rel, Role role) {
    for (std::size_t t = s.start; t <= s.end; ++t) {
      if (used[t]) {
        throw OverlapError(t, "token " + std::to_string(t) + " claimed by more than one triple role");
      }
      used[t] = true;
      tags[t] = inventory.id(rel, role, t == s.start ? Position::kBegin : Position::kInside);
    }
  };
  for (const auto& tr : triples) {
    check_span(tr.head, length, "head");
    check_span(tr.tail, length, "tail");
    auto rel = inventory.type_index(tr.relation);
    if (!rel) throw AnnotationError("unknown relation type '" + tr.relation + "'");
    mark(tr.head, *rel, Role::kHead);
    mark(tr.tail, *rel, Role::kTail);
  }
  return tags;
}

OverlapResolution resolve_triple_overlaps(std::span<const TripleAnnotation> triples) {
  OverlapResolution r;
  std::vector<Span> claimed;
  auto clashes = [&](const Span& s) {
    return std::any_of(claimed.begin(), claimed.end(), [&](const Span& c) { return c.overlaps(s); });
  };
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const auto& t = triples[k];
    if (t.head.overlaps(t.tail) || clashes(t.head) || clashes(t.tail)) {
      r.dropped.push_back(k);
      continue;
    }
    claimed.push_back(t.head);
    claimed.push_back(t.tail);
    r.kept.push_back(t);
  }
  return r;
}

std::vector<RoleRun> extract_role_runs(std::span<const TagId> tags, const TagInventory& inventory) {
  std::vector<RoleRun> runs;
  bool open = false;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const Tag& tag = inventory.tag(tags[t]);
    if (tag.outside) {
      open = false;
      continue;
    }
    const bool continues = open && tag.position == Position::kInside &&
                           runs.back().relation == tag.type && runs.back().role == tag.role;
    if (continues) {
      runs.back().span.end = t;
    } else {
      runs.push_back({tag.type, tag.role, {t, t}});
      open = true;
    }
  }
  return runs;
}

std::vector<TripleAnnotation> decode_triple_spans(std::span<const TagId> tags,
                                                  const TagInventory& inventory,
                                                  DecodeNotes* notes) {
  if (inventory.task() != Task::kJE) throw ArgumentError("decode_triples needs a JE inventory");
  const auto runs = extract_role_runs(tags, inventory);
  std::vector<bool> paired(runs.size(), false);
  std::vector<TripleAnnotation> out;
  for (std::size_t h = 0; h < runs.size(); ++h) {
    if (runs[h].role != Role::kHead) continue;
    std::optional<std::size_t> best;
    std::size_t best_distance = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      if (paired[k] || runs[k].role != Role::kTail || runs[k].relation != runs[h].relation) continue;
      const std::size_t a = runs[h].span.start, b = runs[k].span.start;
      const std::size_t distance = a > b ? a - b : b - a;
      // runs are in position order, so >= prefers the later run on ties
      if (!best || distance <= best_distance) {
        best = k;
        best_distance = distance;
      }
    }
    if (!best) {
      note(notes, "unpaired head run at token " + std::to_string(runs[h].span.start));
      continue;
    }
    paired[*best] = true;
    paired[h] = true;
    out.push_back({runs[h].span, runs[*best].span, inventory.types()[runs[h].relation]});
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (!paired[k] && runs[k].role == Role::kTail) {
      note(notes, "unpaired tail run at token " + std::to_string(runs[k].span.start));
    }
  }
  return out;
}

std::string surface(std::span<const std::string> tokens, const Span& span) {
  if (span.end >= tokens.size() || span.start > span.end) {
    throw ArgumentError("span out of range of the token list");
  }
  std::string s = tokens[span.start];
  for (std::size_t t = span.start + 1; t <= span.end; ++t) {
    s += ' ';
    s += tokens[t];
  }
  return s;
}

Triple make_triple(const TripleAnnotation& t, std::span<const std::string> tokens) {
  return {surface(tokens, t.head), t.relation, surface(tokens, t.tail), t.head, t.tail};
}

std::vector<Triple> decode_triples(std::span<const TagId> tags,
                                   std::span<const std::string> tokens,
                                   const TagInventory& inventory, DecodeNotes* notes) {
  if (tags.size() != tokens.size()) {
    throw ArgumentError("decode_triples: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(tokens.size()) + " tokens");
  }
  std::vector<Triple> out;
  for (const auto& t : decode_triple_spans(tags, inventory, notes)) {
    out.push_back(make_triple(t, tokens));
  }
  return out;
}

}  // namespace hmt
