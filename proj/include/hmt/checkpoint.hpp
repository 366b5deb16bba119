#pragma once

// Binary checkpoint container. All integers and floats are little-endian.
//
//   magic        8 bytes   "HMTCKPT\0"
//   version      u32       kCheckpointVersion
//   header_len   u64
//   header       JSON text: config, dims, entity_types, relation_types,
//                ee_tags, je_tags, vocab {lowercase, tokens}
//   block_count  u32
//   blocks       per parameter, in HmtModel::parameters() order:
//                  name_len u32, name bytes, rows u64, cols u64,
//                  rows * cols f64 in row-major order
//   trailer      8 bytes   "HMTCKEND"

#include <filesystem>
#include <optional>

#include "hmt/config.hpp"
#include "hmt/model.hpp"
#include "hmt/tagging.hpp"
#include "hmt/vocab.hpp"

namespace hmt {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  TagInventory ee;
  TagInventory je;
  Vocab vocab;
  HmtModel model;
};

void save_checkpoint(const std::filesystem::path& path, const HmtModel& model,
                     const TagInventory& ee, const TagInventory& je, const Vocab& vocab,
                     const TrainConfig& config);

/// Throws CheckpointError naming the offending field on a version mismatch,
/// truncation, or any inconsistency between header and parameter blocks.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hmt
