#pragma once

// The train / eval / predict pipelines behind the command-line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "hmt/train.hpp"

namespace hmt {

struct TrainOptions {
  std::filesystem::path data;
  std::optional<std::filesystem::path> pretrained;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;  // directory; receives model.ckpt and train.log
  std::optional<std::uint64_t> seed;
  bool ablate_ee = false;
};

inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kLogFile = "train.log";

/// Entity types used when the training data names none.
std::vector<std::string> default_entity_types();

/// Progress goes to `info`, ingestion warnings to `warn`.
TrainResult cmd_train(const TrainOptions& options, std::ostream& info, std::ostream& warn);

/// Prints a tab-separated "scores" line followed by a human-readable summary.
Evaluation cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                    std::ostream& out, std::ostream& warn);

/// Writes one JSON record per input sentence with the extracted entities and
/// triples. The records re-ingest as annotated data.
std::size_t cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                        const std::filesystem::path& out, std::ostream& warn);

}  // namespace hmt
