#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hmt {

struct TrainConfig {
  std::size_t batch_size = 32;
  double dropout_rate = 0.5;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  double grad_clip_norm = 5.0;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double validation_fraction = 0.005;
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 300;
  std::size_t tag_dim = 300;

  // vocabulary and inventories
  std::size_t min_count = 1;
  bool lowercase = true;
  std::vector<std::string> entity_types;    // empty: derive from training data
  std::vector<std::string> relation_types;  // empty: derive from training data

  /// Throws ArgumentError naming the first out-of-range field.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, TrainConfig& c);

TrainConfig load_config(const std::filesystem::path& path);

}  // namespace hmt
