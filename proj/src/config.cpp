#include "hmt/config.hpp"

#include <fstream>
#include <set>

#include "hmt/errors.hpp"

namespace hmt {

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ArgumentError("config field '" + field + "' " + why);
  };
  if (batch_size == 0) fail("batch_size", "must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate", "must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) fail("rmsprop_decay", "must lie in [0, 1)");
  if (!(rmsprop_epsilon >= 0.0)) fail("rmsprop_epsilon", "must be non-negative");
  if (!(grad_clip_norm > 0.0)) fail("grad_clip_norm", "must be positive");
  if (max_epochs == 0) fail("max_epochs", "must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) fail("validation_fraction", "must lie in (0, 1)");
  if (embed_dim == 0) fail("embed_dim", "must be positive");
  if (hidden_dim == 0) fail("hidden_dim", "must be positive");
  if (tag_dim == 0) fail("tag_dim", "must be positive");
  if (min_count == 0) fail("min_count", "must be at least 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"batch_size", c.batch_size},
                     {"dropout_rate", c.dropout_rate},
                     {"learning_rate", c.learning_rate},
                     {"rmsprop_decay", c.rmsprop_decay},
                     {"rmsprop_epsilon", c.rmsprop_epsilon},
                     {"grad_clip_norm", c.grad_clip_norm},
                     {"max_epochs", c.max_epochs},
                     {"patience", c.patience},
                     {"seed", c.seed},
                     {"validation_fraction", c.validation_fraction},
                     {"embed_dim", c.embed_dim},
                     {"hidden_dim", c.hidden_dim},
                     {"tag_dim", c.tag_dim},
                     {"min_count", c.min_count},
                     {"lowercase", c.lowercase},
                     {"entity_types", c.entity_types},
                     {"relation_types", c.relation_types}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  nlohmann::json known;
  to_json(known, c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw FormatError("unknown config field '" + key + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(field);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("config field '") + key + "': " + e.what());
    }
  };
  get("batch_size", c.batch_size);
  get("dropout_rate", c.dropout_rate);
  get("learning_rate", c.learning_rate);
  get("rmsprop_decay", c.rmsprop_decay);
  get("rmsprop_epsilon", c.rmsprop_epsilon);
  get("grad_clip_norm", c.grad_clip_norm);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  get("seed", c.seed);
  get("validation_fraction", c.validation_fraction);
  get("embed_dim", c.embed_dim);
  get("hidden_dim", c.hidden_dim);
  get("tag_dim", c.tag_dim);
  get("min_count", c.min_count);
  get("lowercase", c.lowercase);
  get("entity_types", c.entity_types);
  get("relation_types", c.relation_types);
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  TrainConfig c = j.get<TrainConfig>();
  c.validate();
  return c;
}

}  // namespace hmt
