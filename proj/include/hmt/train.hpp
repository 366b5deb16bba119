#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmt/config.hpp"
#include "hmt/data.hpp"
#include "hmt/errors.hpp"
#include "hmt/evaluate.hpp"
#include "hmt/model.hpp"

namespace hmt {

/// Shuffles under seed and moves ceil(fraction * N) items to the validation side.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_validation(std::vector<T> items, double fraction,
                                                           std::uint64_t seed) {
  if (items.empty()) throw ArgumentError("split_validation: empty set");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ArgumentError("split_validation: fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  // guard against 0.005 * 1000 landing a hair above 5
  const auto n_val = static_cast<std::size_t>(std::ceil(fraction * double(items.size()) - 1e-9));
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_val ? out.second : out.first).push_back(std::move(items[order[k]]));
  }
  return out;
}

/// One epoch's batches: a shuffled permutation of [0, lengths.size()) is cut
/// into pools of kBucketPool batches, each pool is stably sorted by sentence
/// length and cut into batches, and the batch order is shuffled. Batches hold
/// sentences of similar length without any padding.
inline constexpr std::size_t kBucketPool = 16;
std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t batch_size, std::mt19937_64& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean summed-NLL per training sentence
  ExtractionScore val;      // validation triple score
  ExtractionScore val_entities;  // not written to the log
};

/// "epoch\ttrain_loss\tval_P\tval_R\tval_F1"
std::string format_log_line(const EpochLog& e);

struct TrainResult {
  HmtModel best;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
};

/// Mini-batch RMSprop over reshuffled training data. After each epoch the
/// validation triple F1 is computed; the best-scoring model is kept and
/// training stops once `patience` consecutive epochs fail to improve on it, or
/// after max_epochs. Throws TrainingError on a non-finite loss or update.
TrainResult train(HmtModel model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config,
                  const TagInventory& ee, const TagInventory& je,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace hmt
