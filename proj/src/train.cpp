#include "hmt/train.hpp"

#include <cstdio>

#include "hmt/optimizer.hpp"

namespace hmt {

std::string format_log_line(const EpochLog& e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.4f\t%.4f\t%.4f", e.epoch, e.train_loss,
                e.val.precision, e.val.recall, e.val.f1);
  return buf;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const std::size_t> lengths,
                                                   std::size_t batch_size, std::mt19937_64& rng) {
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  std::vector<std::size_t> order(lengths.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t pool = batch_size * kBucketPool;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t begin = 0; begin < order.size(); begin += pool) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(begin);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), begin + pool));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) { return lengths[a] < lengths[b]; });
    for (auto it = first; it != last;) {
      const auto stop = it + std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(batch_size), last - it);
      batches.emplace_back(it, stop);
      it = stop;
    }
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

TrainResult train(HmtModel model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainConfig& config,
                  const TagInventory& ee, const TagInventory& je,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ArgumentError("train: empty training set");

  std::mt19937_64 rng(config.seed + 0x9e3779b97f4a7c15ULL);
  RmsProp optimizer(config.learning_rate, config.rmsprop_decay, config.rmsprop_epsilon);
  const auto params = model.parameters();
  const LossTerms terms{model.has_ee(), true};

  TrainResult result{model, {}, 0, -1.0};
  std::size_t stale = 0;
  std::vector<std::size_t> lengths;
  for (const auto& ex : train_set) lengths.push_back(ex.ids.size());

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (const auto& batch : make_batches(lengths, config.batch_size, rng)) {
      ++batch_no;
      model.zero_grad();
      double batch_loss = 0.0;
      try {
        for (std::size_t k : batch) {
          const Example& ex = train_set[k];
          nd::Tape<Real> tape;
          ForwardResult fwd = forward(tape, model, ex.ids, nd::Mode::kTrain, config.dropout_rate, rng);
          Var<Real> loss = sentence_loss(fwd, ex.ee, ex.je, terms);
          batch_loss += loss.value()(0, 0);
          tape.backward(loss);
        }
        if (!std::isfinite(batch_loss)) throw NumericError("non-finite batch loss");
        clip_gradients(params, config.grad_clip_norm);
        optimizer.step(params);
      } catch (const NumericError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no) +
                            ": " + e.what());
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_no) +
                            ": " + e.what());
      }
      epoch_loss += batch_loss;
    }

    const Evaluation ev = evaluate(model, val_set, ee, je);
    EpochLog entry{epoch, epoch_loss / double(train_set.size()), ev.je, ev.ee};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);

    if (entry.val.f1 > result.best_f1) {
      result.best_f1 = entry.val.f1;
      result.best_epoch = epoch;
      result.best = model;
      stale = 0;
    } else if (++stale > config.patience) {
      break;
    }
  }
  for (auto* p : result.best.parameters()) p->zero_grad();
  return result;
}

}  // namespace hmt
