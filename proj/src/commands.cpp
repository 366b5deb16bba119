#include "hmt/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "hmt/checkpoint.hpp"

namespace hmt {
namespace {

std::vector<SentenceRecord> ingest(const std::filesystem::path& data, std::ostream& warn) {
  std::vector<std::string> warnings;
  auto records = read_records(data, &warnings);
  for (const auto& w : warnings) warn << "warning: " << data.string() << ": " << w << '\n';
  if (records.empty()) throw FormatError(data.string() + ": no records");
  return records;
}

void require_annotated(const std::vector<SentenceRecord>& records, const std::filesystem::path& data) {
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!records[k].annotated) {
      throw FormatError(data.string() + ": record " + std::to_string(k + 1) +
                        " has no gold annotations");
    }
  }
}

}  // namespace

std::vector<std::string> default_entity_types() { return {"LOC", "MISC", "ORG", "PER"}; }

TrainResult cmd_train(const TrainOptions& options, std::ostream& info, std::ostream& warn) {
  TrainConfig config = options.config ? load_config(*options.config) : TrainConfig{};
  if (options.seed) config.seed = *options.seed;
  config.validate();

  auto records = ingest(options.data, warn);
  require_annotated(records, options.data);

  std::vector<std::string> entity_types =
      config.entity_types.empty() ? collect_entity_types(records) : config.entity_types;
  if (entity_types.empty()) entity_types = default_entity_types();
  std::vector<std::string> relation_types =
      config.relation_types.empty() ? collect_relation_types(records) : config.relation_types;
  if (relation_types.empty()) throw ArgumentError("training data contains no relation types");
  auto [ee_inv, je_inv] = build_inventories(entity_types, relation_types);

  auto [train_records, val_records] =
      split_validation(std::move(records), config.validation_fraction, config.seed);
  if (train_records.empty()) throw ArgumentError("no training sentences left after the validation split");

  std::vector<std::vector<std::string>> sentences;
  for (const auto& r : train_records) sentences.push_back(r.tokens);
  Vocab vocab = Vocab::build(sentences, config.min_count, config.lowercase);

  std::mt19937_64 init_rng(config.seed);
  EmbeddingMatrix embeddings;
  if (options.pretrained) {
    std::size_t found = 0;
    embeddings = load_pretrained(*options.pretrained, vocab, config.embed_dim, init_rng, &found);
    info << "pretrained vectors cover " << found << " of " << vocab.size() - 2 << " tokens\n";
  } else {
    warn << "warning: no pretrained vectors given; embeddings are randomly initialized\n";
    embeddings = random_embeddings(vocab, config.embed_dim, init_rng);
  }

  ModelDims dims{vocab.size(), config.embed_dim, config.hidden_dim, config.tag_dim,
                 options.ablate_ee ? 0 : ee_inv.size(), je_inv.size(), !options.ablate_ee};
  HmtModel model(dims, std::move(embeddings), init_rng);

  std::vector<Example> train_set, val_set;
  for (const auto& r : train_records) train_set.push_back(make_example(r, vocab, ee_inv, je_inv));
  for (const auto& r : val_records) val_set.push_back(make_eval_example(r, vocab));

  std::filesystem::create_directories(options.out);
  std::ofstream log(options.out / kLogFile, std::ios::trunc);
  if (!log) throw IoError("cannot write " + (options.out / kLogFile).string());
  info << "training on " << train_set.size() << " sentences, validating on " << val_set.size()
       << (options.ablate_ee ? " (EE module removed)" : "") << '\n';

  TrainResult result = train(std::move(model), train_set, val_set, config, ee_inv, je_inv,
                             [&](const EpochLog& e) {
                               const std::string line = format_log_line(e);
                               log << line << '\n';
                               log.flush();
                               info << line << '\n';
                             });
  save_checkpoint(options.out / kCheckpointFile, result.best, ee_inv, je_inv, vocab, config);
  info << "best validation F1 " << result.best_f1 << " at epoch " << result.best_epoch << "; wrote "
       << (options.out / kCheckpointFile).string() << '\n';
  return result;
}

Evaluation cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                    std::ostream& out, std::ostream& warn) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  auto records = ingest(data, warn);
  require_annotated(records, data);
  std::vector<Example> examples;
  for (const auto& r : records) examples.push_back(make_eval_example(r, ckpt.vocab));
  Evaluation ev = evaluate(ckpt.model, examples, ckpt.ee, ckpt.je);

  char buf[256];
  std::snprintf(buf, sizeof buf, "scores\t%.6f\t%.6f\t%.6f\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%zu\t%zu\t%zu",
                ev.je.precision, ev.je.recall, ev.je.f1, ev.je.predicted, ev.je.gold, ev.je.correct,
                ev.ee.precision, ev.ee.recall, ev.ee.f1, ev.ee.predicted, ev.ee.gold, ev.ee.correct);
  out << buf << '\n';
  std::snprintf(buf, sizeof buf, "triples:  P %.4f  R %.4f  F1 %.4f  (%zu predicted, %zu gold, %zu correct)",
                ev.je.precision, ev.je.recall, ev.je.f1, ev.je.predicted, ev.je.gold, ev.je.correct);
  out << buf << '\n';
  if (ckpt.model.has_ee()) {
    std::snprintf(buf, sizeof buf, "entities: P %.4f  R %.4f  F1 %.4f  (%zu predicted, %zu gold, %zu correct)",
                  ev.ee.precision, ev.ee.recall, ev.ee.f1, ev.ee.predicted, ev.ee.gold, ev.ee.correct);
    out << buf << '\n';
  } else {
    out << "entities: n/a (model trained without the EE module)\n";
  }
  return ev;
}

std::size_t cmd_predict(const std::filesystem::path& checkpoint, const std::filesystem::path& data,
                        const std::filesystem::path& out, std::ostream& warn) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  auto records = ingest(data, warn);
  std::ofstream os(out, std::ios::trunc);
  if (!os) throw IoError("cannot write " + out.string());
  for (const auto& r : records) {
    const auto ids = ckpt.vocab.ids(r.tokens);
    TagPrediction tags = predict_tags(ckpt.model, ids);
    SentenceRecord pred;
    pred.tokens = r.tokens;
    if (ckpt.model.has_ee()) pred.entities = decode_entities(tags.ee, ckpt.ee);
    pred.triples = decode_triple_spans(tags.je, ckpt.je);
    nlohmann::json j = record_to_json(pred);
    for (std::size_t k = 0; k < pred.triples.size(); ++k) {
      j["triples"][k]["head"] = surface(r.tokens, pred.triples[k].head);
      j["triples"][k]["tail"] = surface(r.tokens, pred.triples[k].tail);
    }
    os << j.dump() << '\n';
  }
  os.flush();
  if (!os) throw IoError("error while writing " + out.string());
  return records.size();
}

}  // namespace hmt
