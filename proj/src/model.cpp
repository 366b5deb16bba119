#include "hmt/model.hpp"

#include <cmath>

#include "hmt/errors.hpp"

namespace hmt {

TaskModule::TaskModule(const std::string& prefix, Index input_dim, Index hidden, Index tag_dim,
                       Index num_tags)
    : enc_fwd(prefix + ".enc_fwd", input_dim, hidden),
      enc_bwd(prefix + ".enc_bwd", input_dim, hidden),
      dec(prefix + ".dec", tag_dim, hidden),
      proj(prefix + ".proj", 2 * hidden + hidden, tag_dim, num_tags) {}

std::vector<Parameter<Real>*> TaskModule::parameters() {
  std::vector<Parameter<Real>*> out;
  for (auto* p : enc_fwd.parameters()) out.push_back(p);
  for (auto* p : enc_bwd.parameters()) out.push_back(p);
  for (auto* p : dec.parameters()) out.push_back(p);
  for (auto* p : proj.parameters()) out.push_back(p);
  return out;
}

void TaskModule::initialize(std::mt19937_64& rng) {
  enc_fwd.initialize(rng);
  enc_bwd.initialize(rng);
  dec.initialize(rng);
  proj.initialize(rng);
}

HmtModel::HmtModel(const ModelDims& dims, std::mt19937_64& rng) : dims_(dims) {
  embeddings_.table = Parameter<Real>("embeddings", static_cast<Index>(dims.vocab_size),
                                      static_cast<Index>(dims.embed_dim));
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  auto& e = embeddings_.table.value;
  for (Index r = 0; r < e.rows(); ++r) {
    for (Index c = 0; c < e.cols(); ++c) e(r, c) = dist(rng);
  }
  if (e.rows() > 0) e.row(Vocab::kPad).setZero();
  build(rng);
}

HmtModel::HmtModel(const ModelDims& dims, EmbeddingMatrix embeddings, std::mt19937_64& rng)
    : dims_(dims), embeddings_(std::move(embeddings)) {
  if (embeddings_.rows() != dims.vocab_size || embeddings_.dim() != dims.embed_dim) {
    throw DimensionError("embedding table " + nd::shape_string(embeddings_.table.value) +
                         " does not match vocabulary size " + std::to_string(dims.vocab_size) +
                         " and embedding width " + std::to_string(dims.embed_dim));
  }
  build(rng);
}

void HmtModel::build(std::mt19937_64& rng) {
  if (dims_.vocab_size < 2 || dims_.embed_dim == 0 || dims_.hidden_dim == 0 || dims_.tag_dim == 0 ||
      dims_.je_tags == 0 || (dims_.with_ee && dims_.ee_tags == 0)) {
    throw ArgumentError("model dimensions must be positive");
  }
  const auto h = static_cast<Index>(dims_.hidden_dim);
  const auto d_tag = static_cast<Index>(dims_.tag_dim);
  if (dims_.with_ee) {
    ee_.emplace("ee", static_cast<Index>(dims_.embed_dim), h, d_tag,
                static_cast<Index>(dims_.ee_tags));
    ee_->initialize(rng);
  }
  je_ = TaskModule("je", static_cast<Index>(dims_.je_input_dim()), h, d_tag,
                   static_cast<Index>(dims_.je_tags));
  je_.initialize(rng);
}

TaskModule& HmtModel::ee() {
  if (!ee_) throw ArgumentError("model has no EE module");
  return *ee_;
}

const TaskModule& HmtModel::ee() const {
  if (!ee_) throw ArgumentError("model has no EE module");
  return *ee_;
}

std::vector<Parameter<Real>*> HmtModel::parameters() {
  std::vector<Parameter<Real>*> out{&embeddings_.table};
  if (ee_) {
    for (auto* p : ee_->parameters()) out.push_back(p);
  }
  for (auto* p : je_.parameters()) out.push_back(p);
  return out;
}

std::vector<const Parameter<Real>*> HmtModel::parameters() const {
  std::vector<const Parameter<Real>*> out;
  for (auto* p : const_cast<HmtModel*>(this)->parameters()) out.push_back(p);
  return out;
}

void HmtModel::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

HmtModel ablate_ee(ModelDims dims, std::mt19937_64& rng) {
  dims.with_ee = false;
  dims.ee_tags = 0;
  return HmtModel(dims, rng);
}

BoundModel::BoundTask BoundModel::bind_task(Tape<Real>& tape, TaskModule& m) {
  return {bind(tape, m.enc_fwd), bind(tape, m.enc_bwd), bind(tape, m.dec), bind(tape, m.proj)};
}

BoundModel::BoundModel(Tape<Real>& tape, HmtModel& model)
    : tape_(tape), model_(model), je_(bind_task(tape, model.je())) {
  if (model.has_ee()) ee_ = bind_task(tape, model.ee());
}

Var<Real> BoundModel::embed(std::span<const Index> ids) {
  if (ids.empty()) throw ArgumentError("cannot run the model on an empty sentence");
  return hmt::embed(tape_, ids, model_.embeddings());
}

Var<Real> BoundModel::encode_ee(Var<Real> embedded) {
  if (!ee_) throw ArgumentError("model has no EE module");
  return bilstm_encode(ee_->fwd, ee_->bwd, embedded);
}

DecodeResult<Real> BoundModel::decode_ee(Var<Real> ee_states) {
  if (!ee_) throw ArgumentError("model has no EE module");
  return decode_sequence(ee_->dec, ee_->proj, ee_states);
}

Var<Real> BoundModel::encode_je(Var<Real> embedded, std::optional<Var<Real>> ee_states) {
  if (ee_states.has_value() != model_.has_ee()) {
    throw ArgumentError(model_.has_ee() ? "JE encoder needs the EE encoder states"
                                        : "ablated model takes no EE encoder states");
  }
  if (!ee_states) return bilstm_encode(je_.fwd, je_.bwd, embedded);
  if (ee_states->rows() != embedded.rows()) {
    throw DimensionError("EE states " + nd::shape_string(ee_states->value()) +
                         " do not match embeddings " + nd::shape_string(embedded.value()));
  }
  std::vector<Var<Real>> rows;
  rows.reserve(static_cast<std::size_t>(embedded.rows()));
  for (Index t = 0; t < embedded.rows(); ++t) {
    rows.push_back(nd::concat(nd::row(embedded, t), nd::row(*ee_states, t)));
  }
  return bilstm_encode(je_.fwd, je_.bwd, nd::stack_rows<Real>(rows));
}

DecodeResult<Real> BoundModel::decode_je(Var<Real> je_states) {
  return decode_sequence(je_.dec, je_.proj, je_states);
}

ForwardResult forward(Tape<Real>& tape, HmtModel& model, std::span<const Index> ids,
                      nd::Mode mode, double dropout_rate, std::mt19937_64& rng) {
  BoundModel bound(tape, model);
  Var<Real> emb = nd::dropout(bound.embed(ids), dropout_rate, mode, rng);
  ForwardResult out;
  if (model.has_ee()) {
    out.ee_states = nd::dropout(bound.encode_ee(emb), dropout_rate, mode, rng);
    out.ee = bound.decode_ee(*out.ee_states);
  }
  out.je_states = nd::dropout(bound.encode_je(emb, out.ee_states), dropout_rate, mode, rng);
  out.je = bound.decode_je(out.je_states);
  return out;
}

namespace {

void add_task_terms(std::vector<Var<Real>>& terms, const DecodeResult<Real>& dec,
                    std::span<const TagId> gold, const char* task) {
  if (gold.size() != dec.step_logits.size()) {
    throw ArgumentError(std::string(task) + " gold length " + std::to_string(gold.size()) +
                        " != sentence length " + std::to_string(dec.step_logits.size()));
  }
  for (std::size_t t = 0; t < gold.size(); ++t) terms.push_back(nd::pick_nll(dec.step_logits[t], gold[t]));
}

}  // namespace

Var<Real> sentence_loss(const ForwardResult& fwd, std::span<const TagId> gold_ee,
                        std::span<const TagId> gold_je, LossTerms terms) {
  std::vector<Var<Real>> parts;
  if (terms.ee && fwd.ee) add_task_terms(parts, *fwd.ee, gold_ee, "EE");
  if (terms.je) add_task_terms(parts, fwd.je, gold_je, "JE");
  if (parts.empty()) {
    Tape<Real>& t = *fwd.je_states.tape();
    return t.constant(Matrix<Real>::Zero(1, 1));
  }
  return nd::sum<Real>(parts);
}

Real joint_nll(const Matrix<Real>& ee_probs, const Matrix<Real>& je_probs,
               std::span<const TagId> gold_ee, std::span<const TagId> gold_je) {
  auto task = [](const Matrix<Real>& probs, std::span<const TagId> gold, const char* name) {
    if (static_cast<std::size_t>(probs.rows()) != gold.size()) {
      throw ArgumentError(std::string(name) + " gold length " + std::to_string(gold.size()) +
                          " != " + std::to_string(probs.rows()) + " probability rows");
    }
    Real s = 0;
    for (std::size_t t = 0; t < gold.size(); ++t) {
      if (gold[t] < 0 || gold[t] >= probs.cols()) throw ArgumentError("gold tag out of range");
      s -= std::log(probs(static_cast<Index>(t), gold[t]));
    }
    return s;
  };
  Real loss = task(je_probs, gold_je, "JE");
  if (ee_probs.size() > 0) loss += task(ee_probs, gold_ee, "EE");
  return loss;
}

TagPrediction predict_tags(HmtModel& model, std::span<const Index> ids) {
  Tape<Real> tape;
  std::mt19937_64 unused(0);
  ForwardResult fwd = forward(tape, model, ids, nd::Mode::kEval, 0.0, unused);
  TagPrediction out;
  out.je_probs = fwd.je.probs.value();
  for (Index t = 0; t < out.je_probs.rows(); ++t) out.je.push_back(argmax(out.je_probs.row(t)));
  if (fwd.ee) {
    out.ee_probs = fwd.ee->probs.value();
    for (Index t = 0; t < out.ee_probs.rows(); ++t) out.ee.push_back(argmax(out.ee_probs.row(t)));
  }
  return out;
}

}  // namespace hmt
