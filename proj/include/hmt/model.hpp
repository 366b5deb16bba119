#pragma once

// The two-level tagging model. The EE module (bidirectional peephole encoder,
// tag-feedback decoder) reads word embeddings. The JE module has the same
// structure but its encoder reads [embedding_t ; EE encoder state_t]. JE never
// sees EE probabilities or predicted tags.

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hmt/recurrent.hpp"
#include "hmt/tagging.hpp"
#include "hmt/vocab.hpp"

namespace hmt {

using Real = double;

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 300;
  std::size_t hidden_dim = 300;
  std::size_t tag_dim = 300;
  std::size_t ee_tags = 0;
  std::size_t je_tags = 0;
  bool with_ee = true;

  /// Width of the JE encoder input: d_w + 2h with EE, d_w without.
  std::size_t je_input_dim() const { return embed_dim + (with_ee ? 2 * hidden_dim : 0); }
  bool operator==(const ModelDims&) const = default;
};

/// One task's encoder-decoder.
struct TaskModule {
  PeepholeLstmParams<Real> enc_fwd, enc_bwd;
  TagFeedbackLstmParams<Real> dec;
  TagProjection<Real> proj;

  TaskModule() = default;
  TaskModule(const std::string& prefix, Index input_dim, Index hidden, Index tag_dim, Index num_tags);
  std::vector<Parameter<Real>*> parameters();
  void initialize(std::mt19937_64& rng);
};

class HmtModel {
 public:
  /// Random embeddings and layers drawn from rng.
  HmtModel(const ModelDims& dims, std::mt19937_64& rng);
  /// Uses the given embedding table (e.g. from load_pretrained).
  HmtModel(const ModelDims& dims, EmbeddingMatrix embeddings, std::mt19937_64& rng);

  const ModelDims& dims() const { return dims_; }
  bool has_ee() const { return ee_.has_value(); }

  EmbeddingMatrix& embeddings() { return embeddings_; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }
  TaskModule& ee();
  const TaskModule& ee() const;
  TaskModule& je() { return je_; }
  const TaskModule& je() const { return je_; }

  /// Every trainable parameter in a fixed order (embeddings, EE, JE).
  std::vector<Parameter<Real>*> parameters();
  std::vector<const Parameter<Real>*> parameters() const;
  void zero_grad();

 private:
  void build(std::mt19937_64& rng);

  ModelDims dims_;
  EmbeddingMatrix embeddings_;
  std::optional<TaskModule> ee_;
  TaskModule je_;
};

/// The same configuration with the EE module removed.
HmtModel ablate_ee(ModelDims dims, std::mt19937_64& rng);

/// A model's parameters bound onto one tape, with each stage of the forward
/// pass exposed separately.
class BoundModel {
 public:
  BoundModel(Tape<Real>& tape, HmtModel& model);

  Var<Real> embed(std::span<const Index> ids);
  Var<Real> encode_ee(Var<Real> embedded);
  DecodeResult<Real> decode_ee(Var<Real> ee_states);
  /// ee_states must be present exactly when the model has an EE module.
  Var<Real> encode_je(Var<Real> embedded, std::optional<Var<Real>> ee_states);
  DecodeResult<Real> decode_je(Var<Real> je_states);

 private:
  struct BoundTask {
    BoundPeephole<Real> fwd, bwd;
    BoundTagFeedback<Real> dec;
    BoundProjection<Real> proj;
  };
  static BoundTask bind_task(Tape<Real>& tape, TaskModule& m);

  Tape<Real>& tape_;
  HmtModel& model_;
  std::optional<BoundTask> ee_;
  BoundTask je_;
};

struct ForwardResult {
  std::optional<Var<Real>> ee_states;
  std::optional<DecodeResult<Real>> ee;
  Var<Real> je_states;
  DecodeResult<Real> je;
};

/// Full forward pass. In train mode dropout is applied to the embedding
/// output and to each encoder's output rows.
ForwardResult forward(Tape<Real>& tape, HmtModel& model, std::span<const Index> ids,
                      nd::Mode mode, double dropout_rate, std::mt19937_64& rng);

struct LossTerms {
  bool ee = true;
  bool je = true;
};

/// Summed negative log-likelihood of the gold tags over all positions of both
/// tasks. The EE term is absent for ablated models.
Var<Real> sentence_loss(const ForwardResult& fwd, std::span<const TagId> gold_ee,
                        std::span<const TagId> gold_je, LossTerms terms = {});

/// -(sum_t log p_EE(gold) + sum_t log p_JE(gold)) over probability rows. Pass
/// an empty ee_probs matrix for the JE-only objective.
Real joint_nll(const Matrix<Real>& ee_probs, const Matrix<Real>& je_probs,
               std::span<const TagId> gold_ee, std::span<const TagId> gold_je);

/// Index of the largest entry; the lowest index wins ties.
template <typename Derived>
TagId argmax(const Eigen::DenseBase<Derived>& v) {
  TagId best = 0;
  for (Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = static_cast<TagId>(k);
  }
  return best;
}

struct TagPrediction {
  Matrix<Real> ee_probs;  // empty for ablated models
  Matrix<Real> je_probs;
  TagSequence ee;
  TagSequence je;
};

/// Eval-mode forward pass and per-position argmax.
TagPrediction predict_tags(HmtModel& model, std::span<const Index> ids);

}  // namespace hmt
