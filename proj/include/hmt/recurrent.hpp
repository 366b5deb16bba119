#pragma once

// LSTM cell variants and the encoder/decoder procedures built from them.
//
//   peephole cell (encoder):
//     f = sigma(W_fx x + W_fh h' + W_fc c' + b_f)
//     i = sigma(W_ix x + W_ih h' + W_ic c' + b_i)
//     c = f * c' + i * tanh(W_cx x + W_ch h' + b_c)
//     o = sigma(W_ox x + W_oh h' + W_oc c + b_o)     <- uses the new cell state
//     h = o * tanh(c)
//
//   tag-feedback cell (decoder): same gates driven by the previous tag vector
//   T' instead of x, with no peephole terms.

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hmt/nd/tape.hpp"

namespace hmt {

using nd::Index;
using nd::Matrix;
using nd::Parameter;
using nd::Tape;
using nd::Var;

namespace detail {

template <typename Scalar, typename Rng>
void fill_uniform(Parameter<Scalar>& p, Scalar bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-double(bound), double(bound));
  for (Index k = 0; k < p.value.size(); ++k) p.value.data()[k] = Scalar(dist(rng));
}

template <typename Scalar>
void require_vector(Var<Scalar> v, Index rows, const char* what) {
  if (v.rows() != rows || v.cols() != 1) {
    throw DimensionError(std::string(what) + ": expected " + nd::shape_string(rows, 1) +
                         ", got " + nd::shape_string(v.value()));
  }
}

}  // namespace detail

template <typename Scalar>
struct PeepholeLstmParams {
  Index input_dim = 0;
  Index hidden_dim = 0;
  Parameter<Scalar> w_fx, w_ix, w_cx, w_ox;  // h x d_in
  Parameter<Scalar> w_fh, w_ih, w_ch, w_oh;  // h x h
  Parameter<Scalar> w_fc, w_ic, w_oc;        // h x h, read the cell state
  Parameter<Scalar> b_f, b_i, b_c, b_o;      // h x 1

  PeepholeLstmParams() = default;
  PeepholeLstmParams(const std::string& prefix, Index d_in, Index h)
      : input_dim(d_in),
        hidden_dim(h),
        w_fx(prefix + ".w_fx", h, d_in),
        w_ix(prefix + ".w_ix", h, d_in),
        w_cx(prefix + ".w_cx", h, d_in),
        w_ox(prefix + ".w_ox", h, d_in),
        w_fh(prefix + ".w_fh", h, h),
        w_ih(prefix + ".w_ih", h, h),
        w_ch(prefix + ".w_ch", h, h),
        w_oh(prefix + ".w_oh", h, h),
        w_fc(prefix + ".w_fc", h, h),
        w_ic(prefix + ".w_ic", h, h),
        w_oc(prefix + ".w_oc", h, h),
        b_f(prefix + ".b_f", h, 1),
        b_i(prefix + ".b_i", h, 1),
        b_c(prefix + ".b_c", h, 1),
        b_o(prefix + ".b_o", h, 1) {}

  std::vector<Parameter<Scalar>*> parameters() {
    return {&w_fx, &w_ix, &w_cx, &w_ox, &w_fh, &w_ih, &w_ch, &w_oh,
            &w_fc, &w_ic, &w_oc, &b_f,  &b_i,  &b_c,  &b_o};
  }

  /// Weights uniform in [-1/sqrt(h), 1/sqrt(h)], forget bias 1, other biases 0.
  template <typename Rng>
  void initialize(Rng& rng) {
    const Scalar bound = Scalar(1) / std::sqrt(Scalar(hidden_dim));
    for (auto* p : {&w_fx, &w_ix, &w_cx, &w_ox, &w_fh, &w_ih, &w_ch, &w_oh, &w_fc, &w_ic, &w_oc}) {
      detail::fill_uniform(*p, bound, rng);
    }
    b_f.value.setOnes();
    b_i.value.setZero();
    b_c.value.setZero();
    b_o.value.setZero();
  }
};

template <typename Scalar>
struct TagFeedbackLstmParams {
  Index tag_dim = 0;
  Index hidden_dim = 0;
  Parameter<Scalar> w_ft, w_it, w_ct, w_ot;  // h x d_T
  Parameter<Scalar> w_fh, w_ih, w_ch, w_oh;  // h x h
  Parameter<Scalar> b_f, b_i, b_c, b_o;

  TagFeedbackLstmParams() = default;
  TagFeedbackLstmParams(const std::string& prefix, Index d_tag, Index h)
      : tag_dim(d_tag),
        hidden_dim(h),
        w_ft(prefix + ".w_ft", h, d_tag),
        w_it(prefix + ".w_it", h, d_tag),
        w_ct(prefix + ".w_ct", h, d_tag),
        w_ot(prefix + ".w_ot", h, d_tag),
        w_fh(prefix + ".w_fh", h, h),
        w_ih(prefix + ".w_ih", h, h),
        w_ch(prefix + ".w_ch", h, h),
        w_oh(prefix + ".w_oh", h, h),
        b_f(prefix + ".b_f", h, 1),
        b_i(prefix + ".b_i", h, 1),
        b_c(prefix + ".b_c", h, 1),
        b_o(prefix + ".b_o", h, 1) {}

  std::vector<Parameter<Scalar>*> parameters() {
    return {&w_ft, &w_it, &w_ct, &w_ot, &w_fh, &w_ih, &w_ch, &w_oh, &b_f, &b_i, &b_c, &b_o};
  }

  template <typename Rng>
  void initialize(Rng& rng) {
    const Scalar bound = Scalar(1) / std::sqrt(Scalar(hidden_dim));
    for (auto* p : {&w_ft, &w_it, &w_ct, &w_ot, &w_fh, &w_ih, &w_ch, &w_oh}) {
      detail::fill_uniform(*p, bound, rng);
    }
    b_f.value.setOnes();
    b_i.value.setZero();
    b_c.value.setZero();
    b_o.value.setZero();
  }
};

/// Tag vector T = W_T [h_enc; h_dec] + b_T and logits y = W_y T + b_y.
template <typename Scalar>
struct TagProjection {
  Index input_dim = 0;  // width(h_enc) + width(h_dec)
  Index tag_dim = 0;
  Index num_tags = 0;
  Parameter<Scalar> w_t, b_t, w_y, b_y;

  TagProjection() = default;
  TagProjection(const std::string& prefix, Index in, Index d_tag, Index n_tags)
      : input_dim(in),
        tag_dim(d_tag),
        num_tags(n_tags),
        w_t(prefix + ".w_t", d_tag, in),
        b_t(prefix + ".b_t", d_tag, 1),
        w_y(prefix + ".w_y", n_tags, d_tag),
        b_y(prefix + ".b_y", n_tags, 1) {}

  std::vector<Parameter<Scalar>*> parameters() { return {&w_t, &b_t, &w_y, &b_y}; }

  /// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
  template <typename Rng>
  void initialize(Rng& rng) {
    detail::fill_uniform(w_t, Scalar(1) / std::sqrt(Scalar(input_dim)), rng);
    detail::fill_uniform(w_y, Scalar(1) / std::sqrt(Scalar(tag_dim)), rng);
    b_t.value.setZero();
    b_y.value.setZero();
  }
};

// Parameters bound as leaves of one tape. Bind once per tape, then reuse the
// handles at every time step.

template <typename Scalar>
struct BoundPeephole {
  Index input_dim, hidden_dim;
  Var<Scalar> w_fx, w_ix, w_cx, w_ox, w_fh, w_ih, w_ch, w_oh, w_fc, w_ic, w_oc, b_f, b_i, b_c, b_o;
};

template <typename Scalar>
struct BoundTagFeedback {
  Index tag_dim, hidden_dim;
  Var<Scalar> w_ft, w_it, w_ct, w_ot, w_fh, w_ih, w_ch, w_oh, b_f, b_i, b_c, b_o;
};

template <typename Scalar>
struct BoundProjection {
  Index input_dim, tag_dim, num_tags;
  Var<Scalar> w_t, b_t, w_y, b_y;
};

template <typename Scalar>
BoundPeephole<Scalar> bind(Tape<Scalar>& t, PeepholeLstmParams<Scalar>& p) {
  return {p.input_dim,      p.hidden_dim,     t.parameter(p.w_fx), t.parameter(p.w_ix),
          t.parameter(p.w_cx), t.parameter(p.w_ox), t.parameter(p.w_fh), t.parameter(p.w_ih),
          t.parameter(p.w_ch), t.parameter(p.w_oh), t.parameter(p.w_fc), t.parameter(p.w_ic),
          t.parameter(p.w_oc), t.parameter(p.b_f),  t.parameter(p.b_i),  t.parameter(p.b_c),
          t.parameter(p.b_o)};
}

template <typename Scalar>
BoundTagFeedback<Scalar> bind(Tape<Scalar>& t, TagFeedbackLstmParams<Scalar>& p) {
  return {p.tag_dim,           p.hidden_dim,        t.parameter(p.w_ft), t.parameter(p.w_it),
          t.parameter(p.w_ct), t.parameter(p.w_ot), t.parameter(p.w_fh), t.parameter(p.w_ih),
          t.parameter(p.w_ch), t.parameter(p.w_oh), t.parameter(p.b_f),  t.parameter(p.b_i),
          t.parameter(p.b_c),  t.parameter(p.b_o)};
}

template <typename Scalar>
BoundProjection<Scalar> bind(Tape<Scalar>& t, TagProjection<Scalar>& p) {
  return {p.input_dim, p.tag_dim, p.num_tags, t.parameter(p.w_t),
          t.parameter(p.b_t), t.parameter(p.w_y), t.parameter(p.b_y)};
}

template <typename Scalar>
struct CellState {
  Var<Scalar> h;
  Var<Scalar> c;
};

template <typename Scalar>
CellState<Scalar> peephole_lstm_step(const BoundPeephole<Scalar>& p, Var<Scalar> x,
                                     Var<Scalar> h_prev, Var<Scalar> c_prev) {
  detail::require_vector(x, p.input_dim, "peephole_lstm_step input");
  detail::require_vector(h_prev, p.hidden_dim, "peephole_lstm_step hidden state");
  detail::require_vector(c_prev, p.hidden_dim, "peephole_lstm_step cell state");
  using nd::cmul;
  using nd::matmul;
  auto f = nd::sigmoid(matmul(p.w_fx, x) + matmul(p.w_fh, h_prev) + matmul(p.w_fc, c_prev) + p.b_f);
  auto i = nd::sigmoid(matmul(p.w_ix, x) + matmul(p.w_ih, h_prev) + matmul(p.w_ic, c_prev) + p.b_i);
  auto g = nd::tanh(matmul(p.w_cx, x) + matmul(p.w_ch, h_prev) + p.b_c);
  auto c = cmul(f, c_prev) + cmul(i, g);
  auto o = nd::sigmoid(matmul(p.w_ox, x) + matmul(p.w_oh, h_prev) + matmul(p.w_oc, c) + p.b_o);
  return {cmul(o, nd::tanh(c)), c};
}

template <typename Scalar>
CellState<Scalar> tag_feedback_step(const BoundTagFeedback<Scalar>& p, Var<Scalar> tag_prev,
                                    Var<Scalar> h_prev, Var<Scalar> c_prev) {
  detail::require_vector(tag_prev, p.tag_dim, "tag_feedback_step tag vector");
  detail::require_vector(h_prev, p.hidden_dim, "tag_feedback_step hidden state");
  detail::require_vector(c_prev, p.hidden_dim, "tag_feedback_step cell state");
  using nd::cmul;
  using nd::matmul;
  auto f = nd::sigmoid(matmul(p.w_ft, tag_prev) + matmul(p.w_fh, h_prev) + p.b_f);
  auto i = nd::sigmoid(matmul(p.w_it, tag_prev) + matmul(p.w_ih, h_prev) + p.b_i);
  auto g = nd::tanh(matmul(p.w_ct, tag_prev) + matmul(p.w_ch, h_prev) + p.b_c);
  auto c = cmul(f, c_prev) + cmul(i, g);
  auto o = nd::sigmoid(matmul(p.w_ot, tag_prev) + matmul(p.w_oh, h_prev) + p.b_o);
  return {cmul(o, nd::tanh(c)), c};
}

template <typename Scalar>
Var<Scalar> zeros(Tape<Scalar>& t, Index rows) {
  return t.constant(Matrix<Scalar>::Zero(rows, 1));
}

/// Runs one direction over the given row order and returns the hidden state
/// for each position, indexed by position (not by visit order).
template <typename Scalar>
std::vector<Var<Scalar>> run_direction(const BoundPeephole<Scalar>& p,
                                       const std::vector<Var<Scalar>>& xs, bool reverse) {
  Tape<Scalar>& t = *xs.front().tape();
  CellState<Scalar> s{zeros(t, p.hidden_dim), zeros(t, p.hidden_dim)};
  std::vector<Var<Scalar>> out(xs.size());
  const std::size_t n = xs.size();
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t pos = reverse ? n - 1 - k : k;
    s = peephole_lstm_step(p, xs[pos], s.h, s.c);
    out[pos] = s.h;
  }
  return out;
}

/// Bidirectional encoding of an n x d_in matrix into n x 2h; row t is
/// [forward state at t ; backward state at t].
template <typename Scalar>
Var<Scalar> bilstm_encode(const BoundPeephole<Scalar>& fwd, const BoundPeephole<Scalar>& bwd,
                          Var<Scalar> inputs) {
  if (inputs.rows() < 1) throw ArgumentError("bilstm_encode: empty sequence");
  if (inputs.cols() != fwd.input_dim || inputs.cols() != bwd.input_dim) {
    throw DimensionError("bilstm_encode: input " + nd::shape_string(inputs.value()) +
                         " does not match cell input width " + std::to_string(fwd.input_dim));
  }
  std::vector<Var<Scalar>> xs;
  xs.reserve(static_cast<std::size_t>(inputs.rows()));
  for (Index t = 0; t < inputs.rows(); ++t) xs.push_back(nd::row(inputs, t));
  auto forward = run_direction(fwd, xs, false);
  auto backward = run_direction(bwd, xs, true);
  std::vector<Var<Scalar>> rows;
  rows.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) rows.push_back(nd::concat(forward[t], backward[t]));
  return nd::stack_rows<Scalar>(rows);
}

template <typename Scalar>
struct DecodeResult {
  Var<Scalar> tags;    // n x d_T
  Var<Scalar> logits;  // n x N_t
  Var<Scalar> probs;   // n x N_t
  std::vector<Var<Scalar>> step_logits;  // per position, N_t x 1
};

/// Left-to-right tag-feedback decoding. T_0 = h_0 = c_0 = 0; the computed
/// T_t (never an embedding of a chosen tag) is the input of step t + 1.
template <typename Scalar>
DecodeResult<Scalar> decode_sequence(const BoundTagFeedback<Scalar>& dec,
                                     const BoundProjection<Scalar>& proj, Var<Scalar> enc_states) {
  const Index n = enc_states.rows();
  if (n < 1) throw ArgumentError("decode_sequence: empty sequence");
  if (enc_states.cols() + dec.hidden_dim != proj.input_dim) {
    throw DimensionError("decode_sequence: encoder width " + std::to_string(enc_states.cols()) +
                         " + decoder width " + std::to_string(dec.hidden_dim) +
                         " != projection input width " + std::to_string(proj.input_dim));
  }
  if (dec.tag_dim != proj.tag_dim) {
    throw DimensionError("decode_sequence: decoder tag width " + std::to_string(dec.tag_dim) +
                         " != projection tag width " + std::to_string(proj.tag_dim));
  }
  Tape<Scalar>& t = *enc_states.tape();
  Var<Scalar> tag = zeros(t, dec.tag_dim);
  CellState<Scalar> s{zeros(t, dec.hidden_dim), zeros(t, dec.hidden_dim)};
  std::vector<Var<Scalar>> tags, logits, probs;
  for (Index k = 0; k < n; ++k) {
    s = tag_feedback_step(dec, tag, s.h, s.c);
    tag = nd::matmul(proj.w_t, nd::concat(nd::row(enc_states, k), s.h)) + proj.b_t;
    Var<Scalar> y = nd::matmul(proj.w_y, tag) + proj.b_y;
    tags.push_back(tag);
    logits.push_back(y);
    probs.push_back(nd::softmax(y));
  }
  return {nd::stack_rows<Scalar>(tags), nd::stack_rows<Scalar>(logits),
          nd::stack_rows<Scalar>(probs), std::move(logits)};
}

}  // namespace hmt
