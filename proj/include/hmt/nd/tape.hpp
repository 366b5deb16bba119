#pragma once

// Dense tensors and tape-based reverse-mode differentiation.
//
// Every value is an Eigen matrix; vectors are column matrices (d x 1). A Tape
// records nodes in creation order, which is always a valid topological order,
// and backward() replays them in exact reverse. Node storage never moves, so
// references returned by value() stay valid as the tape grows. Parameters
// live outside the tape and receive their gradients by accumulation into
// Parameter::grad.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <deque>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hmt/errors.hpp"

namespace hmt::nd {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

inline std::string shape_string(Index rows, Index cols) {
  std::ostringstream os;
  os << "[" << rows << "x" << cols << "]";
  return os.str();
}

template <typename Derived>
std::string shape_string(const Eigen::DenseBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

enum class Mode { kTrain, kEval };

/// A trainable leaf: named value plus its accumulated gradient.
template <typename Scalar>
struct Parameter {
  std::string name;
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)),
        value(Matrix<Scalar>::Zero(rows, cols)),
        grad(Matrix<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

enum class Op {
  kConstant,
  kParameter,
  kGather,
  kMatMul,
  kAdd,
  kMul,
  kSigmoid,
  kTanh,
  kConcat,
  kRow,
  kStackRows,
  kSoftmax,
  kPickNll,
  kSum,
  kDropout,
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const { return tape_->value(*this); }
  const Matrix<Scalar>& grad() const { return tape_->grad(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape<Scalar>* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Derived>
void check_finite(const Eigen::DenseBase<Derived>& m, const char* op) {
  if (!m.allFinite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

/// Max-shifted softmax of a vector.
template <typename Derived>
Vector<typename Derived::Scalar> softmax_values(const Eigen::MatrixBase<Derived>& v) {
  using S = typename Derived::Scalar;
  if (v.size() == 0) throw ArgumentError("softmax of an empty vector");
  const S shift = v.maxCoeff();
  Vector<S> e = (v.reshaped().array() - shift).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
class Tape {
 public:
  struct Node {
    Op op = Op::kConstant;
    std::vector<std::size_t> inputs;
    Matrix<Scalar> value;
    Matrix<Scalar> grad;
    bool reached = false;
    Parameter<Scalar>* param = nullptr;
    std::vector<Index> indices;  // gather ids, row index, or gold label
    Matrix<Scalar> aux;          // dropout mask, cached softmax
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  const Matrix<Scalar>& value(Var<Scalar> v) const { return nodes_[v.id()].value; }
  const Matrix<Scalar>& grad(Var<Scalar> v) const { return nodes_[v.id()].grad; }

  Var<Scalar> constant(Matrix<Scalar> value) {
    check_finite(value, "constant");
    return push(Op::kConstant, {}, std::move(value));
  }

  Var<Scalar> parameter(Parameter<Scalar>& p) {
    Var<Scalar> v = push(Op::kParameter, {}, p.value);
    nodes_.back().param = &p;
    return v;
  }

  /// Row gather from a parameter matrix; result is ids.size() x p.cols().
  Var<Scalar> gather_rows(Parameter<Scalar>& p, std::span<const Index> ids) {
    Matrix<Scalar> out(static_cast<Index>(ids.size()), p.value.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= p.value.rows()) {
        throw ArgumentError("gather: id " + std::to_string(ids[i]) + " out of range for " +
                            p.name + " " + shape_string(p.value));
      }
      out.row(static_cast<Index>(i)) = p.value.row(ids[i]);
    }
    Var<Scalar> v = push(Op::kGather, {}, std::move(out));
    nodes_.back().param = &p;
    nodes_.back().indices.assign(ids.begin(), ids.end());
    return v;
  }

  Var<Scalar> push(Op op, std::vector<std::size_t> inputs, Matrix<Scalar> value,
                   std::vector<Index> indices = {}, Matrix<Scalar> aux = {}) {
    Node n;
    n.op = op;
    n.inputs = std::move(inputs);
    n.value = std::move(value);
    n.indices = std::move(indices);
    n.aux = std::move(aux);
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  /// Reverse sweep from a scalar node. Parameter gradients are accumulated
  /// into Parameter::grad; callers zero them between steps.
  void backward(Var<Scalar> loss) {
    const Node& root = nodes_.at(loss.id());
    if (root.value.size() != 1) {
      throw ArgumentError("backward: loss must be scalar, got " + shape_string(root.value));
    }
    for (Node& n : nodes_) {
      n.grad.setZero(n.value.rows(), n.value.cols());
      n.reached = false;
    }
    nodes_[loss.id()].grad.setConstant(Scalar(1));
    nodes_[loss.id()].reached = true;
    for (std::size_t k = loss.id() + 1; k-- > 0;) {
      if (nodes_[k].reached) propagate(k);
    }
  }

 private:
  Node& in(const Node& n, std::size_t i) {
    Node& dst = nodes_[n.inputs[i]];
    dst.reached = true;
    return dst;
  }

  void propagate(std::size_t k) {
    const Node& n = nodes_[k];
    const Matrix<Scalar>& g = n.grad;
    switch (n.op) {
      case Op::kConstant:
        break;
      case Op::kParameter:
        n.param->grad += g;
        break;
      case Op::kGather:
        for (std::size_t i = 0; i < n.indices.size(); ++i) {
          n.param->grad.row(n.indices[i]) += g.row(static_cast<Index>(i));
        }
        break;
      case Op::kMatMul: {
        const Matrix<Scalar>& a = nodes_[n.inputs[0]].value;
        const Matrix<Scalar>& b = nodes_[n.inputs[1]].value;
        in(n, 0).grad.noalias() += g * b.transpose();
        in(n, 1).grad.noalias() += a.transpose() * g;
        break;
      }
      case Op::kAdd:
        in(n, 0).grad += g;
        in(n, 1).grad += g;
        break;
      case Op::kMul: {
        const Matrix<Scalar>& a = nodes_[n.inputs[0]].value;
        const Matrix<Scalar>& b = nodes_[n.inputs[1]].value;
        in(n, 0).grad += g.cwiseProduct(b);
        in(n, 1).grad += g.cwiseProduct(a);
        break;
      }
      case Op::kSigmoid:
        in(n, 0).grad += (g.array() * n.value.array() * (Scalar(1) - n.value.array())).matrix();
        break;
      case Op::kTanh:
        in(n, 0).grad += (g.array() * (Scalar(1) - n.value.array().square())).matrix();
        break;
      case Op::kConcat: {
        const Index top = nodes_[n.inputs[0]].value.rows();
        in(n, 0).grad += g.topRows(top);
        in(n, 1).grad += g.bottomRows(g.rows() - top);
        break;
      }
      case Op::kRow:
        in(n, 0).grad.row(n.indices[0]) += g.transpose();
        break;
      case Op::kStackRows:
        for (std::size_t i = 0; i < n.inputs.size(); ++i) {
          in(n, i).grad += g.row(static_cast<Index>(i)).transpose();
        }
        break;
      case Op::kSoftmax: {
        // J = diag(p) - p p^T
        const Scalar dot = (g.array() * n.value.array()).sum();
        in(n, 0).grad += (n.value.array() * (g.array() - dot)).matrix();
        break;
      }
      case Op::kPickNll: {
        Matrix<Scalar> d = n.aux;  // softmax of the logits
        d(n.indices[0], 0) -= Scalar(1);
        in(n, 0).grad += g(0, 0) * d;
        break;
      }
      case Op::kSum:
        in(n, 0).grad.array() += g(0, 0);
        break;
      case Op::kDropout:
        in(n, 0).grad += g.cwiseProduct(n.aux);
        break;
    }
  }

  std::deque<Node> nodes_;  // stable references across push_back
};

namespace detail {

template <typename Scalar>
Tape<Scalar>& same_tape(Var<Scalar> a, Var<Scalar> b) {
  if (a.tape() != b.tape() || a.tape() == nullptr) {
    throw ArgumentError("operands belong to different tapes");
  }
  return *a.tape();
}

template <typename Scalar>
void require_same_shape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.value()) +
                         " vs " + shape_string(b.value()));
  }
}

template <typename Scalar>
Var<Scalar> unary(Var<Scalar> a, Op op, Matrix<Scalar> value, const char* name) {
  check_finite(value, name);
  return a.tape()->push(op, {a.id()}, std::move(value));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.value()) +
                         " x " + shape_string(b.value()));
  }
  Matrix<Scalar> out = a.value() * b.value();
  check_finite(out, "matmul");
  return t.push(Op::kMatMul, {a.id(), b.id()}, std::move(out));
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  detail::require_same_shape(a, b, "add");
  Matrix<Scalar> out = a.value() + b.value();
  check_finite(out, "add");
  return t.push(Op::kAdd, {a.id(), b.id()}, std::move(out));
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  return add(a, b);
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> cmul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  detail::require_same_shape(a, b, "mul");
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  check_finite(out, "mul");
  return t.push(Op::kMul, {a.id(), b.id()}, std::move(out));
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().unaryExpr([](Scalar x) {
    // split by sign so exp never overflows
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  });
  return detail::unary(a, Op::kSigmoid, std::move(out), "sigmoid");
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Matrix<Scalar> out = a.value().array().tanh().matrix();
  return detail::unary(a, Op::kTanh, std::move(out), "tanh");
}

/// Vertical concatenation [a; b]; column counts must agree.
template <typename Scalar>
Var<Scalar> concat(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = detail::same_tape(a, b);
  if (a.cols() != b.cols()) {
    throw DimensionError("concat: column mismatch " + shape_string(a.value()) + " vs " +
                         shape_string(b.value()));
  }
  Matrix<Scalar> out(a.rows() + b.rows(), a.cols());
  out << a.value(), b.value();
  return t.push(Op::kConcat, {a.id(), b.id()}, std::move(out));
}

/// Row r of a matrix as a column vector.
template <typename Scalar>
Var<Scalar> row(Var<Scalar> a, Index r) {
  if (r < 0 || r >= a.rows()) {
    throw ArgumentError("row: index " + std::to_string(r) + " out of range for " +
                        shape_string(a.value()));
  }
  Matrix<Scalar> out = a.value().row(r).transpose();
  return a.tape()->push(Op::kRow, {a.id()}, std::move(out), {r});
}

/// Stacks equal-length column vectors as the rows of an n x d matrix.
template <typename Scalar>
Var<Scalar> stack_rows(std::span<const Var<Scalar>> vs) {
  if (vs.empty()) throw ArgumentError("stack_rows: no inputs");
  const Index d = vs.front().rows();
  Matrix<Scalar> out(static_cast<Index>(vs.size()), d);
  std::vector<std::size_t> ids;
  ids.reserve(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (vs[i].tape() != vs.front().tape()) throw ArgumentError("operands belong to different tapes");
    if (vs[i].rows() != d || vs[i].cols() != 1) {
      throw DimensionError("stack_rows: expected " + shape_string(d, 1) + ", got " +
                           shape_string(vs[i].value()));
    }
    out.row(static_cast<Index>(i)) = vs[i].value().transpose();
    ids.push_back(vs[i].id());
  }
  return vs.front().tape()->push(Op::kStackRows, std::move(ids), std::move(out));
}

template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> v) {
  if (v.cols() != 1) throw DimensionError("softmax: expected a column vector, got " + shape_string(v.value()));
  Matrix<Scalar> out = softmax_values(v.value());
  return detail::unary(v, Op::kSoftmax, std::move(out), "softmax");
}

/// -log softmax(logits)[gold], computed from the logits directly.
template <typename Scalar>
Var<Scalar> pick_nll(Var<Scalar> logits, Index gold) {
  if (logits.cols() != 1) throw DimensionError("pick_nll: expected a column vector, got " + shape_string(logits.value()));
  if (gold < 0 || gold >= logits.rows()) {
    throw ArgumentError("pick_nll: label " + std::to_string(gold) + " out of range");
  }
  const auto& y = logits.value();
  const Scalar shift = y.maxCoeff();
  const Scalar lse = shift + std::log((y.array() - shift).exp().sum());
  Matrix<Scalar> out(1, 1);
  out(0, 0) = lse - y(gold, 0);
  check_finite(out, "pick_nll");
  Matrix<Scalar> probs = softmax_values(y);
  return logits.tape()->push(Op::kPickNll, {logits.id()}, std::move(out), {gold}, std::move(probs));
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return detail::unary(a, Op::kSum, std::move(out), "sum");
}

/// Sum of several scalar nodes.
template <typename Scalar>
Var<Scalar> sum(std::span<const Var<Scalar>> terms) {
  if (terms.empty()) throw ArgumentError("sum: no terms");
  if (terms.size() == 1) return terms.front();
  Var<Scalar> acc = stack_rows(terms);
  return sum(acc);
}

/// Inverted dropout: survivors are scaled by 1/(1-rate) in train mode so that
/// eval mode is the identity.
template <typename Scalar, typename Rng>
Var<Scalar> dropout(Var<Scalar> v, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ArgumentError("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mode == Mode::kEval || rate == 0.0) return v;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Scalar keep_scale = Scalar(1) / Scalar(1.0 - rate);
  Matrix<Scalar> mask(v.rows(), v.cols());
  for (Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = unit(rng) < rate ? Scalar(0) : keep_scale;
  }
  Matrix<Scalar> out = v.value().cwiseProduct(mask);
  return v.tape()->push(Op::kDropout, {v.id()}, std::move(out), {}, std::move(mask));
}

}  // namespace hmt::nd
