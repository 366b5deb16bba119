#include "hmt/optimizer.hpp"

#include <cmath>

#include "hmt/errors.hpp"

namespace hmt {

void rmsprop_step(nd::Matrix<double>& param, const nd::Matrix<double>& grad,
                  nd::Matrix<double>& state, double learning_rate, double decay, double epsilon) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw DimensionError("rmsprop: gradient " + nd::shape_string(grad) + " for parameter " +
                         nd::shape_string(param));
  }
  if (!grad.allFinite()) throw TrainingError("rmsprop: non-finite gradient");
  if (state.rows() != param.rows() || state.cols() != param.cols()) {
    state.setZero(param.rows(), param.cols());
  }
  state.array() = decay * state.array() + (1.0 - decay) * grad.array().square();
  // entries with s + eps == 0 have g == 0 and stay put
  param.array() -= (learning_rate * grad.array() / (state.array() + epsilon).sqrt())
                       .unaryExpr([](double x) { return std::isnan(x) ? 0.0 : x; });
}

double clip_gradients(std::span<nd::Parameter<double>* const> params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw TrainingError("non-finite gradient norm");
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto* p : params) p->grad *= scale;
  }
  return norm;
}

void RmsProp::step(std::span<nd::Parameter<double>* const> params) {
  if (state_.size() != params.size()) state_.assign(params.size(), nd::Matrix<double>());
  for (std::size_t k = 0; k < params.size(); ++k) {
    rmsprop_step(params[k]->value, params[k]->grad, state_[k], lr_, decay_, eps_);
    if (!params[k]->value.allFinite()) {
      throw TrainingError("parameter " + params[k]->name + " became non-finite after an update");
    }
  }
}

}  // namespace hmt
