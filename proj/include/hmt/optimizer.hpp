#pragma once

#include <span>
#include <vector>

#include "hmt/nd/tape.hpp"

namespace hmt {

/// Single RMSprop update of one parameter block:
///   s <- decay * s + (1 - decay) * g^2
///   w <- w - lr * g / sqrt(s + eps)
/// Throws TrainingError if the gradient is not finite.
void rmsprop_step(nd::Matrix<double>& param, const nd::Matrix<double>& grad,
                  nd::Matrix<double>& state, double learning_rate, double decay, double epsilon);

/// Rescales all gradients so their joint L2 norm is at most max_norm. Returns
/// the norm before clipping.
double clip_gradients(std::span<nd::Parameter<double>* const> params, double max_norm);

class RmsProp {
 public:
  RmsProp(double learning_rate, double decay, double epsilon)
      : lr_(learning_rate), decay_(decay), eps_(epsilon) {}

  /// Updates every parameter from its accumulated gradient. State is keyed by
  /// position, so the parameter list must keep its order between calls.
  void step(std::span<nd::Parameter<double>* const> params);
  const std::vector<nd::Matrix<double>>& state() const { return state_; }

 private:
  double lr_, decay_, eps_;
  std::vector<nd::Matrix<double>> state_;
};

}  // namespace hmt
