#ifndef RANDNET_OPTIM_HPP
#define RANDNET_OPTIM_HPP

#include <cmath>

#include "randnet/core.hpp"

namespace randnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    require(learning_rate > 0.0, ErrorKind::Config, "learning rate must be > 0");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorKind::Config, "ADAM betas must lie in (0, 1)");
    require(eps > 0.0, ErrorKind::Config, "ADAM eps must be > 0");
  }
};

// First/second moment estimates for one parameter tensor.
template <typename Tensor>
struct AdamState {
  Tensor m;
  Tensor v;
  long step = 0;
};

// Bias-corrected ADAM update, in place.
template <typename Tensor>
void adam_step(Tensor& param, const Tensor& grad, AdamState<Tensor>& state, const AdamConfig& cfg) {
  using Scalar = typename Tensor::Scalar;
  require(param.rows() == grad.rows() && param.cols() == grad.cols(), ErrorKind::Dimension,
          "ADAM parameter is " + dims(param.rows(), param.cols()) + " but gradient is " + dims(grad.rows(), grad.cols()));
  if (state.step == 0) {
    state.m = Tensor::Zero(param.rows(), param.cols());
    state.v = Tensor::Zero(param.rows(), param.cols());
  }
  ++state.step;
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  state.m = b1 * state.m + (Scalar(1) - b1) * grad;
  state.v = b2 * state.v + (Scalar(1) - b2) * grad.cwiseProduct(grad);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
  const auto lr = static_cast<Scalar>(cfg.learning_rate);
  const auto eps = static_cast<Scalar>(cfg.eps);
  param.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

}  // namespace randnet

#endif  // RANDNET_OPTIM_HPP
