#pragma once

#include "lifelong/mlp.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace lifelong {

template <typename Scalar>
struct AdamState {
  LayerStack<Scalar> first_moment;
  LayerStack<Scalar> second_moment;
  std::uint64_t step = 0;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(const Mlp<Scalar>& model, Scalar lr) {
  if (!(lr > Scalar(0))) throw std::invalid_argument("learning rate must be positive");
  AdamState<Scalar> state;
  state.first_moment = zeros_like(model.layers());
  state.second_moment = zeros_like(model.layers());
  state.lr = lr;
  return state;
}

/// One bias-corrected Adam update of `model` in place.
template <typename Scalar>
void adam_step(Mlp<Scalar>& model, const LayerStack<Scalar>& grads, AdamState<Scalar>& state) {
  auto& params = model.layers();
  if (!same_shape(params, grads) || !same_shape(params, state.first_moment) ||
      !same_shape(params, state.second_moment)) {
    throw std::invalid_argument("adam_step: gradient or moment shapes do not match the model");
  }
  ++state.step;
  const auto t = static_cast<Scalar>(state.step);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  const Scalar b1 = state.beta1;
  const Scalar b2 = state.beta2;
  const Scalar lr = state.lr;
  const Scalar eps = state.eps;

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * grad;
    v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.size(); ++l) {
    update(params[l].weights, grads[l].weights, state.first_moment[l].weights, state.second_moment[l].weights);
    update(params[l].bias, grads[l].bias, state.first_moment[l].bias, state.second_moment[l].bias);
  }
}

}  // namespace lifelong
