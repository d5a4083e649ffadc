#pragma once

#include <cstdint>
#include <vector>

#include "decom/tensor.hpp"

namespace decom {

// Standard Adam. Moments are lazily shaped to the parameter set on the
// first step.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Tensor> m, v;

  bool initialized() const { return !m.empty(); }
};

// One descent step: params -= update(grads). Throws on shape mismatch or
// non-finite gradients.
void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state);

double global_norm(const std::vector<Tensor>& grads);

// Gradient clipping by global 2-norm: returns the input unchanged when its
// norm is <= max_norm, otherwise the input scaled by max_norm/norm. Throws
// on non-finite entries or max_norm <= 0.
std::vector<Tensor> clip_by_global_norm(std::vector<Tensor> grads, double max_norm);

// Flat-vector views over a parameter set (used by the projected steps on
// the perturbation parameters).
std::vector<double> flatten(const std::vector<const Tensor*>& tensors);
std::vector<double> flatten(const std::vector<Tensor*>& tensors);
std::vector<double> flatten(const std::vector<Tensor>& tensors);
void unflatten(const std::vector<double>& flat, const std::vector<Tensor*>& tensors);

}  // namespace decom
