#include "decom/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace decom {

void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("adam_step: param/grad count mismatch");
  }
  if (!state.initialized()) {
    for (const Tensor* p : params) {
      state.m.push_back(Tensor::from_shape(p->shape, 0.0));
      state.v.push_back(Tensor::from_shape(p->shape, 0.0));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: state does not match parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(grads[i])) {
      throw std::invalid_argument("adam_step: shape mismatch at tensor " + std::to_string(i));
    }
    if (!grads[i].all_finite()) {
      throw std::invalid_argument("adam_step: non-finite gradient at tensor " + std::to_string(i));
    }
  }
  state.step += 1;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * g.data[k];
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * g.data[k] * g.data[k];
      const double mhat = m.data[k] / b1t;
      const double vhat = v.data[k] / b2t;
      p.data[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double global_norm(const std::vector<Tensor>& grads) {
  double acc = 0.0;
  for (const Tensor& g : grads)
    for (double d : g.data) acc += d * d;
  return std::sqrt(acc);
}

std::vector<Tensor> clip_by_global_norm(std::vector<Tensor> grads, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("clip_by_global_norm: max_norm must be > 0");
  for (const Tensor& g : grads) {
    if (!g.all_finite()) {
      throw std::invalid_argument("clip_by_global_norm: non-finite gradient entry");
    }
  }
  const double norm = global_norm(grads);
  if (norm <= max_norm) return grads;
  const double s = max_norm / norm;
  for (Tensor& g : grads)
    for (double& d : g.data) d *= s;
  return grads;
}

std::vector<double> flatten(const std::vector<const Tensor*>& tensors) {
  std::vector<double> out;
  for (const Tensor* t : tensors) out.insert(out.end(), t->data.begin(), t->data.end());
  return out;
}

std::vector<double> flatten(const std::vector<Tensor*>& tensors) {
  std::vector<double> out;
  for (const Tensor* t : tensors) out.insert(out.end(), t->data.begin(), t->data.end());
  return out;
}

std::vector<double> flatten(const std::vector<Tensor>& tensors) {
  std::vector<double> out;
  for (const Tensor& t : tensors) out.insert(out.end(), t.data.begin(), t.data.end());
  return out;
}

void unflatten(const std::vector<double>& flat, const std::vector<Tensor*>& tensors) {
  std::size_t off = 0;
  for (Tensor* t : tensors) {
    if (off + t->data.size() > flat.size()) {
      throw std::invalid_argument("unflatten: flat vector too short");
    }
    for (std::size_t i = 0; i < t->data.size(); ++i) t->data[i] = flat[off + i];
    off += t->data.size();
  }
  if (off != flat.size()) throw std::invalid_argument("unflatten: flat vector too long");
}

}  // namespace decom
