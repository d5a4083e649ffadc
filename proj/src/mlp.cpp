#include "decom/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace decom {

void apply_activation_inplace(Tensor& x, Activation act) {
  switch (act) {
    case Activation::Identity:
      return;
    case Activation::LeakyRelu:
      for (double& d : x.data) d = d > 0.0 ? d : kLeakyReluSlope * d;
      return;
    case Activation::Elu:
      for (double& d : x.data) d = d > 0.0 ? d : std::expm1(d);
      return;
    case Activation::Tanh:
      for (double& d : x.data) d = std::tanh(d);
      return;
  }
}

Var apply_activation(Tape& tape, Var x, Activation act) {
  switch (act) {
    case Activation::Identity:
      return x;
    case Activation::LeakyRelu:
      return tape.leaky_relu(x, kLeakyReluSlope);
    case Activation::Elu:
      return tape.elu(x);
    case Activation::Tanh:
      return tape.tanh_act(x);
  }
  return x;
}

Mlp Mlp::make(int input, const std::vector<int>& hidden, int output,
              Activation hidden_act, Activation output_act, Rng& rng) {
  if (input <= 0 || output <= 0) throw std::invalid_argument("Mlp::make: bad dims");
  Mlp net;
  std::vector<int> dims;
  dims.push_back(input);
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("Mlp::make: bad hidden size");
    dims.push_back(h);
  }
  dims.push_back(output);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const int fan_in = dims[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.w = Tensor(fan_in, dims[l + 1]);
    for (double& d : layer.w.data) d = rng.uniform(-bound, bound);
    layer.b = Tensor(1, dims[l + 1], 0.0);
    layer.act = (l + 2 == dims.size()) ? output_act : hidden_act;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Tensor Mlp::forward(const Tensor& x) const {
  if (x.cols() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: input dim " + std::to_string(x.cols()) +
                                " does not match net input " + std::to_string(input_dim()));
  }
  Tensor cur = x;
  for (const Layer& layer : layers) {
    const int m = cur.rows(), k = cur.cols(), n = layer.w.cols();
    Tensor next(m, n);
    for (int i = 0; i < m; ++i) {
      double* orow = &next.data[static_cast<std::size_t>(i) * n];
      for (int j = 0; j < n; ++j) orow[j] = layer.b.data[j];
      const double* crow = &cur.data[static_cast<std::size_t>(i) * k];
      for (int p = 0; p < k; ++p) {
        const double cv = crow[p];
        if (cv == 0.0) continue;
        const double* wrow = &layer.w.data[static_cast<std::size_t>(p) * n];
        for (int j = 0; j < n; ++j) orow[j] += cv * wrow[j];
      }
    }
    apply_activation_inplace(next, layer.act);
    cur = std::move(next);
  }
  return cur;
}

Mlp::Binding Mlp::bind(Tape& tape, bool requires_grad) const {
  Binding bd;
  for (const Layer& layer : layers) {
    bd.w.push_back(tape.leaf(layer.w, requires_grad));
    bd.b.push_back(tape.leaf(layer.b, requires_grad));
  }
  return bd;
}

Var Mlp::forward(Tape& tape, const Binding& binding, Var x) const {
  if (binding.w.size() != layers.size()) {
    throw std::invalid_argument("Mlp::forward: binding does not match net");
  }
  if (tape.value(x).cols() != input_dim()) {
    throw std::invalid_argument("Mlp::forward: recorded input dim mismatch");
  }
  Var cur = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    cur = tape.add_rowvec(tape.matmul(cur, binding.w[l]), binding.b[l]);
    cur = apply_activation(tape, cur, layers[l].act);
  }
  return cur;
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (Layer& l : layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> out;
  for (const Layer& l : layers) {
    out.push_back(&l.w);
    out.push_back(&l.b);
  }
  return out;
}

std::vector<Tensor> Mlp::grads_from(Tape& tape, const Binding& binding) const {
  std::vector<Tensor> out;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    out.push_back(tape.grad(binding.w[l]));
    out.push_back(tape.grad(binding.b[l]));
  }
  return out;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.data.size() + l.b.data.size();
  return n;
}

void soft_update(Mlp& target, const Mlp& online, double delta) {
  if (delta <= 0.0 || delta > 1.0) throw std::invalid_argument("soft_update: delta must be in (0,1]");
  if (target.layers.size() != online.layers.size()) {
    throw std::invalid_argument("soft_update: structure mismatch");
  }
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    auto blend = [delta](Tensor& t, const Tensor& o) {
      for (std::size_t i = 0; i < t.data.size(); ++i)
        t.data[i] = delta * o.data[i] + (1.0 - delta) * t.data[i];
    };
    blend(target.layers[l].w, online.layers[l].w);
    blend(target.layers[l].b, online.layers[l].b);
  }
}

}  // namespace decom
