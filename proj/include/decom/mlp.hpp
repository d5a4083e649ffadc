#pragma once

#include <vector>

#include "decom/rng.hpp"
#include "decom/tape.hpp"
#include "decom/tensor.hpp"

namespace decom {

enum class Activation { Identity, LeakyRelu, Elu, Tanh };

// Slope of the leaky-relu branch. Fixed library-wide.
inline constexpr double kLeakyReluSlope = 0.01;

// Fully-connected network: chained affine maps with per-layer activations.
// Weights are stored [in, out] so a batched forward is x * W + b.
struct Mlp {
  struct Layer {
    Tensor w;  // [in, out]
    Tensor b;  // [1, out]
    Activation act = Activation::Identity;
  };

  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().w.rows(); }
  int output_dim() const { return layers.empty() ? 0 : layers.back().w.cols(); }

  // Weights initialized uniform in +-1/sqrt(fan_in), biases zero.
  static Mlp make(int input, const std::vector<int>& hidden, int output,
                  Activation hidden_act, Activation output_act, Rng& rng);

  // Inference path; throws on input-dimension mismatch.
  Tensor forward(const Tensor& x) const;

  // Recorded path. bind() registers every parameter as a tape leaf once;
  // the binding may be reused for several forwards on the same tape.
  struct Binding {
    std::vector<Var> w, b;
  };
  Binding bind(Tape& tape, bool requires_grad) const;
  Var forward(Tape& tape, const Binding& binding, Var x) const;

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;
  std::vector<Tensor> grads_from(Tape& tape, const Binding& binding) const;
  std::size_t param_count() const;
};

Var apply_activation(Tape& tape, Var x, Activation act);
void apply_activation_inplace(Tensor& x, Activation act);

// target <- delta * online + (1 - delta) * target. delta in (0, 1].
void soft_update(Mlp& target, const Mlp& online, double delta);

}  // namespace decom
