#pragma once

#include <functional>
#include <vector>

#include "decom/tensor.hpp"

namespace decom {

// Handle into a Tape's node list.
using Var = int;

// Reverse-mode recorder over matrix-valued nodes. Build a computation with
// the op methods, call backward() on a scalar output, then read grad() of
// any leaf that was registered with requires_grad. Gradients are exact for
// the recorded composition.
//
// Nodes hold their backward closures, so a Tape is pinned in memory
// (non-copyable, non-movable). Reuse via clear().
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false);
  Var constant(Tensor value) { return leaf(std::move(value), false); }
  Var constant_scalar(double v) { return leaf(Tensor::scalar(v), false); }

  // --- ops -----------------------------------------------------------
  Var matmul(Var a, Var b);              // [m,k] x [k,n]
  Var add(Var a, Var b);                 // same shape
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // elementwise
  Var add_rowvec(Var x, Var r);          // [m,n] + [1,n] broadcast over rows
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  Var mul_const(Var x, Tensor w);        // elementwise by a constant tensor
  Var tanh_act(Var x);
  Var leaky_relu(Var x, double slope);
  Var elu(Var x);
  Var relu(Var x);                       // gradient 0 at and below the kink
  Var exp_act(Var x);
  Var square(Var x);
  Var clamp(Var x, double lo, double hi);  // zero gradient outside [lo, hi]
  Var concat_cols(const std::vector<Var>& xs);
  Var slice_cols(Var x, int begin, int len);
  Var row_sum(Var x);                    // [m,n] -> [m,1]
  Var sum_all(Var x);                    // -> [1,1]
  Var mean_all(Var x);                   // -> [1,1]
  Var weighted_sum(Var x, Tensor w);     // sum of w.*x -> [1,1]
  Var max2(Var a, Var b);                // scalars; ties route gradient to a

  // --- access --------------------------------------------------------
  const Tensor& value(Var v) const { return nodes_[v].value; }
  // Gradient accumulated for v; a zero tensor if backward never touched it.
  const Tensor& grad(Var v);
  bool requires_grad(Var v) const { return nodes_[v].requires_grad; }

  // Runs reverse-mode accumulation from a scalar output. Throws if the
  // output is not a scalar.
  void backward(Var out);

  void clear();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_live = false;
    std::function<void()> back;
  };

  Var push(Tensor value, bool requires_grad);
  Tensor& grad_buf(Var v);
  void accumulate(Var v, const Tensor& g);

  std::vector<Node> nodes_;
};

}  // namespace decom
