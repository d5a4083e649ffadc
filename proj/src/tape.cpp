#include "decom/tape.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace decom {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("tape: " + msg);
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  value.check_invariant();
  return push(std::move(value), requires_grad);
}

Tensor& Tape::grad_buf(Var v) {
  Node& n = nodes_[v];
  if (!n.grad_live) {
    n.grad = Tensor::from_shape(n.value.shape, 0.0);
    n.grad_live = true;
  }
  return n.grad;
}

const Tensor& Tape::grad(Var v) {
  return grad_buf(v);
}

void Tape::accumulate(Var v, const Tensor& g) {
  Tensor& buf = grad_buf(v);
  for (std::size_t i = 0; i < buf.data.size(); ++i) buf.data[i] += g.data[i];
}

void Tape::backward(Var out) {
  require(out >= 0 && out < static_cast<Var>(nodes_.size()), "backward: bad var");
  require(nodes_[out].value.numel() == 1, "backward: output must be scalar");
  grad_buf(out).data[0] = 1.0;
  for (Var v = out; v >= 0; --v) {
    Node& n = nodes_[v];
    if (n.grad_live && n.back) n.back();
  }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  require(A.shape.size() == 2 && B.shape.size() == 2, "matmul: rank-2 required");
  require(A.cols() == B.rows(), "matmul: inner dimensions " + A.shape_str() + " x " + B.shape_str());
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Tensor out(m, n, 0.0);
  for (int i = 0; i < m; ++i) {
    const double* arow = &A.data[static_cast<std::size_t>(i) * k];
    double* orow = &out.data[static_cast<std::size_t>(i) * n];
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = &B.data[static_cast<std::size_t>(p) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, a, b, m, k, n]() {
      const Tensor& g = nodes_[v].grad;
      if (nodes_[a].requires_grad) {
        Tensor& ga = grad_buf(a);
        const Tensor& B2 = nodes_[b].value;
        // ga += g * B^T
        for (int i = 0; i < m; ++i) {
          const double* grow = &g.data[static_cast<std::size_t>(i) * n];
          double* garow = &ga.data[static_cast<std::size_t>(i) * k];
          for (int p = 0; p < k; ++p) {
            const double* brow = &B2.data[static_cast<std::size_t>(p) * n];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            garow[p] += acc;
          }
        }
      }
      if (nodes_[b].requires_grad) {
        Tensor& gb = grad_buf(b);
        const Tensor& A2 = nodes_[a].value;
        // gb += A^T * g
        for (int i = 0; i < m; ++i) {
          const double* arow = &A2.data[static_cast<std::size_t>(i) * k];
          const double* grow = &g.data[static_cast<std::size_t>(i) * n];
          for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            double* gbrow = &gb.data[static_cast<std::size_t>(p) * n];
            for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
    };
  }
  return v;
}

Var Tape::add(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  require(A.same_shape(B), "add: shape mismatch " + A.shape_str() + " vs " + B.shape_str());
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += B.data[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, a, b]() {
      const Tensor& g = nodes_[v].grad;
      if (nodes_[a].requires_grad) accumulate(a, g);
      if (nodes_[b].requires_grad) accumulate(b, g);
    };
  }
  return v;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  require(A.same_shape(B), "sub: shape mismatch");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= B.data[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, a, b]() {
      const Tensor& g = nodes_[v].grad;
      if (nodes_[a].requires_grad) accumulate(a, g);
      if (nodes_[b].requires_grad) {
        Tensor& gb = grad_buf(b);
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= g.data[i];
      }
    };
  }
  return v;
}

Var Tape::mul(Var a, Var b) {
  const Tensor& A = nodes_[a].value;
  const Tensor& B = nodes_[b].value;
  require(A.same_shape(B), "mul: shape mismatch");
  Tensor out = A;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= B.data[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, a, b]() {
      const Tensor& g = nodes_[v].grad;
      if (nodes_[a].requires_grad) {
        Tensor& ga = grad_buf(a);
        const Tensor& B2 = nodes_[b].value;
        for (std::size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += g.data[i] * B2.data[i];
      }
      if (nodes_[b].requires_grad) {
        Tensor& gb = grad_buf(b);
        const Tensor& A2 = nodes_[a].value;
        for (std::size_t i = 0; i < gb.data.size(); ++i) gb.data[i] += g.data[i] * A2.data[i];
      }
    };
  }
  return v;
}

Var Tape::add_rowvec(Var x, Var r) {
  const Tensor& X = nodes_[x].value;
  const Tensor& R = nodes_[r].value;
  require(R.rows() == 1 && R.cols() == X.cols(), "add_rowvec: bias shape");
  Tensor out = X;
  const int m = X.rows(), n = X.cols();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data[static_cast<std::size_t>(i) * n + j] += R.data[j];
  const bool rg = nodes_[x].requires_grad || nodes_[r].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, r, m, n]() {
      const Tensor& g = nodes_[v].grad;
      if (nodes_[x].requires_grad) accumulate(x, g);
      if (nodes_[r].requires_grad) {
        Tensor& gr = grad_buf(r);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j) gr.data[j] += g.data[static_cast<std::size_t>(i) * n + j];
      }
    };
  }
  return v;
}

Var Tape::scale(Var x, double c) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d *= c;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, c]() {
      const Tensor& g = nodes_[v].grad;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += c * g.data[i];
    };
  }
  return v;
}

Var Tape::add_scalar(Var x, double c) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d += c;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      if (nodes_[x].requires_grad) accumulate(x, nodes_[v].grad);
    };
  }
  return v;
}

Var Tape::mul_const(Var x, Tensor w) {
  const Tensor& X = nodes_[x].value;
  require(X.same_shape(w), "mul_const: shape mismatch");
  Tensor out = X;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= w.data[i];
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    auto wcopy = std::make_shared<Tensor>(std::move(w));
    nodes_[v].back = [this, v, x, wcopy]() {
      const Tensor& g = nodes_[v].grad;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g.data[i] * wcopy->data[i];
    };
  }
  return v;
}

Var Tape::tanh_act(Var x) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = std::tanh(d);
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& y = nodes_[v].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
  }
  return v;
}

Var Tape::leaky_relu(Var x, double slope) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = d > 0.0 ? d : slope * d;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, slope]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& in = nodes_[x].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += g.data[i] * (in.data[i] > 0.0 ? 1.0 : slope);
    };
  }
  return v;
}

Var Tape::elu(Var x) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = d > 0.0 ? d : std::expm1(d);
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& in = nodes_[x].value;
      const Tensor& y = nodes_[v].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += g.data[i] * (in.data[i] > 0.0 ? 1.0 : y.data[i] + 1.0);
    };
  }
  return v;
}

Var Tape::relu(Var x) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = d > 0.0 ? d : 0.0;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& in = nodes_[x].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += in.data[i] > 0.0 ? g.data[i] : 0.0;
    };
  }
  return v;
}

Var Tape::exp_act(Var x) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = std::exp(d);
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& y = nodes_[v].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g.data[i] * y.data[i];
    };
  }
  return v;
}

Var Tape::square(Var x) {
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = d * d;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& in = nodes_[x].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        gx.data[i] += 2.0 * in.data[i] * g.data[i];
    };
  }
  return v;
}

Var Tape::clamp(Var x, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  Tensor out = nodes_[x].value;
  for (double& d : out.data) d = d < lo ? lo : (d > hi ? hi : d);
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, lo, hi]() {
      const Tensor& g = nodes_[v].grad;
      const Tensor& in = nodes_[x].value;
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i)
        if (in.data[i] > lo && in.data[i] < hi) gx.data[i] += g.data[i];
    };
  }
  return v;
}

Var Tape::concat_cols(const std::vector<Var>& xs) {
  require(!xs.empty(), "concat_cols: empty input");
  const int m = nodes_[xs[0]].value.rows();
  int total = 0;
  bool rg = false;
  for (Var x : xs) {
    require(nodes_[x].value.rows() == m, "concat_cols: row mismatch");
    total += nodes_[x].value.cols();
    rg = rg || nodes_[x].requires_grad;
  }
  Tensor out(m, total);
  int off = 0;
  for (Var x : xs) {
    const Tensor& X = nodes_[x].value;
    const int n = X.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        out.data[static_cast<std::size_t>(i) * total + off + j] =
            X.data[static_cast<std::size_t>(i) * n + j];
    off += n;
  }
  Var v = push(std::move(out), rg);
  if (rg) {
    auto parts = std::make_shared<std::vector<Var>>(xs);
    nodes_[v].back = [this, v, parts, m, total]() {
      const Tensor& g = nodes_[v].grad;
      int off2 = 0;
      for (Var x : *parts) {
        const int n = nodes_[x].value.cols();
        if (nodes_[x].requires_grad) {
          Tensor& gx = grad_buf(x);
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
              gx.data[static_cast<std::size_t>(i) * n + j] +=
                  g.data[static_cast<std::size_t>(i) * total + off2 + j];
        }
        off2 += n;
      }
    };
  }
  return v;
}

Var Tape::slice_cols(Var x, int begin, int len) {
  const Tensor& X = nodes_[x].value;
  require(begin >= 0 && len > 0 && begin + len <= X.cols(), "slice_cols: out of range");
  const int m = X.rows(), n = X.cols();
  Tensor out(m, len);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < len; ++j)
      out.data[static_cast<std::size_t>(i) * len + j] =
          X.data[static_cast<std::size_t>(i) * n + begin + j];
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, begin, len, m, n]() {
      const Tensor& g = nodes_[v].grad;
      Tensor& gx = grad_buf(x);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j)
          gx.data[static_cast<std::size_t>(i) * n + begin + j] +=
              g.data[static_cast<std::size_t>(i) * len + j];
    };
  }
  return v;
}

Var Tape::row_sum(Var x) {
  const Tensor& X = nodes_[x].value;
  const int m = X.rows(), n = X.cols();
  Tensor out(m, 1, 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j) acc += X.data[static_cast<std::size_t>(i) * n + j];
    out.data[i] = acc;
  }
  const bool rg = nodes_[x].requires_grad;
  Var v = push(std::move(out), rg);
  if (rg) {
    nodes_[v].back = [this, v, x, m, n]() {
      const Tensor& g = nodes_[v].grad;
      Tensor& gx = grad_buf(x);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) gx.data[static_cast<std::size_t>(i) * n + j] += g.data[i];
    };
  }
  return v;
}

Var Tape::sum_all(Var x) {
  const Tensor& X = nodes_[x].value;
  double acc = 0.0;
  for (double d : X.data) acc += d;
  const bool rg = nodes_[x].requires_grad;
  Var v = push(Tensor::scalar(acc), rg);
  if (rg) {
    nodes_[v].back = [this, v, x]() {
      const double g = nodes_[v].grad.data[0];
      Tensor& gx = grad_buf(x);
      for (double& d : gx.data) d += g;
    };
  }
  return v;
}

Var Tape::mean_all(Var x) {
  const double inv = 1.0 / static_cast<double>(nodes_[x].value.numel());
  return scale(sum_all(x), inv);
}

Var Tape::weighted_sum(Var x, Tensor w) {
  const Tensor& X = nodes_[x].value;
  require(X.same_shape(w), "weighted_sum: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < X.data.size(); ++i) acc += X.data[i] * w.data[i];
  const bool rg = nodes_[x].requires_grad;
  Var v = push(Tensor::scalar(acc), rg);
  if (rg) {
    auto wcopy = std::make_shared<Tensor>(std::move(w));
    nodes_[v].back = [this, v, x, wcopy]() {
      const double g = nodes_[v].grad.data[0];
      Tensor& gx = grad_buf(x);
      for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g * wcopy->data[i];
    };
  }
  return v;
}

Var Tape::max2(Var a, Var b) {
  require(nodes_[a].value.numel() == 1 && nodes_[b].value.numel() == 1, "max2: scalars required");
  const double av = nodes_[a].value.data[0];
  const double bv = nodes_[b].value.data[0];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  Var v = push(Tensor::scalar(av >= bv ? av : bv), rg);
  if (rg) {
    nodes_[v].back = [this, v, a, b, av, bv]() {
      const double g = nodes_[v].grad.data[0];
      if (av >= bv) {
        if (nodes_[a].requires_grad) grad_buf(a).data[0] += g;
      } else {
        if (nodes_[b].requires_grad) grad_buf(b).data[0] += g;
      }
    };
  }
  return v;
}

}  // namespace decom
