#include "decom/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace decom {

Tensor::Tensor(int rows, int cols, double fill) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("Tensor: dimensions must be positive, got " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  shape = {rows, cols};
  data.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Tensor Tensor::scalar(double v) {
  Tensor t(1, 1);
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.shape = {1, static_cast<int>(v.size())};
  t.data = std::move(v);
  t.check_invariant();
  return t;
}

Tensor Tensor::from_shape(const std::vector<int>& shape, double fill) {
  Tensor t;
  t.shape = shape;
  std::int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw std::invalid_argument("Tensor: dimensions must be positive");
    n *= d;
  }
  t.data.assign(static_cast<std::size_t>(n), fill);
  return t;
}

double Tensor::scalar_value() const {
  if (numel() != 1) {
    throw std::invalid_argument("Tensor: expected scalar, got shape " + shape_str());
  }
  return data[0];
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void Tensor::check_invariant() const {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  if (shape.empty()) n = 0;
  if (n != numel()) {
    throw std::invalid_argument("Tensor: data length " + std::to_string(numel()) +
                                " does not match shape " + shape_str());
  }
}

}  // namespace decom
