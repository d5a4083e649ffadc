#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace decom {

// Dense row-major tensor of doubles. Everything in the library computes in
// double precision. Most code works with rank-2 [rows, cols]; row vectors
// are stored as [1, n].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);

  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  static Tensor from_shape(const std::vector<int>& shape, double fill = 0.0);

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const {
    if (shape.empty()) return 0;
    return shape.size() > 1 ? shape[1] : 1;
  }
  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  double scalar_value() const;  // throws unless numel() == 1

  bool all_finite() const;
  std::string shape_str() const;

  // Throws std::invalid_argument if data length does not match the shape.
  void check_invariant() const;
};

}  // namespace decom
