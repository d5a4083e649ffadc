#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "decom/rng.hpp"

namespace decom {

// Discrete Ornstein-Uhlenbeck recursion used for exploration noise:
//   x <- x + rate * (mean - x) + sigma * xi,  xi ~ N(0, I).
class OuProcess {
 public:
  OuProcess(int dim, double rate, double sigma, double long_run_mean, std::uint64_t seed);

  // Resets the state to the long-run mean (start of an episode).
  void reset();

  // Advances the recursion and returns the new state.
  const std::vector<double>& sample();

  const std::vector<double>& state() const { return state_; }
  int dim() const { return static_cast<int>(state_.size()); }
  double rate() const { return rate_; }
  double sigma() const { return sigma_; }
  double long_run_mean() const { return mean_; }

 private:
  std::vector<double> state_;
  double rate_;
  double sigma_;
  double mean_;
  Rng rng_;
};

// log_std values outside this range produce degenerate densities and are
// clamped before use.
inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

double clamp_log_std(double log_std);

struct GaussianSample {
  std::vector<double> value;
  double log_density;
};

// Reparameterized draw from a diagonal Gaussian: value = mean + exp(ls)*xi.
// log_density is the diagonal-Gaussian log pdf evaluated at the draw.
GaussianSample gaussian_head_sample(std::span<const double> mean,
                                    std::span<const double> log_std, Rng& rng);

// Diagonal-Gaussian log pdf of x under (mean, log_std); log_std is clamped.
double gaussian_log_density(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> x);

}  // namespace decom
