#include "decom/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace decom {

OuProcess::OuProcess(int dim, double rate, double sigma, double long_run_mean,
                     std::uint64_t seed)
    : state_(dim, long_run_mean), rate_(rate), sigma_(sigma), mean_(long_run_mean), rng_(seed) {
  if (dim <= 0) throw std::invalid_argument("OuProcess: dim must be positive");
}

void OuProcess::reset() {
  for (double& x : state_) x = mean_;
}

const std::vector<double>& OuProcess::sample() {
  for (double& x : state_) x += rate_ * (mean_ - x) + sigma_ * rng_.normal();
  return state_;
}

double clamp_log_std(double log_std) {
  if (log_std < kLogStdMin) return kLogStdMin;
  if (log_std > kLogStdMax) return kLogStdMax;
  return log_std;
}

GaussianSample gaussian_head_sample(std::span<const double> mean,
                                    std::span<const double> log_std, Rng& rng) {
  if (mean.size() != log_std.size()) {
    throw std::invalid_argument("gaussian_head_sample: shape mismatch");
  }
  GaussianSample out;
  out.value.resize(mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double sd = std::exp(clamp_log_std(log_std[i]));
    out.value[i] = mean[i] + sd * rng.normal();
  }
  out.log_density = gaussian_log_density(mean, log_std, out.value);
  return out;
}

double gaussian_log_density(std::span<const double> mean, std::span<const double> log_std,
                            std::span<const double> x) {
  if (mean.size() != log_std.size() || mean.size() != x.size()) {
    throw std::invalid_argument("gaussian_log_density: shape mismatch");
  }
  constexpr double kLogTwoPi = 1.8378770664093454836;
  double acc = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double ls = clamp_log_std(log_std[i]);
    const double z = (x[i] - mean[i]) * std::exp(-ls);
    acc += -0.5 * z * z - ls - 0.5 * kLogTwoPi;
  }
  return acc;
}

}  // namespace decom
