#include "decom/fdcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace decom {

std::vector<double> central_finite_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h) {
  std::vector<double> x(params.begin(), params.end());
  std::vector<double> grad(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = f(x);
    x[i] = orig - h;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

FdReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                           double floor) {
  if (analytic.size() != numeric.size()) {
    throw std::invalid_argument("compare_gradients: length mismatch");
  }
  FdReport report;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double denom = std::max({std::fabs(a), std::fabs(n), floor});
    const double rel = std::fabs(a - n) / denom;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = static_cast<int>(i);
      report.analytic_at_worst = a;
      report.numeric_at_worst = n;
    }
  }
  return report;
}

}  // namespace decom
