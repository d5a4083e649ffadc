#pragma once

#include <functional>
#include <span>
#include <vector>

namespace decom {

// Central finite differences of a scalar function, evaluated coordinate by
// coordinate on a copy of the parameter vector. Serves as the independent
// oracle for every reverse-mode gradient in the test and verification
// suites; it never touches the tape.
std::vector<double> central_finite_differences(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> params, double h = 1e-5);

struct FdReport {
  double max_rel_err = 0.0;
  int worst_index = -1;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

// Per-coordinate relative error |a - n| / max(|a|, |n|, floor). Coordinates
// where both magnitudes fall under the floor are treated as matching.
FdReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                           double floor = 1e-6);

}  // namespace decom
