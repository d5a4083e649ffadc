#pragma once

#include <cstdint>
#include <string>

namespace decom {

// Learning-rate schedule for one parameter group: either constant or
// polynomial a * (k + k0)^(-p).
struct LrSchedule {
  enum class Kind { Constant, Polynomial };
  Kind kind = Kind::Constant;
  double base = 1e-3;    // a
  double offset = 1.0;   // k0
  double exponent = 0.0;  // p

  double value(std::int64_t k) const;
  void validate() const;  // malformed coefficients -> throws

  static LrSchedule constant(double a);
  static LrSchedule polynomial(double a, double k0, double p);
};

// One schedule per parameter group: reward critic (eta), cost critics
// (zeta), base policies (theta), perturbation policies (phi).
struct ScheduleSet {
  LrSchedule eta, zeta, theta, phi;
};

struct ScheduleReport {
  struct GroupCheck {
    bool robbins_monro = false;  // divergent sum + convergent squared sum
    std::string note;
  };
  GroupCheck eta, zeta, theta, phi;

  bool all_polynomial = false;
  // Timescale separation: alpha_theta/alpha_phi -> 0, alpha_phi/alpha_eta
  // -> 0 and alpha_phi/alpha_zeta -> 0, i.e. exponent ordering
  // p_theta > p_phi > p_eta and p_theta > p_phi > p_zeta.
  bool ordering_ok = false;
  bool conforming = false;
  // Constant rates train fine in practice but break the convergence
  // conditions; they are flagged rather than rejected.
  bool practical_non_conforming = false;
  std::string summary;
};

ScheduleReport validate_lr_schedules(const ScheduleSet& set);

}  // namespace decom
