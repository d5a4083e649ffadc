#include "decom/schedule.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace decom {

LrSchedule LrSchedule::constant(double a) {
  LrSchedule s;
  s.kind = Kind::Constant;
  s.base = a;
  return s;
}

LrSchedule LrSchedule::polynomial(double a, double k0, double p) {
  LrSchedule s;
  s.kind = Kind::Polynomial;
  s.base = a;
  s.offset = k0;
  s.exponent = p;
  return s;
}

void LrSchedule::validate() const {
  if (!(base > 0.0)) throw std::invalid_argument("schedule: base rate must be > 0");
  if (kind == Kind::Polynomial) {
    if (!(offset > 0.0)) throw std::invalid_argument("schedule: offset k0 must be > 0");
    if (!(exponent > 0.0)) throw std::invalid_argument("schedule: exponent p must be > 0");
  }
}

double LrSchedule::value(std::int64_t k) const {
  validate();
  if (kind == Kind::Constant) return base;
  return base * std::pow(static_cast<double>(k) + offset, -exponent);
}

namespace {

ScheduleReport::GroupCheck check_group(const LrSchedule& s, const char* name) {
  s.validate();
  ScheduleReport::GroupCheck c;
  std::ostringstream note;
  if (s.kind == LrSchedule::Kind::Constant) {
    c.robbins_monro = false;
    note << name << ": constant rate; sum of squares diverges (practical, non-conforming)";
  } else if (s.exponent <= 0.5) {
    c.robbins_monro = false;
    note << name << ": p = " << s.exponent
         << " <= 0.5 breaks the convergent squared sum (Robbins-Monro violation)";
  } else if (s.exponent > 1.0) {
    c.robbins_monro = false;
    note << name << ": p = " << s.exponent << " > 1 makes the rate sum converge";
  } else {
    c.robbins_monro = true;
    note << name << ": p = " << s.exponent << " admissible";
  }
  c.note = note.str();
  return c;
}

}  // namespace

ScheduleReport validate_lr_schedules(const ScheduleSet& set) {
  ScheduleReport r;
  r.eta = check_group(set.eta, "eta");
  r.zeta = check_group(set.zeta, "zeta");
  r.theta = check_group(set.theta, "theta");
  r.phi = check_group(set.phi, "phi");

  const bool any_constant = set.eta.kind == LrSchedule::Kind::Constant ||
                            set.zeta.kind == LrSchedule::Kind::Constant ||
                            set.theta.kind == LrSchedule::Kind::Constant ||
                            set.phi.kind == LrSchedule::Kind::Constant;
  r.all_polynomial = !any_constant;
  r.practical_non_conforming = any_constant;

  if (r.all_polynomial) {
    r.ordering_ok = set.theta.exponent > set.phi.exponent &&
                    set.phi.exponent > set.eta.exponent &&
                    set.phi.exponent > set.zeta.exponent;
  } else {
    r.ordering_ok = false;
  }
  r.conforming = r.all_polynomial && r.ordering_ok && r.eta.robbins_monro &&
                 r.zeta.robbins_monro && r.theta.robbins_monro && r.phi.robbins_monro;

  std::ostringstream sum;
  if (r.conforming) {
    sum << "conforming: all groups Robbins-Monro admissible with critics on the fastest "
           "timescale and the base policy on the slowest";
  } else if (r.practical_non_conforming) {
    sum << "practical, non-conforming: constant rates in use";
  } else {
    sum << "non-conforming:";
    for (const auto* c : {&r.eta, &r.zeta, &r.theta, &r.phi}) {
      if (!c->robbins_monro) sum << " [" << c->note << "]";
    }
    if (!r.ordering_ok) sum << " [timescale ordering p_theta > p_phi > p_eta, p_zeta violated]";
  }
  r.summary = sum.str();
  return r;
}

}  // namespace decom
