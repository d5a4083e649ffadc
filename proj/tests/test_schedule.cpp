#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "decom/schedule.hpp"

using namespace decom;

TEST_CASE("polynomial schedule values decay as a*(k+k0)^-p") {
  LrSchedule s = LrSchedule::polynomial(0.1, 1.0, 0.9);
  CHECK(s.value(0) == doctest::Approx(0.1));
  CHECK(s.value(99) == doctest::Approx(0.1 * std::pow(100.0, -0.9)));
  LrSchedule c = LrSchedule::constant(3e-3);
  CHECK(c.value(0) == 3e-3);
  CHECK(c.value(1000000) == 3e-3);
}

TEST_CASE("malformed schedules are rejected") {
  CHECK_THROWS(LrSchedule::constant(0.0).validate());
  CHECK_THROWS(LrSchedule::constant(-1.0).validate());
  CHECK_THROWS(LrSchedule::polynomial(0.1, 0.0, 0.9).validate());
  CHECK_THROWS(LrSchedule::polynomial(0.1, 1.0, 0.0).validate());
  CHECK_THROWS(LrSchedule::polynomial(-0.1, 1.0, 0.9).validate());
}

TEST_CASE("conforming exponent set passes every check") {
  ScheduleSet set;
  set.eta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.zeta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.phi = LrSchedule::polynomial(0.01, 1, 0.75);
  set.theta = LrSchedule::polynomial(0.01, 1, 0.9);
  ScheduleReport r = validate_lr_schedules(set);
  CHECK(r.conforming);
  CHECK(r.ordering_ok);
  CHECK(r.all_polynomial);
  CHECK(!r.practical_non_conforming);
  CHECK(r.eta.robbins_monro);
  CHECK(r.theta.robbins_monro);
}

TEST_CASE("all-constant schedules are flagged practical, non-conforming, without error") {
  ScheduleSet set;
  set.eta = LrSchedule::constant(0.001);
  set.zeta = LrSchedule::constant(0.003);
  set.theta = LrSchedule::constant(0.001);
  set.phi = LrSchedule::constant(0.003);
  ScheduleReport r = validate_lr_schedules(set);
  CHECK(!r.conforming);
  CHECK(r.practical_non_conforming);
  CHECK(r.summary.find("practical") != std::string::npos);
}

TEST_CASE("low exponent reports a Robbins-Monro violation") {
  ScheduleSet set;
  set.eta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.zeta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.phi = LrSchedule::polynomial(0.01, 1, 0.75);
  set.theta = LrSchedule::polynomial(0.01, 1, 0.4);
  ScheduleReport r = validate_lr_schedules(set);
  CHECK(!r.conforming);
  CHECK(!r.theta.robbins_monro);
  CHECK(r.theta.note.find("Robbins-Monro") != std::string::npos);
}

TEST_CASE("timescale ordering must be strict in both critic chains") {
  ScheduleSet set;
  set.eta = LrSchedule::polynomial(0.01, 1, 0.8);  // slower than phi: violates
  set.zeta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.phi = LrSchedule::polynomial(0.01, 1, 0.75);
  set.theta = LrSchedule::polynomial(0.01, 1, 0.9);
  ScheduleReport r = validate_lr_schedules(set);
  CHECK(!r.conforming);
  CHECK(!r.ordering_ok);

  set.eta = LrSchedule::polynomial(0.01, 1, 0.6);
  set.zeta = LrSchedule::polynomial(0.01, 1, 0.76);  // zeta above phi: violates
  r = validate_lr_schedules(set);
  CHECK(!r.ordering_ok);

  set.zeta = LrSchedule::polynomial(0.01, 1, 0.75);  // equality is not strict
  r = validate_lr_schedules(set);
  CHECK(!r.ordering_ok);
}

TEST_CASE("exponent classification over a generated grid") {
  // Every combination drawn from a small exponent menu classifies exactly
  // as the p-in-(0.5,1] and strict-ordering rules dictate.
  const double menu[] = {0.3, 0.55, 0.6, 0.75, 0.9, 1.0, 1.2};
  int checked = 0;
  for (double pe : menu)
    for (double pz : menu)
      for (double pf : menu)
        for (double pt : menu) {
          ScheduleSet set;
          set.eta = LrSchedule::polynomial(0.01, 1, pe);
          set.zeta = LrSchedule::polynomial(0.01, 1, pz);
          set.phi = LrSchedule::polynomial(0.01, 1, pf);
          set.theta = LrSchedule::polynomial(0.01, 1, pt);
          const bool rm = pe > 0.5 && pe <= 1.0 && pz > 0.5 && pz <= 1.0 && pf > 0.5 &&
                          pf <= 1.0 && pt > 0.5 && pt <= 1.0;
          const bool order = pt > pf && pf > pe && pf > pz;
          ScheduleReport r = validate_lr_schedules(set);
          CHECK(r.conforming == (rm && order));
          ++checked;
        }
  CHECK(checked == 7 * 7 * 7 * 7);
}
