#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "decom/env.hpp"
#include "decom/env_cdsn.hpp"
#include "decom/env_ctc.hpp"
#include "decom/rng.hpp"

using namespace decom;

namespace {

EnvConfig ctc_safe_cfg() {
  EnvConfig cfg;
  cfg.name = "ctc_safe";
  return cfg;
}

EnvConfig cdsn_cfg() {
  EnvConfig cfg;
  cfg.name = "cdsn";
  cfg.episode_len = 101;
  return cfg;
}

std::vector<std::vector<double>> random_joint_action(const CcmgSpec& spec, Rng& rng,
                                                     double scale = 1.5) {
  std::vector<std::vector<double>> act(spec.n_agents);
  for (auto& a : act) {
    a.resize(spec.act_dim);
    for (double& v : a) v = rng.uniform(-scale, scale) * std::max(1.0, spec.action_high);
  }
  return act;
}

}  // namespace

TEST_CASE("reset: same seed gives bit-identical states") {
  for (const char* name : {"ctc_safe", "ctc_fair", "cdsn"}) {
    EnvConfig cfg;
    cfg.name = name;
    if (cfg.name == "cdsn") cfg.episode_len = 101;
    auto a = make_env(cfg);
    auto b = make_env(cfg);
    a->reset(123);
    b->reset(123);
    CHECK(a->global_state() == b->global_state());
    for (int i = 0; i < a->spec().n_agents; ++i) CHECK(a->observe(i) == b->observe(i));
    a->reset(124);
    CHECK(a->global_state() != b->global_state());
  }
}

TEST_CASE("ctc-safe reset places exactly 3 unsafe regions") {
  auto env = make_env(ctc_safe_cfg());
  env->reset(9);
  auto* ctc = dynamic_cast<CtcEnv*>(env.get());
  REQUIRE(ctc != nullptr);
  CHECK(ctc->regions().size() == 3);
  CHECK(env->spec().cost_count == 3);
  for (const auto& r : ctc->regions()) {
    CHECK(r[2] >= 0.1);
    CHECK(r[2] <= 0.25);
  }
}

TEST_CASE("cdsn reset deploys 5 sensors and 4 objects") {
  auto env = make_env(cdsn_cfg());
  env->reset(1);
  CHECK(env->spec().n_agents == 5);
  auto* cdsn = dynamic_cast<CdsnEnv*>(env.get());
  REQUIRE(cdsn != nullptr);
  CHECK(cdsn->sensor_positions().size() == 5);
  CHECK(cdsn->angles().size() == 5);
  CHECK(env->spec().action_low == -5.0);
  CHECK(env->spec().action_high == 5.0);
}

TEST_CASE("ctc-safe: one of four agents inside region j gives cost 1/4") {
  EnvConfig cfg = ctc_safe_cfg();
  cfg.n_regions = 1;
  cfg.fixed_regions = {{{0.0, 0.0, 0.3}}};
  cfg.hunter_spawn_box = {0.8, 0.9, 0.8, 0.9};  // everyone starts far away
  cfg.bank_start = {0.9, -0.9};
  auto env = make_env(cfg);
  env->reset(5);
  auto* ctc = dynamic_cast<CtcEnv*>(env.get());
  REQUIRE(ctc != nullptr);
  REQUIRE(env->spec().n_agents == 4);
  // Drag hunter 0 into the region center; nobody else moves.
  for (int step = 0; step < 40; ++step) {
    const auto& pos = ctc->positions()[0];
    std::vector<std::vector<double>> act(4, std::vector<double>{0.0, 0.0});
    act[0] = {-pos[0] * 4.0, -pos[1] * 4.0};
    StepOutcome out = env->step(act);
    const double d = std::hypot(ctc->positions()[0][0], ctc->positions()[0][1]);
    if (d <= 0.3) {
      CHECK(out.team_costs[0] == doctest::Approx(0.25));
      return;
    }
  }
  FAIL("hunter never reached the region");
}

TEST_CASE("ctc-fair: identical travel distances give zero unfairness cost") {
  EnvConfig cfg;
  cfg.name = "ctc_fair";
  auto env = make_env(cfg);
  env->reset(3);
  std::vector<std::vector<double>> act(env->spec().n_agents, std::vector<double>{0.5, -0.25});
  StepOutcome out = env->step(act);
  CHECK(out.team_costs[0] == doctest::Approx(0.0));
  // Different norms produce a positive spread that matches max - min.
  act[0] = {1.0, 0.0};
  act[1] = {0.0, 0.0};
  StepOutcome out2 = env->step(act);
  auto* ctc = dynamic_cast<CtcEnv*>(env.get());
  const auto& d = ctc->travel_distance();
  double lo = d[0], hi = d[0];
  for (double v : d) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(out2.team_costs[0] == doctest::Approx(hi - lo));
  CHECK(out2.team_costs[0] > 0.0);
}

TEST_CASE("cdsn: operational cost is the mean absolute clamped adjustment") {
  EnvConfig cfg = cdsn_cfg();
  auto env = make_env(cfg);
  env->reset(2);
  std::vector<std::vector<double>> act = {{1.0}, {-2.0}, {0.0}, {3.0}, {-1.0}};
  StepOutcome out = env->step(act);
  CHECK(out.team_costs[0] == doctest::Approx(1.4));
  // Out-of-box entries are clamped, not rejected.
  act = {{100.0}, {-7.0}, {0.0}, {0.0}, {0.0}};
  out = env->step(act);
  CHECK(out.team_costs[0] == doctest::Approx((5.0 + 5.0) / 5.0));
}

TEST_CASE("observe: shape contract holds across envs and seeds") {
  for (const char* name : {"ctc_safe", "ctc_fair", "cdsn"}) {
    EnvConfig cfg;
    cfg.name = name;
    if (cfg.name == "cdsn") cfg.episode_len = 101;
    auto env = make_env(cfg);
    Rng rng(77);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      env->reset(seed);
      for (int step = 0; step < 5; ++step) {
        for (int i = 0; i < env->spec().n_agents; ++i) {
          CHECK(static_cast<int>(env->observe(i).size()) == env->spec().obs_dim);
        }
        env->step(random_joint_action(env->spec(), rng));
      }
      CHECK(static_cast<int>(env->global_state().size()) == env->state_dim());
    }
    CHECK_THROWS(env->observe(-1));
    CHECK_THROWS(env->observe(env->spec().n_agents));
  }
}

TEST_CASE("observe: coincident agents have a zero relative-position block") {
  EnvConfig cfg = ctc_safe_cfg();
  cfg.n_hunters = 2;
  cfg.n_banks = 0;
  cfg.hunter_spawn_box = {0.25, 0.25, -0.5, -0.5};  // both at the same point
  auto env = make_env(cfg);
  env->reset(8);
  const auto obs = env->observe(0);
  CHECK(obs[2] == doctest::Approx(0.0));
  CHECK(obs[3] == doctest::Approx(0.0));
}

TEST_CASE("observe: ctc-safe carries unsafe-region offsets that track the agent") {
  EnvConfig cfg = ctc_safe_cfg();
  cfg.n_regions = 1;
  cfg.fixed_regions = {{{0.4, -0.2, 0.15}}};
  auto env = make_env(cfg);
  env->reset(4);
  auto* ctc = dynamic_cast<CtcEnv*>(env.get());
  const auto obs = env->observe(0);
  const auto& pos = ctc->positions()[0];
  const int off = static_cast<int>(obs.size()) - 3;
  CHECK(obs[off] == doctest::Approx(0.4 - pos[0]));
  CHECK(obs[off + 1] == doctest::Approx(-0.2 - pos[1]));
  CHECK(obs[off + 2] == doctest::Approx(0.15));
}

TEST_CASE("neighbor graph: fully connected without self-loops") {
  auto env = make_env(ctc_safe_cfg());
  env->reset(1);
  const int n = env->spec().n_agents;
  REQUIRE(n == 4);
  for (int i = 0; i < n; ++i) {
    const auto& ids = env->neighbor_ids(i);
    CHECK(static_cast<int>(ids.size()) == 3);
    for (int j : ids) CHECK(j != i);
  }
  CHECK_THROWS(env->neighbor_ids(n));

  EnvConfig solo = ctc_safe_cfg();
  solo.n_hunters = 1;
  solo.n_banks = 0;
  auto env1 = make_env(solo);
  CHECK(env1->neighbor_ids(0).empty());
}

TEST_CASE("episodes terminate exactly at T steps") {
  {
    auto env = make_env(ctc_safe_cfg());
    env->reset(6);
    Rng rng(1);
    for (int t = 0; t < 25; ++t) {
      StepOutcome out = env->step(random_joint_action(env->spec(), rng));
      CHECK(out.done == (t == 24));
    }
  }
  {
    auto env = make_env(cdsn_cfg());
    env->reset(6);
    Rng rng(1);
    for (int t = 0; t < 101; ++t) {
      StepOutcome out = env->step(random_joint_action(env->spec(), rng));
      CHECK(out.done == (t == 100));
    }
  }
}

TEST_CASE("team outcomes equal the mean of independently recomputed per-agent values") {
  Rng rng(123);
  for (const char* name : {"ctc_safe", "ctc_fair", "cdsn"}) {
    EnvConfig cfg;
    cfg.name = name;
    if (cfg.name == "cdsn") cfg.episode_len = 101;
    auto env = make_env(cfg);
    const int n = env->spec().n_agents;
    const int m = env->spec().cost_count;
    int steps_done = 0;
    std::uint64_t seed = 1000;
    env->reset(seed++);
    while (steps_done < 10000) {
      StepOutcome out = env->step(random_joint_action(env->spec(), rng));
      double r = 0.0;
      for (double v : out.agent_rewards) r += v;
      CHECK(std::fabs(out.team_reward - r / n) <= 1e-12);
      for (int j = 0; j < m; ++j) {
        double c = 0.0;
        for (double v : out.agent_costs[j]) c += v;
        CHECK(std::fabs(out.team_costs[j] - c / n) <= 1e-12);
        if (cfg.name == std::string("ctc_safe")) {
          // c^j is a mean of indicators: k/N for integer k
          const double scaled = out.team_costs[j] * n;
          CHECK(std::fabs(scaled - std::round(scaled)) <= 1e-12);
          CHECK(out.team_costs[j] >= 0.0);
          CHECK(out.team_costs[j] <= 1.0);
        }
        CHECK(out.team_costs[j] >= 0.0);
      }
      ++steps_done;
      if (out.done) env->reset(seed++);
    }
  }
}

TEST_CASE("ctc-fair: spread equals max-min of distances recomputed from actions") {
  EnvConfig cfg;
  cfg.name = "ctc_fair";
  auto env = make_env(cfg);
  env->reset(55);
  Rng rng(9);
  const int n = env->spec().n_agents;
  std::vector<double> dist(n, 0.0);
  for (int t = 0; t < 25; ++t) {
    auto act = random_joint_action(env->spec(), rng);
    StepOutcome out = env->step(act);
    for (int i = 0; i < n; ++i) {
      const double x = std::clamp(act[i][0], -1.0, 1.0);
      const double y = std::clamp(act[i][1], -1.0, 1.0);
      dist[i] += std::hypot(x, y);
    }
    double lo = dist[0], hi = dist[0];
    for (double v : dist) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(out.team_costs[0] == doctest::Approx(hi - lo).epsilon(1e-12));
  }
}

TEST_CASE("step validates action dimensions") {
  auto env = make_env(ctc_safe_cfg());
  env->reset(1);
  std::vector<std::vector<double>> bad(2, std::vector<double>{0.0, 0.0});
  CHECK_THROWS(env->step(bad));
  std::vector<std::vector<double>> bad2(4, std::vector<double>{0.0});
  CHECK_THROWS(env->step(bad2));
}

TEST_CASE("env config validation names the offending field") {
  EnvConfig cfg;
  cfg.name = "nowhere";
  try {
    cfg.validate();
    FAIL("expected validation error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("env.name") != std::string::npos);
  }
  EnvConfig cfg2 = ctc_safe_cfg();
  cfg2.episode_len = 0;
  CHECK_THROWS(cfg2.validate());
  EnvConfig cfg3 = ctc_safe_cfg();
  cfg3.fixed_regions = {{{0, 0, 0.1}}};  // 1 entry vs 3 regions
  CHECK_THROWS(cfg3.validate());
}
