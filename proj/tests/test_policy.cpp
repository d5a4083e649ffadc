#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "decom/optim.hpp"
#include "decom/policy.hpp"

using namespace decom;

namespace {

CcmgSpec small_spec(int n_agents = 3, int obs_dim = 4, int act_dim = 2) {
  CcmgSpec spec;
  spec.n_agents = n_agents;
  spec.cost_count = 1;
  spec.obs_dim = obs_dim;
  spec.act_dim = act_dim;
  spec.action_low = -1.0;
  spec.action_high = 1.0;
  spec.episode_len = 25;
  spec.gamma = 0.99;
  spec.neighbors = full_neighbor_graph(n_agents);
  return spec;
}

std::vector<std::vector<double>> random_obs(const CcmgSpec& spec, Rng& rng) {
  std::vector<std::vector<double>> obs(spec.n_agents, std::vector<double>(spec.obs_dim));
  for (auto& o : obs)
    for (double& v : o) v = rng.uniform(-1.0, 1.0);
  return obs;
}

}  // namespace

TEST_CASE("base_act: zero-weight deterministic net gives the zero action") {
  Rng rng(1);
  DecomJointPolicy policy(small_spec(), PolicyMode::Deterministic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  for (auto* p : policy.base(0).net.params())
    for (double& v : p->data) v = 0.0;
  Rng act_rng(2);
  auto r = policy.base_act(0, {0.5, -0.5, 0.1, 0.9}, false, nullptr, act_rng);
  CHECK(r.action[0] == 0.0);
  CHECK(r.action[1] == 0.0);
  CHECK(!r.log_density.has_value());
}

TEST_CASE("base_act: stochastic at the log-std floor collapses to the mean") {
  Rng rng(3);
  DecomJointPolicy policy(small_spec(), PolicyMode::Stochastic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  // Force raw log-std far below the floor via the output bias.
  Mlp& net = policy.base(0).net;
  const int d = policy.act_dim();
  for (auto* p : net.params())
    for (double& v : p->data) v = 0.0;
  for (int k = 0; k < d; ++k) net.layers.back().b.data[d + k] = -1e9;
  Rng act_rng(7);
  std::vector<double> obs = {0.2, 0.1, -0.3, 0.4};
  auto r = policy.base_act(0, obs, true, nullptr, act_rng);
  const auto mean = policy.base(0).mean_action(obs);
  CHECK(r.action[0] == doctest::Approx(mean[0]).epsilon(1e-8));
  CHECK(r.action[1] == doctest::Approx(mean[1]).epsilon(1e-8));
  CHECK(r.log_density.has_value());
}

TEST_CASE("base_act: same seed and params give identical actions") {
  Rng rng(5);
  DecomJointPolicy policy(small_spec(), PolicyMode::Stochastic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  std::vector<double> obs = {0.3, -0.2, 0.8, 0.0};
  Rng a(11), b(11);
  auto ra = policy.base_act(1, obs, true, nullptr, a);
  auto rb = policy.base_act(1, obs, true, nullptr, b);
  CHECK(ra.action == rb.action);
  CHECK(*ra.log_density == *rb.log_density);
}

TEST_CASE("compose: lambda 0 returns the base action exactly") {
  Rng rng(6);
  DecomJointPolicy policy(small_spec(), PolicyMode::Deterministic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  Rng draws(19);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> obs(4), b(2);
    for (double& v : obs) v = draws.uniform(-1, 1);
    for (double& v : b) v = draws.uniform(-0.9, 0.9);
    std::vector<std::vector<double>> nb = {{draws.uniform(-1, 1), draws.uniform(-1, 1)},
                                           {draws.uniform(-1, 1), draws.uniform(-1, 1)}};
    auto c = policy.compose(0, obs, b, nb, 0.0);
    CHECK(c.preclamp == b);
    CHECK(c.clamped == b);
  }
}

TEST_CASE("compose: arithmetic of the composition rule") {
  Rng rng(7);
  CcmgSpec spec = small_spec(2, 3, 1);
  DecomJointPolicy policy(spec, PolicyMode::Deterministic, Variant::A, 1.0, {4},
                          Activation::LeakyRelu, rng);
  // Rig the perturbation net to output a constant 0.1: zero weights, then a
  // bias of atanh(0.1) through the tanh output.
  Mlp& g = policy.perturb(0);
  for (auto* p : g.params())
    for (double& v : p->data) v = 0.0;
  g.layers.back().b.data[0] = std::atanh(0.1);
  auto c = policy.compose(0, {0, 0, 0}, {0.2}, {{0.7}}, 1.0);
  CHECK(c.preclamp[0] == doctest::Approx(0.3));
  CHECK(c.clamped[0] == doctest::Approx(0.3));
  // Clamping applies after perturbation.
  auto c2 = policy.compose(0, {0, 0, 0}, {0.95}, {{0.7}}, 8.0);
  CHECK(c2.preclamp[0] == doctest::Approx(0.95 + 0.8));
  CHECK(c2.clamped[0] == doctest::Approx(1.0));
}

TEST_CASE("joint_act: final actions always live in the action box") {
  Rng rng(8);
  CcmgSpec spec = small_spec();
  DecomJointPolicy policy(spec, PolicyMode::Stochastic, Variant::A, 2.5, {8},
                          Activation::LeakyRelu, rng);
  std::vector<OuProcess> pert_noise;
  for (int i = 0; i < spec.n_agents; ++i) pert_noise.emplace_back(spec.act_dim, 0.15, 0.9, 0.0, i);
  Rng act_rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    auto obs = random_obs(spec, act_rng);
    auto r = policy.joint_act(obs, true, nullptr, &pert_noise, act_rng);
    for (const auto& a : r.action)
      for (double v : a) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
      }
  }
}

TEST_CASE("joint_act: variant N insensitivity and variant I base-independence") {
  Rng rng(9);
  CcmgSpec spec = small_spec();
  Rng act_rng(33);

  // Variant N: perturbing agent j's base action leaves agent i's final
  // action unchanged (no sharing by construction). We emulate the change by
  // composing manually with altered neighbor inputs.
  DecomJointPolicy pn(spec, PolicyMode::Deterministic, Variant::N, 1.0, {8},
                      Activation::LeakyRelu, rng);
  std::vector<double> obs(spec.obs_dim, 0.25), b(spec.act_dim, 0.1);
  std::vector<std::vector<double>> nb0 = {{0.9, -0.9}, {0.3, 0.3}};
  std::vector<std::vector<double>> nb1 = {{-0.2, 0.4}, {-0.8, 0.1}};
  CHECK(pn.compose(0, obs, b, nb0, 1.0).clamped == pn.compose(0, obs, b, nb1, 1.0).clamped);

  // Variant I: the perturbation ignores the base action entirely, so
  // a_i - b_i is independent of b_i.
  DecomJointPolicy pi(spec, PolicyMode::Deterministic, Variant::I, 1.0, {8},
                      Activation::LeakyRelu, rng);
  std::vector<double> b1(spec.act_dim, 0.1), b2(spec.act_dim, -0.4);
  auto c1 = pi.compose(1, obs, b1, {}, 1.0);
  auto c2 = pi.compose(1, obs, b2, {}, 1.0);
  for (int k = 0; k < spec.act_dim; ++k) {
    CHECK(c1.preclamp[k] - b1[k] == doctest::Approx(c2.preclamp[k] - b2[k]));
  }

  // Variant A with nonzero weights: sensitivity of a_i to a neighbor's base
  // action, measured through the recorded graph.
  DecomJointPolicy pa(spec, PolicyMode::Deterministic, Variant::A, 1.0, {8},
                      Activation::LeakyRelu, rng);
  Tape tape;
  auto bd = pa.bind(tape, false, false);
  std::vector<Var> base_rows(spec.n_agents);
  Tensor obs_row(1, spec.obs_dim, 0.25);
  std::vector<Var> obs_vars(spec.n_agents, tape.constant(obs_row));
  for (int i = 0; i < spec.n_agents; ++i) {
    Tensor br(1, spec.act_dim, 0.05 * (i + 1));
    base_rows[i] = tape.leaf(std::move(br), true);
  }
  Var g0 = pa.perturb_forward_on_tape(tape, bd, 0, obs_vars[0], base_rows);
  Var a0 = pa.compose_on_tape(tape, base_rows[0], g0);
  tape.backward(tape.sum_all(a0));
  // Neighbor 1 feeds agent 0's perturbation: nonzero path.
  double self_norm = 0.0, cross_norm = 0.0;
  for (double v : tape.grad(base_rows[0]).data) self_norm += v * v;
  for (double v : tape.grad(base_rows[1]).data) cross_norm += v * v;
  CHECK(self_norm > 0.0);
  CHECK(cross_norm > 0.0);
}

TEST_CASE("joint_act: exactly one broadcast round per call") {
  Rng rng(10);
  CcmgSpec spec = small_spec();
  DecomJointPolicy policy(spec, PolicyMode::Deterministic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  Rng act_rng(3);
  const long before = policy.broadcast_count();
  for (int k = 1; k <= 7; ++k) {
    policy.joint_act(random_obs(spec, act_rng), false, nullptr, nullptr, act_rng);
    CHECK(policy.broadcast_count() == before + k);
  }
}

TEST_CASE("soft_update_targets: delta 1 copies, halving blends geometrically") {
  Rng rng(11);
  CcmgSpec spec = small_spec(2, 3, 1);
  DecomJointPolicy policy(spec, PolicyMode::Deterministic, Variant::A, 1.0, {4},
                          Activation::LeakyRelu, rng);
  // Online at 1, targets at 0.
  for (int i = 0; i < 2; ++i) {
    for (auto* p : policy.base(i).net.params())
      for (double& v : p->data) v = 1.0;
    for (auto* p : policy.perturb(i).params())
      for (double& v : p->data) v = 1.0;
    for (auto* p : policy.base_target(i).params())
      for (double& v : p->data) v = 0.0;
    for (auto* p : policy.perturb_target(i).params())
      for (double& v : p->data) v = 0.0;
  }
  policy.soft_update_targets(0.5, 0.5);
  policy.soft_update_targets(0.5, 0.5);
  for (double v : flatten(policy.base_target(0).params())) CHECK(v == doctest::Approx(0.75));
  for (double v : flatten(policy.perturb_target(1).params())) CHECK(v == doctest::Approx(0.75));
  policy.soft_update_targets(1.0, 1.0);
  for (double v : flatten(policy.base_target(1).params())) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("checkpoint round-trip through the policy naming scheme") {
  Rng rng(12);
  CcmgSpec spec = small_spec();
  DecomJointPolicy policy(spec, PolicyMode::Deterministic, Variant::A, 1.0, {8},
                          Activation::LeakyRelu, rng);
  Checkpoint ckpt;
  policy.to_checkpoint(ckpt);
  CHECK(ckpt.has("base_0"));
  CHECK(ckpt.has("perturb_2"));
  CHECK(ckpt.has("base_1_target"));
  CHECK(ckpt.has("perturb_0_target"));

  Rng rng2(999);
  DecomJointPolicy other(spec, PolicyMode::Deterministic, Variant::A, 1.0, {8},
                         Activation::LeakyRelu, rng2);
  other.from_checkpoint(ckpt);
  Rng act_rng(1);
  std::vector<double> obs(spec.obs_dim, 0.3);
  auto a = policy.base_act(2, obs, false, nullptr, act_rng);
  auto b = other.base_act(2, obs, false, nullptr, act_rng);
  CHECK(a.action == b.action);

  // Shape mismatch rejected.
  Rng rng3(1);
  DecomJointPolicy smaller(small_spec(3, 4, 1), PolicyMode::Deterministic, Variant::A, 1.0, {8},
                           Activation::LeakyRelu, rng3);
  CHECK_THROWS(smaller.from_checkpoint(ckpt));
}

TEST_CASE("variant arity invariants hold for random parameter draws") {
  Rng rng(14);
  CcmgSpec spec = small_spec();
  for (int draw = 0; draw < 10; ++draw) {
    DecomJointPolicy pn(spec, PolicyMode::Deterministic, Variant::N, 1.0, {6},
                        Activation::LeakyRelu, rng);
    CHECK(pn.perturb_input_dim() == spec.obs_dim + spec.act_dim);
    DecomJointPolicy pi(spec, PolicyMode::Deterministic, Variant::I, 1.0, {6},
                        Activation::LeakyRelu, rng);
    CHECK(pi.perturb_input_dim() == spec.obs_dim);
    DecomJointPolicy pa(spec, PolicyMode::Deterministic, Variant::A, 1.0, {6},
                        Activation::LeakyRelu, rng);
    CHECK(pa.perturb_input_dim() == spec.obs_dim + spec.act_dim * 3);
  }
}
