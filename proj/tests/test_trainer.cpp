#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "decom/fdcheck.hpp"
#include "decom/metrics.hpp"
#include "decom/optim.hpp"
#include "decom/trainer.hpp"

using namespace decom;

namespace {

EnvConfig small_env() {
  EnvConfig cfg;
  cfg.name = "ctc_safe";
  cfg.n_hunters = 2;
  cfg.n_banks = 1;
  cfg.n_treasures = 2;
  cfg.n_regions = 1;
  cfg.fixed_regions = {{{0.0, 0.0, 0.4}}};
  cfg.episode_len = 25;
  cfg.shaping_weight = 0.1;
  return cfg;
}

AlgoConfig small_algo(Algo algo = Algo::DecomA) {
  AlgoConfig a;
  a.algo = algo;
  a.mode = PolicyMode::Deterministic;
  a.constraint.bounds = {0.6};
  a.constraint.inner_iters = 1;
  a.constraint.step = 0.01;
  a.constraint.clip_norm = 0.5;
  a.batch_size = 32;
  a.buffer_capacity = 4096;
  a.train_every = 2;
  a.actor_hidden = {12};
  a.critic_hidden = {12};
  return a;
}

RunConfig small_run(std::uint64_t seed = 1, const std::string& out = "") {
  RunConfig r;
  r.episodes = 8;
  r.eval_interval = 4;
  r.eval_episodes = 2;
  r.seed = seed;
  r.out_dir = out;
  r.write_outputs = !out.empty();
  return r;
}

// Synthetic batch over a fake environment signature, for theta-update tests.
struct SyntheticWorld {
  CcmgSpec spec;
  std::vector<Transition> storage;
  std::vector<const Transition*> batch;

  SyntheticWorld(int n_agents, PolicyMode mode, const DecomJointPolicy* policy, int n_samples,
                 Rng& rng) {
    spec.n_agents = n_agents;
    spec.cost_count = 1;
    spec.obs_dim = 3;
    spec.act_dim = 1;
    spec.action_low = -1.0;
    spec.action_high = 1.0;
    spec.episode_len = 4;
    spec.gamma = 0.9;
    spec.neighbors = full_neighbor_graph(n_agents);
    for (int s = 0; s < n_samples; ++s) {
      Transition tr;
      tr.state.assign(4, 0.0);
      for (double& v : tr.state) v = rng.uniform(-1, 1);
      tr.next_state = tr.state;
      tr.obs.assign(n_agents, std::vector<double>(3));
      for (auto& o : tr.obs)
        for (double& v : o) v = rng.uniform(-1, 1);
      tr.next_obs = tr.obs;
      for (int i = 0; i < n_agents; ++i) {
        double b;
        if (mode == PolicyMode::Stochastic && policy != nullptr) {
          // Stored base actions near the current means keep the frozen
          // reparameterization noises in range.
          b = policy->base(i).mean_action(tr.obs[i])[0] + 0.2 * rng.normal();
        } else {
          b = rng.uniform(-0.8, 0.8);
        }
        tr.base.push_back(b);
        tr.action.push_back(std::clamp(b + 0.05 * rng.normal(), -1.0, 1.0));
      }
      tr.reward = rng.uniform(-1, 1);
      tr.costs = {rng.uniform(0.0, 1.0)};
      tr.prefix_costs = tr.costs;
      tr.t = s % spec.episode_len;
      storage.push_back(std::move(tr));
    }
    for (auto& tr : storage) batch.push_back(&tr);
  }
};

}  // namespace

TEST_CASE("replay buffer: capacity, distinct batches, oldest-first overwrite") {
  ReplayBuffer buf(5);
  Rng rng(1);
  for (int k = 0; k < 12; ++k) {
    Transition tr;
    tr.reward = k;
    buf.push(std::move(tr));
    CHECK(buf.size() <= 5);
  }
  // After 12 pushes into capacity 5, entries 7..11 remain.
  std::vector<int> seen;
  for (std::size_t i = 0; i < buf.size(); ++i) seen.push_back(static_cast<int>(buf.at(i).reward));
  std::sort(seen.begin(), seen.end());
  CHECK(seen == std::vector<int>{7, 8, 9, 10, 11});

  for (int trial = 0; trial < 200; ++trial) {
    auto batch = buf.sample(4, rng);
    std::vector<const Transition*> sorted = batch;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
  CHECK_THROWS(buf.sample(6, rng));
  CHECK_THROWS(buf.sample(0, rng));
  CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("collect_episode stores exactly T transitions with oracle-checked sums") {
  auto env = make_env(small_env());
  Trainer trainer(std::move(env), small_algo(), small_run(3));
  EpisodeStats stats = trainer.collect_episode(true);
  CHECK(stats.steps == 25);
  CHECK(trainer.buffer().size() == 25);

  // Discounted sums recomputed from the stored transitions.
  double disc = 0.0, g = 1.0, disc_c = 0.0, gc = 1.0;
  for (std::size_t i = 0; i < trainer.buffer().size(); ++i) {
    const Transition& tr = trainer.buffer().at(i);
    disc += g * tr.reward;
    g *= trainer.algo_config().gamma;
    disc_c += gc * tr.costs[0];
    gc *= trainer.algo_config().gamma_cost;
    CHECK(tr.t == static_cast<int>(i));
  }
  CHECK(stats.reward_discounted == doctest::Approx(disc).epsilon(1e-12));
  CHECK(stats.cost_discounted[0] == doctest::Approx(disc_c).epsilon(1e-12));

  // Prefix sums are inclusive running cost totals.
  double prefix = 0.0;
  for (std::size_t i = 0; i < trainer.buffer().size(); ++i) {
    prefix += trainer.buffer().at(i).costs[0];
    CHECK(trainer.buffer().at(i).prefix_costs[0] == doctest::Approx(prefix).epsilon(1e-12));
  }
}

TEST_CASE("collect_episode: noise-free rollouts are reproducible") {
  auto gather = [] {
    Trainer trainer(make_env(small_env()), small_algo(), small_run(77));
    EpisodeStats s = trainer.collect_episode(false);
    return s.reward_discounted;
  };
  CHECK(gather() == gather());
}

TEST_CASE("update counters match the algorithm line structure") {
  AlgoConfig algo = small_algo();
  algo.constraint.inner_iters = 2;  // W = 2
  Trainer trainer(make_env(small_env()), algo, small_run(5));
  for (int k = 0; k < 3; ++k) trainer.collect_episode(true);
  trainer.update_block();
  trainer.update_block();
  const UpdateCounters& c = trainer.counters();
  CHECK(c.update_blocks == 2);
  CHECK(c.reward_critic_steps == 2);
  CHECK(c.cost_critic_steps == 2);  // M = 1
  CHECK(c.theta_steps == 2);
  CHECK(c.phi_steps == 4);  // W per block
  CHECK(c.soft_updates == 2);
  CHECK(c.inner_loop_calls == 2);
}

TEST_CASE("fp and la variants never invoke the constraint inner loop") {
  for (Algo algo : {Algo::FixedPenalty, Algo::Lagrangian}) {
    AlgoConfig a = small_algo(algo);
    a.fp_omega = algo == Algo::FixedPenalty ? -0.1 : 0.0;
    Trainer trainer(make_env(small_env()), a, small_run(6));
    for (int k = 0; k < 3; ++k) trainer.collect_episode(true);
    trainer.update_block();
    CHECK(trainer.counters().inner_loop_calls == 0);
    CHECK(trainer.counters().phi_steps == 0);
    CHECK(trainer.counters().theta_steps == 1);
    if (algo == Algo::FixedPenalty) {
      CHECK(trainer.counters().cost_critic_steps == 0);
    } else {
      CHECK(trainer.counters().cost_critic_steps == 1);
    }
  }
}

TEST_CASE("fp shaped reward arithmetic") {
  CHECK(Trainer::fp_shaped_reward(1.0, std::vector<double>{2.0, 3.0}, 0.0) == 1.0);
  CHECK(Trainer::fp_shaped_reward(1.0, std::vector<double>{2.0, 3.0}, -0.1) ==
        doctest::Approx(0.5));
  CHECK(Trainer::fp_shaped_reward(0.0, std::vector<double>{1.0}, -100.0) ==
        doctest::Approx(-100.0));
}

TEST_CASE("lagrangian multiplier update projects onto the nonnegative orthant") {
  std::vector<double> m = {0.0, 1.0, 0.0};
  Trainer::lagrangian_update(m, std::vector<double>{0.0, 0.0, 0.0}, 0.1);
  CHECK(m == std::vector<double>{0.0, 1.0, 0.0});
  Trainer::lagrangian_update(m, std::vector<double>{-2.0, 0.5, -0.1}, 0.1);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == doctest::Approx(1.05));
  CHECK(m[2] == 0.0);
}

TEST_CASE("zero costs with positive bounds yield a zero phi gradient every block") {
  EnvConfig env = small_env();
  AlgoConfig algo = small_algo();
  algo.constraint.bounds = {5.0};  // far above anything the critic can emit early
  Trainer trainer(make_env(env), algo, small_run(9));
  for (int k = 0; k < 3; ++k) trainer.collect_episode(true);
  const auto phi_before = flatten(trainer.policy().perturb_params());
  for (int k = 0; k < 4; ++k) trainer.update_block();
  // Hinge inactive: phi untouched by the inner loop.
  CHECK(flatten(trainer.policy().perturb_params()) == phi_before);
}

TEST_CASE("theta gradient matches finite differences (deterministic mode)") {
  Rng rng(21);
  CcmgSpec spec;
  spec.n_agents = 2;
  spec.cost_count = 1;
  spec.obs_dim = 3;
  spec.act_dim = 1;
  spec.action_low = -1.0;
  spec.action_high = 1.0;
  spec.episode_len = 4;
  spec.gamma = 0.9;
  spec.neighbors = full_neighbor_graph(2);
  DecomJointPolicy policy(spec, PolicyMode::Deterministic, Variant::A, 1.0, {6},
                          Activation::LeakyRelu, rng);
  CentralCritic critic(4, 2, 0, {8}, Activation::Tanh, rng);
  SyntheticWorld world(2, PolicyMode::Deterministic, nullptr, 6, rng);

  ThetaProblem prob;
  prob.policy = &policy;
  prob.reward_critic = &critic;
  const ThetaContext ctx = make_theta_context(prob, world.batch);
  std::vector<double> analytic = flatten(theta_gradient(prob, world.batch, ctx));

  std::vector<double> flat = flatten(policy.base_params());
  auto params = policy.base_params();
  auto f = [&](std::span<const double> p) {
    unflatten(std::vector<double>(p.begin(), p.end()), params);
    const double v = theta_surrogate_value(prob, world.batch, ctx);
    return v;
  };
  std::vector<double> numeric = central_finite_differences(f, flat, 1e-5);
  unflatten(flat, params);
  CHECK(compare_gradients(analytic, numeric).max_rel_err <= 1e-3);
}

TEST_CASE("theta gradient matches finite differences (stochastic mode)") {
  Rng rng(22);
  CcmgSpec spec;
  spec.n_agents = 2;
  spec.cost_count = 1;
  spec.obs_dim = 3;
  spec.act_dim = 1;
  spec.action_low = -1.0;
  spec.action_high = 1.0;
  spec.episode_len = 4;
  spec.gamma = 0.9;
  spec.neighbors = full_neighbor_graph(2);
  DecomJointPolicy policy(spec, PolicyMode::Stochastic, Variant::A, 1.0, {6},
                          Activation::LeakyRelu, rng);
  CentralCritic critic(4, 2, 0, {8}, Activation::Tanh, rng);
  SyntheticWorld world(2, PolicyMode::Stochastic, &policy, 6, rng);

  ThetaProblem prob;
  prob.policy = &policy;
  prob.reward_critic = &critic;
  const ThetaContext ctx = make_theta_context(prob, world.batch);
  std::vector<double> analytic = flatten(theta_gradient(prob, world.batch, ctx));

  std::vector<double> flat = flatten(policy.base_params());
  auto params = policy.base_params();
  auto f = [&](std::span<const double> p) {
    unflatten(std::vector<double>(p.begin(), p.end()), params);
    return theta_surrogate_value(prob, world.batch, ctx);
  };
  std::vector<double> numeric = central_finite_differences(f, flat, 1e-5);
  unflatten(flat, params);
  CHECK(compare_gradients(analytic, numeric).max_rel_err <= 1e-3);
}

TEST_CASE("gradient aggregation: cross-agent paths mirror the variant arity") {
  Rng rng(23);
  CcmgSpec spec;
  spec.n_agents = 3;
  spec.cost_count = 1;
  spec.obs_dim = 3;
  spec.act_dim = 1;
  spec.action_low = -1.0;
  spec.action_high = 1.0;
  spec.episode_len = 4;
  spec.gamma = 0.9;
  spec.neighbors = full_neighbor_graph(3);

  CentralCritic critic(4, 3, 0, {8}, Activation::Tanh, rng);
  SyntheticWorld world(3, PolicyMode::Deterministic, nullptr, 5, rng);

  // Variant N: every action path touches only its own base parameters.
  DecomJointPolicy pn(spec, PolicyMode::Deterministic, Variant::N, 1.0, {6},
                      Activation::LeakyRelu, rng);
  ThetaProblem prob_n;
  prob_n.policy = &pn;
  prob_n.reward_critic = &critic;
  auto mat_n = gradient_aggregation_check(prob_n, world.batch);
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m)
      if (i != m) CHECK(mat_n[i][m] == 0.0);

  // Variant A: some neighbor path must carry gradient.
  DecomJointPolicy pa(spec, PolicyMode::Deterministic, Variant::A, 1.0, {6},
                      Activation::LeakyRelu, rng);
  ThetaProblem prob_a;
  prob_a.policy = &pa;
  prob_a.reward_critic = &critic;
  auto mat_a = gradient_aggregation_check(prob_a, world.batch);
  double off_diag = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 3; ++m)
      if (i != m) off_diag += mat_a[i][m];
  CHECK(off_diag > 0.0);
  for (int i = 0; i < 3; ++i) CHECK(mat_a[i][i] > 0.0);

  // Single agent: the matrix is 1x1.
  CcmgSpec solo = spec;
  solo.n_agents = 1;
  solo.neighbors = {{}};
  DecomJointPolicy p1(solo, PolicyMode::Deterministic, Variant::A, 1.0, {6},
                      Activation::LeakyRelu, rng);
  CentralCritic critic1(4, 1, 0, {8}, Activation::Tanh, rng);
  SyntheticWorld world1(1, PolicyMode::Deterministic, nullptr, 5, rng);
  ThetaProblem prob_1;
  prob_1.policy = &p1;
  prob_1.reward_critic = &critic1;
  auto mat_1 = gradient_aggregation_check(prob_1, world1.batch);
  CHECK(mat_1.size() == 1);
  CHECK(mat_1[0].size() == 1);
}

TEST_CASE("train: zero episodes writes a checkpoint and header-only metrics") {
  const std::string out = (std::filesystem::temp_directory_path() / "decom_train0").string();
  std::filesystem::remove_all(out);
  RunConfig run = small_run(1, out);
  run.episodes = 0;
  Trainer trainer(make_env(small_env()), small_algo(), run);
  trainer.train();
  CHECK(std::filesystem::exists(out + "/checkpoint_final.ckpt"));
  std::ifstream is(out + "/metrics.csv");
  REQUIRE(is.good());
  std::string header, extra;
  std::getline(is, header);
  CHECK(header.rfind("episode,seed,variant,", 0) == 0);
  CHECK(!std::getline(is, extra));
  std::filesystem::remove_all(out);
}

TEST_CASE("train: same config and seed produce identical metrics bytes") {
  auto run_once = [](const std::string& out) {
    std::filesystem::remove_all(out);
    Trainer trainer(make_env(small_env()), small_algo(), small_run(42, out));
    trainer.train();
    std::ifstream is(out + "/metrics.csv");
    std::string all((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::filesystem::remove_all(out);
    return all;
  };
  const std::string a = run_once((std::filesystem::temp_directory_path() / "decom_da").string());
  const std::string b = run_once((std::filesystem::temp_directory_path() / "decom_db").string());
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("checkpoint round-trip restores the full trainer state surface") {
  Trainer trainer(make_env(small_env()), small_algo(), small_run(31));
  for (int k = 0; k < 3; ++k) trainer.collect_episode(true);
  trainer.update_block();
  Checkpoint ckpt = trainer.make_checkpoint();
  CHECK(ckpt.has("critic_r"));
  CHECK(ckpt.has("critic_c_1"));
  CHECK(ckpt.has("critic_c_1_target"));

  Trainer other(make_env(small_env()), small_algo(), small_run(99));
  other.load_from_checkpoint(ckpt);
  EpisodeStats a = trainer.rollout_eval(1234);
  EpisodeStats b = other.rollout_eval(1234);
  CHECK(a.reward_discounted == b.reward_discounted);
  CHECK(a.cost_discounted[0] == b.cost_discounted[0]);
}

TEST_CASE("config validation reports offending fields") {
  AlgoConfig a = small_algo();
  a.constraint.bounds = {0.6, 0.8};
  try {
    a.validate(1);
    FAIL("expected a bounds-count error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("algo.bounds") != std::string::npos);
  }
  AlgoConfig b = small_algo();
  b.fp_omega = 0.5;
  CHECK_THROWS(b.validate(1));
  AlgoConfig c = small_algo();
  c.batch_size = 0;
  CHECK_THROWS(c.validate(1));
  AlgoConfig d = small_algo();
  d.gamma = 1.5;
  CHECK_THROWS(d.validate(1));
}
