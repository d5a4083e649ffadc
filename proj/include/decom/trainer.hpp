#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "decom/constraint.hpp"
#include "decom/critic.hpp"
#include "decom/env.hpp"
#include "decom/policy.hpp"
#include "decom/replay.hpp"
#include "decom/schedule.hpp"

namespace decom {

enum class Algo { DecomA, DecomN, DecomI, FixedPenalty, Lagrangian };

std::string to_string(Algo a);
Algo algo_from_string(const std::string& s);

struct AlgoConfig {
  Algo algo = Algo::DecomA;
  PolicyMode mode = PolicyMode::Deterministic;
  double fp_omega = 0.0;  // <= 0; FP folds omega-weighted costs into the reward
  double la_lr = 0.01;    // Lagrangian multiplier ascent rate
  double lambda = 1.0;
  ConstraintSpec constraint;
  double gamma = 0.99;
  double gamma_cost = 0.99;
  int batch_size = 1024;
  std::int64_t buffer_capacity = 1000000;
  int train_every = 12;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};
  double lr_base = 0.001;
  double lr_critic_r = 0.001;
  double lr_critic_c = 0.003;
  double delta_base = 0.01;
  double delta_critic_r = 0.01;
  double delta_pert_init = 0.05;
  double delta_pert_final = 0.01;
  double delta_cc_init = 0.05;
  double delta_cc_final = 0.01;
  double target_decay_fraction = 0.2;  // span of the delta decay, as a fraction of episodes
  bool shared_cost_critic = false;
  double ou_rate = 0.15;
  double ou_sigma = 0.2;
  Activation hidden_act = Activation::LeakyRelu;
  ScheduleSet schedules;
  bool use_schedules = false;

  void validate(int cost_count) const;  // throws with field paths
  Variant variant() const;
  bool is_decom() const {
    return algo == Algo::DecomA || algo == Algo::DecomN || algo == Algo::DecomI;
  }
};

struct RunConfig {
  std::int64_t episodes = 10000;
  int eval_interval = 500;
  int eval_episodes = 20;
  std::uint64_t seed = 0;
  std::string out_dir;
  bool write_outputs = true;

  void validate() const;
};

struct EpisodeStats {
  double reward_sum = 0.0;
  double reward_discounted = 0.0;
  std::vector<double> cost_sums;
  std::vector<double> cost_discounted;
  int steps = 0;
};

// Instrumented Alg-1/Alg-2 line structure: one update block performs one
// reward-critic step, M (or one shared) cost-critic steps, one theta step,
// W phi steps, and one soft update of every target.
struct UpdateCounters {
  long update_blocks = 0;
  long reward_critic_steps = 0;
  long cost_critic_steps = 0;
  long theta_steps = 0;
  long phi_steps = 0;
  long soft_updates = 0;
  long inner_loop_calls = 0;
};

struct EvalPoint {
  std::int64_t episode = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  std::vector<double> cost_means;   // discounted cost returns, comparable to D_j
  std::vector<double> violations;   // max(0, cost_mean - D_j)
  double td_loss_r = 0.0;
  double td_loss_c = 0.0;
  double phi_loss = 0.0;
  double grad_norm_theta = 0.0;
  double grad_norm_phi = 0.0;
};

// ---------------------------------------------------------------------------
// Theta update machinery (Theorem-2 surrogate), shared by the trainer and
// the verification suite.

// Constants frozen at the current theta so the surrogate is a well-defined
// function of theta alone (finite differences re-evaluate it with these
// fixed): per-agent reparameterization noises and the REINFORCE weights.
struct ThetaContext {
  std::vector<Tensor> xi;         // [L, act_dim] per agent; stochastic mode
  std::vector<double> q_weight;   // Q(s_l, a_l) at stored actions, with penalties applied
};

struct ThetaProblem {
  const DecomJointPolicy* policy = nullptr;
  const CentralCritic* reward_critic = nullptr;
  const std::vector<CentralCritic*>* cost_critics = nullptr;  // optional (Lagrangian)
  bool shared_cost_critic = false;
  std::vector<double> multipliers;  // Lagrangian weights; empty otherwise
};

ThetaContext make_theta_context(const ThetaProblem& prob,
                                const std::vector<const Transition*>& batch);

// Surrogate objective value at the current theta under the frozen context.
double theta_surrogate_value(const ThetaProblem& prob,
                             const std::vector<const Transition*>& batch,
                             const ThetaContext& ctx);

// Reverse-mode gradient of the surrogate w.r.t. every base-policy parameter
// (concatenated per agent in id order).
std::vector<Tensor> theta_gradient(const ThetaProblem& prob,
                                   const std::vector<const Transition*>& batch,
                                   const ThetaContext& ctx, double* value_out = nullptr);

// One ascent step through Adam; returns the pre-step gradient norm.
double theta_ascent_step(DecomJointPolicy& policy, const ThetaProblem& prob,
                         const std::vector<const Transition*>& batch, AdamState& adam);

// ||d surrogate / d theta_i|| restricted to the action path of agent m
// (all other agents' actions held at their stored values). Row i, column m.
std::vector<std::vector<double>> gradient_aggregation_check(
    const ThetaProblem& prob, const std::vector<const Transition*>& batch);

// ---------------------------------------------------------------------------

class Trainer {
 public:
  Trainer(std::unique_ptr<CcmgEnv> env, AlgoConfig algo, RunConfig run);

  // Full training run: episode loop, cadenced update blocks, soft target
  // updates, periodic evaluation with metrics rows and checkpoints.
  void train();

  EpisodeStats collect_episode(bool explore);
  void update_block();
  EvalPoint evaluate(std::int64_t episode_index);

  static double fp_shaped_reward(double reward, std::span<const double> costs, double omega);
  // multipliers_j <- max(0, multipliers_j + alpha * excess_j) with
  // excess_j = Jc_estimate_j - D_j.
  static void lagrangian_update(std::vector<double>& multipliers,
                                std::span<const double> excess, double alpha);

  const UpdateCounters& counters() const { return counters_; }
  const std::vector<EvalPoint>& history() const { return history_; }
  DecomJointPolicy& policy() { return *policy_; }
  const DecomJointPolicy& policy() const { return *policy_; }
  CcmgEnv& env() { return *env_; }
  ReplayBuffer& buffer() { return buffer_; }
  const std::vector<double>& multipliers() const { return multipliers_; }
  const AlgoConfig& algo_config() const { return algo_; }
  std::int64_t episodes_collected() const { return episode_index_; }

  ThetaProblem theta_problem() const;

  Checkpoint make_checkpoint() const;
  void load_from_checkpoint(const Checkpoint& ckpt);

  // Noise-free rollout under the current policy from a seeded reset.
  EpisodeStats rollout_eval(std::uint64_t env_seed);

 private:
  double delta_perturb_at(std::int64_t episode) const;
  double delta_cost_critic_at(std::int64_t episode) const;
  void apply_schedules();
  void write_outputs_if_due(std::int64_t episode_index, bool force);

  std::unique_ptr<CcmgEnv> env_;
  AlgoConfig algo_;
  RunConfig run_;
  std::unique_ptr<DecomJointPolicy> policy_;
  std::unique_ptr<CentralCritic> reward_critic_;
  std::vector<std::unique_ptr<CentralCritic>> cost_critics_;
  std::vector<CentralCritic*> cost_critic_ptrs_;
  ReplayBuffer buffer_;
  Rng rng_;
  std::vector<OuProcess> base_noise_, perturb_noise_;
  AdamState adam_reward_, adam_theta_;
  std::vector<AdamState> adam_costs_;
  std::vector<double> multipliers_;
  UpdateCounters counters_;
  std::vector<EvalPoint> history_;
  std::int64_t episode_index_ = 0;
  double last_td_r_ = 0.0, last_td_c_ = 0.0, last_phi_loss_ = 0.0;
  double last_gn_theta_ = 0.0, last_gn_phi_ = 0.0;
};

}  // namespace decom
