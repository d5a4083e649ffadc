#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decom/checkpoint.hpp"
#include "decom/env.hpp"
#include "decom/mlp.hpp"
#include "decom/noise.hpp"
#include "decom/rng.hpp"

namespace decom {

enum class PolicyMode { Deterministic, Stochastic };

// Perturbation input arity: A sees (o_i, b_i, b_neighbors), N sees
// (o_i, b_i), I sees only o_i.
enum class Variant { A, N, I };

std::string to_string(Variant v);
std::string to_string(PolicyMode m);

// Per-agent base policy. Deterministic nets end in tanh and are scaled to
// the action box; stochastic nets output (raw_mean, raw_log_std) pairs with
// the mean squashed to the box and log_std clamped.
struct BasePolicy {
  Mlp net;
  PolicyMode mode = PolicyMode::Deterministic;
  double box_half = 1.0;

  // Box-squashed mean/action for a single observation row.
  std::vector<double> mean_action(const std::vector<double>& obs) const;
  std::vector<double> log_std(const std::vector<double>& obs) const;
  int act_dim() const;
};

struct BaseActResult {
  std::vector<double> action;
  std::optional<double> log_density;  // stochastic mode only
};

struct ComposeResult {
  std::vector<double> preclamp;
  std::vector<double> clamped;
};

// N base policies + N perturbation policies + the composition rule
// a_i = clamp(b_i + lambda * g_i(inputs per variant)), plus target copies.
class DecomJointPolicy {
 public:
  DecomJointPolicy(const CcmgSpec& spec, PolicyMode mode, Variant variant, double lambda,
                   const std::vector<int>& hidden, Activation hidden_act, Rng& init_rng);

  int n_agents() const { return n_agents_; }
  int act_dim() const { return act_dim_; }
  int obs_dim() const { return obs_dim_; }
  Variant variant() const { return variant_; }
  PolicyMode mode() const { return mode_; }
  double lambda() const { return lambda_; }
  void set_lambda(double l);
  double box_half() const { return box_half_; }
  double action_low() const { return action_low_; }
  double action_high() const { return action_high_; }
  int max_degree() const { return max_degree_; }
  const std::vector<std::vector<int>>& neighbors() const { return neighbors_; }

  BasePolicy& base(int i) { return base_[i]; }
  const BasePolicy& base(int i) const { return base_[i]; }
  Mlp& perturb(int i) { return perturb_[i]; }
  const Mlp& perturb(int i) const { return perturb_[i]; }
  Mlp& base_target(int i) { return base_target_[i]; }
  const Mlp& base_target(int i) const { return base_target_[i]; }
  Mlp& perturb_target(int i) { return perturb_target_[i]; }
  const Mlp& perturb_target(int i) const { return perturb_target_[i]; }

  // Base action selection for one agent. Deterministic mode adds OU noise
  // when exploring; stochastic mode draws reparameterized Gaussian samples
  // and reports the log density.
  BaseActResult base_act(int agent, const std::vector<double>& obs, bool explore,
                         OuProcess* noise, Rng& rng) const;

  // Composition rule. neighbor_base holds this agent's neighbors' base
  // actions in ascending-id order (canonical); missing slots up to
  // max_degree are zero-padded internally.
  ComposeResult compose(int agent, const std::vector<double>& obs,
                        const std::vector<double>& base_action,
                        const std::vector<std::vector<double>>& neighbor_base,
                        double lambda) const;

  struct JointActResult {
    std::vector<std::vector<double>> base;
    std::vector<std::vector<double>> preclamp;
    std::vector<std::vector<double>> action;
    std::vector<double> log_density;  // per agent; 0 in deterministic mode
  };

  // Two-phase protocol: every base action is computed first, broadcast once,
  // then each agent applies its perturbation. No agent ever sees another's
  // final action. Stochastic mode adds OU noise to the perturbation output
  // while exploring; deterministic mode adds it to the base action.
  JointActResult joint_act(const std::vector<std::vector<double>>& obs, bool explore,
                           std::vector<OuProcess>* base_noise,
                           std::vector<OuProcess>* perturb_noise, Rng& rng) const;

  // Same protocol through the target copies (no exploration noise;
  // stochastic bases sample from the target distribution).
  JointActResult joint_act_target(const std::vector<std::vector<double>>& obs, Rng& rng) const;

  // theta' <- delta*theta + (1-delta)*theta' and likewise for phi'.
  void soft_update_targets(double delta_base, double delta_perturb);

  // --- recorded (tape) helpers used by the trainer and solver ----------
  struct TapeBindings {
    std::vector<Mlp::Binding> base, perturb;
  };
  TapeBindings bind(Tape& tape, bool base_grad, bool perturb_grad) const;

  struct BaseHead {
    Var mean;     // box-squashed mean (or deterministic action)
    Var log_std;  // -1 in deterministic mode
  };
  BaseHead base_forward_on_tape(Tape& tape, const TapeBindings& bd, int agent, Var obs) const;

  // Perturbation forward with the variant-specific input assembly;
  // base_rows[j] must hold agent j's base-action rows (batch x act_dim).
  Var perturb_forward_on_tape(Tape& tape, const TapeBindings& bd, int agent, Var obs,
                              const std::vector<Var>& base_rows) const;

  // b + lambda * g (pre-clamp).
  Var compose_on_tape(Tape& tape, Var base_rows, Var perturb_out) const;

  // Diagonal-Gaussian log density of fixed samples under the recorded head.
  Var log_density_on_tape(Tape& tape, const BaseHead& head, const Tensor& samples) const;

  // Number of one-round base-action broadcasts performed so far.
  long broadcast_count() const { return broadcast_count_; }

  // --- checkpoint names: base_i, perturb_i, base_i_target, ... ---------
  void to_checkpoint(Checkpoint& ckpt) const;
  void from_checkpoint(const Checkpoint& ckpt);

  std::vector<Tensor*> base_params();
  std::vector<Tensor*> perturb_params();
  std::vector<const Tensor*> perturb_params() const;

  int perturb_input_dim() const { return perturb_in_dim_; }

 private:
  std::vector<double> perturb_input(int agent, const std::vector<double>& obs,
                                    const std::vector<double>& base_action,
                                    const std::vector<std::vector<double>>& neighbor_base) const;

  int n_agents_, act_dim_, obs_dim_;
  double action_low_, action_high_, box_half_;
  PolicyMode mode_;
  Variant variant_;
  double lambda_;
  std::vector<std::vector<int>> neighbors_;
  int max_degree_ = 0;
  int perturb_in_dim_ = 0;
  std::vector<BasePolicy> base_;
  std::vector<Mlp> perturb_;
  std::vector<Mlp> base_target_, perturb_target_;
  mutable long broadcast_count_ = 0;
};

}  // namespace decom
