#pragma once

#include <span>
#include <vector>

#include "decom/mlp.hpp"
#include "decom/optim.hpp"
#include "decom/policy.hpp"
#include "decom/replay.hpp"

namespace decom {

// Centralized action-value function over (global state, joint action), with
// an optional one-hot cost-index channel so several cost streams of similar
// scale can share one network. Target copies are updated only through
// soft_update.
class CentralCritic {
 public:
  CentralCritic(int state_dim, int joint_action_dim, int onehot_dim,
                const std::vector<int>& hidden, Activation hidden_act, Rng& rng);

  int input_dim() const { return state_dim_ + action_dim_ + onehot_dim_; }
  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int onehot_dim() const { return onehot_dim_; }

  // Scalar estimate for one (state, joint action) pair. cost_index selects
  // the one-hot channel; pass -1 when the critic has none.
  double q_value(std::span<const double> state, std::span<const double> joint_action,
                 int cost_index = -1) const;

  // Batched raw forwards; rows follow assemble_input's layout.
  Tensor forward(const Tensor& input) const { return net.forward(input); }
  Tensor forward_target(const Tensor& input) const { return target.forward(input); }

  Tensor assemble_input(const std::vector<const Transition*>& batch, bool next_state,
                        const std::vector<std::vector<double>>& joint_actions,
                        int cost_index) const;
  std::vector<double> assemble_row(std::span<const double> state,
                                   std::span<const double> joint_action, int cost_index) const;

  // target <- delta * online + (1 - delta) * target.
  void soft_update(double delta);

  Mlp net;
  Mlp target;

 private:
  int state_dim_, action_dim_, onehot_dim_;
};

// Draws a' from the target policy at the batch's next states (no
// exploration noise) and returns the concatenated joint actions per sample.
std::vector<std::vector<double>> target_joint_actions(const DecomJointPolicy& policy,
                                                      const std::vector<const Transition*>& batch,
                                                      Rng& rng);

// Mean squared TD error of Eq-style targets q = r + gamma * Q'(s', a') with
// a' from the target policy; targets are constants (no gradient flows into
// them). Throws on an empty batch.
double reward_td_loss(const CentralCritic& critic, const std::vector<const Transition*>& batch,
                      const DecomJointPolicy& target_policy, double gamma, Rng& rng);

// Same with cost stream j in place of the reward.
double cost_td_loss(const CentralCritic& critic, int cost_index,
                    const std::vector<const Transition*>& batch,
                    const DecomJointPolicy& target_policy, double gamma, Rng& rng);

struct TdUpdateStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

// One recorded minimization step of mean squared error against constant
// targets, applied through Adam.
TdUpdateStats td_update_raw(CentralCritic& critic, const Tensor& input,
                            const std::vector<double>& targets, AdamState& adam);

// One recorded TD minimization step applied through Adam. cost_index < 0
// selects the reward channel; shaped_omega folds omega-weighted costs into
// the reward target (fixed-penalty baseline).
TdUpdateStats td_update(CentralCritic& critic, int cost_index,
                        const std::vector<const Transition*>& batch,
                        const DecomJointPolicy& target_policy, double gamma, AdamState& adam,
                        Rng& rng, double shaped_omega = 0.0);

// Single step for a shared cost critic: rows for every cost stream are
// stacked with their one-hot channels and minimized jointly.
TdUpdateStats td_update_shared(CentralCritic& critic, int cost_count,
                               const std::vector<const Transition*>& batch,
                               const DecomJointPolicy& target_policy, double gamma,
                               AdamState& adam, Rng& rng);

}  // namespace decom
