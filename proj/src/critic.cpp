#include "decom/critic.hpp"

#include <stdexcept>

namespace decom {

CentralCritic::CentralCritic(int state_dim, int joint_action_dim, int onehot_dim,
                             const std::vector<int>& hidden, Activation hidden_act, Rng& rng)
    : state_dim_(state_dim), action_dim_(joint_action_dim), onehot_dim_(onehot_dim) {
  if (state_dim <= 0 || joint_action_dim <= 0 || onehot_dim < 0) {
    throw std::invalid_argument("CentralCritic: bad dimensions");
  }
  net = Mlp::make(input_dim(), hidden, 1, hidden_act, Activation::Identity, rng);
  target = net;
}

std::vector<double> CentralCritic::assemble_row(std::span<const double> state,
                                                std::span<const double> joint_action,
                                                int cost_index) const {
  if (static_cast<int>(state.size()) != state_dim_ ||
      static_cast<int>(joint_action.size()) != action_dim_) {
    throw std::invalid_argument("CentralCritic: input dim mismatch (state " +
                                std::to_string(state.size()) + ", action " +
                                std::to_string(joint_action.size()) + ")");
  }
  if (onehot_dim_ > 0 && (cost_index < 0 || cost_index >= onehot_dim_)) {
    throw std::invalid_argument("CentralCritic: cost index out of range");
  }
  std::vector<double> row;
  row.reserve(input_dim());
  row.insert(row.end(), state.begin(), state.end());
  row.insert(row.end(), joint_action.begin(), joint_action.end());
  for (int k = 0; k < onehot_dim_; ++k) row.push_back(k == cost_index ? 1.0 : 0.0);
  return row;
}

double CentralCritic::q_value(std::span<const double> state, std::span<const double> joint_action,
                              int cost_index) const {
  Tensor out = net.forward(Tensor::row(assemble_row(state, joint_action, cost_index)));
  return out.data[0];
}

Tensor CentralCritic::assemble_input(const std::vector<const Transition*>& batch, bool next_state,
                                     const std::vector<std::vector<double>>& joint_actions,
                                     int cost_index) const {
  if (batch.empty()) throw std::invalid_argument("CentralCritic: empty batch");
  const int m = static_cast<int>(batch.size());
  Tensor input(m, input_dim());
  for (int l = 0; l < m; ++l) {
    const std::vector<double>& s = next_state ? batch[l]->next_state : batch[l]->state;
    const std::vector<double> row = assemble_row(s, joint_actions[l], cost_index);
    for (int c = 0; c < input_dim(); ++c) input.at(l, c) = row[c];
  }
  return input;
}

void CentralCritic::soft_update(double delta) { decom::soft_update(target, net, delta); }

std::vector<std::vector<double>> target_joint_actions(const DecomJointPolicy& policy,
                                                      const std::vector<const Transition*>& batch,
                                                      Rng& rng) {
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Transition* tr : batch) {
    auto act = policy.joint_act_target(tr->next_obs, rng);
    std::vector<double> joint;
    joint.reserve(policy.n_agents() * policy.act_dim());
    for (const auto& a : act.action) joint.insert(joint.end(), a.begin(), a.end());
    out.push_back(std::move(joint));
  }
  return out;
}

namespace {

std::vector<double> td_targets(const CentralCritic& critic, int cost_index,
                               const std::vector<const Transition*>& batch,
                               const DecomJointPolicy& target_policy, double gamma, Rng& rng,
                               double shaped_omega) {
  const auto next_actions = target_joint_actions(target_policy, batch, rng);
  const Tensor next_in = critic.assemble_input(batch, true, next_actions, cost_index);
  const Tensor next_q = critic.forward_target(next_in);
  std::vector<double> targets(batch.size());
  for (std::size_t l = 0; l < batch.size(); ++l) {
    double channel;
    if (cost_index >= 0) {
      channel = batch[l]->costs[cost_index];
    } else {
      channel = batch[l]->reward;
      if (shaped_omega != 0.0) {
        for (double c : batch[l]->costs) channel += shaped_omega * c;
      }
    }
    targets[l] = channel + gamma * next_q.data[l];
  }
  return targets;
}

std::vector<std::vector<double>> stored_joint_actions(
    const std::vector<const Transition*>& batch) {
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Transition* tr : batch) out.push_back(tr->action);
  return out;
}

double td_loss_impl(const CentralCritic& critic, int cost_index,
                    const std::vector<const Transition*>& batch,
                    const DecomJointPolicy& target_policy, double gamma, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("td_loss: empty batch");
  const auto targets = td_targets(critic, cost_index, batch, target_policy, gamma, rng, 0.0);
  const Tensor in = critic.assemble_input(batch, false, stored_joint_actions(batch), cost_index);
  const Tensor q = critic.forward(in);
  double acc = 0.0;
  for (std::size_t l = 0; l < batch.size(); ++l) {
    const double d = targets[l] - q.data[l];
    acc += d * d;
  }
  return acc / static_cast<double>(batch.size());
}

}  // namespace

double reward_td_loss(const CentralCritic& critic, const std::vector<const Transition*>& batch,
                      const DecomJointPolicy& target_policy, double gamma, Rng& rng) {
  return td_loss_impl(critic, -1, batch, target_policy, gamma, rng);
}

double cost_td_loss(const CentralCritic& critic, int cost_index,
                    const std::vector<const Transition*>& batch,
                    const DecomJointPolicy& target_policy, double gamma, Rng& rng) {
  if (cost_index < 0) throw std::invalid_argument("cost_td_loss: cost index must be >= 0");
  return td_loss_impl(critic, cost_index, batch, target_policy, gamma, rng);
}

TdUpdateStats td_update_raw(CentralCritic& critic, const Tensor& input,
                            const std::vector<double>& targets, AdamState& adam) {
  if (input.rows() == 0 || input.rows() != static_cast<int>(targets.size())) {
    throw std::invalid_argument("td_update_raw: input/target mismatch");
  }
  Tape tape;
  Mlp::Binding bd = critic.net.bind(tape, true);
  Var q = critic.net.forward(tape, bd, tape.constant(input));
  Tensor target_col(input.rows(), 1);
  for (int l = 0; l < input.rows(); ++l) target_col.data[l] = targets[l];
  Var loss = tape.mean_all(tape.square(tape.sub(tape.constant(target_col), q)));
  tape.backward(loss);

  std::vector<Tensor> grads = critic.net.grads_from(tape, bd);
  TdUpdateStats stats;
  stats.loss = tape.value(loss).data[0];
  stats.grad_norm = global_norm(grads);
  adam_step(critic.net.params(), grads, adam);
  return stats;
}

TdUpdateStats td_update(CentralCritic& critic, int cost_index,
                        const std::vector<const Transition*>& batch,
                        const DecomJointPolicy& target_policy, double gamma, AdamState& adam,
                        Rng& rng, double shaped_omega) {
  if (batch.empty()) throw std::invalid_argument("td_update: empty batch");
  const auto targets =
      td_targets(critic, cost_index, batch, target_policy, gamma, rng, shaped_omega);
  const Tensor in = critic.assemble_input(batch, false, stored_joint_actions(batch), cost_index);
  return td_update_raw(critic, in, targets, adam);
}

TdUpdateStats td_update_shared(CentralCritic& critic, int cost_count,
                               const std::vector<const Transition*>& batch,
                               const DecomJointPolicy& target_policy, double gamma,
                               AdamState& adam, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("td_update_shared: empty batch");
  if (cost_count < 1) throw std::invalid_argument("td_update_shared: cost_count must be >= 1");
  const int m = static_cast<int>(batch.size());
  // One target-policy draw shared across the stacked rows keeps the update
  // identical to per-stream evaluation on the same batch.
  const auto next_actions = target_joint_actions(target_policy, batch, rng);
  Tensor stacked(m * cost_count, critic.input_dim());
  std::vector<double> targets(static_cast<std::size_t>(m) * cost_count);
  const auto stored = stored_joint_actions(batch);
  for (int j = 0; j < cost_count; ++j) {
    const Tensor next_in = critic.assemble_input(batch, true, next_actions, j);
    const Tensor next_q = critic.forward_target(next_in);
    const Tensor cur_in = critic.assemble_input(batch, false, stored, j);
    for (int l = 0; l < m; ++l) {
      const int row = j * m + l;
      for (int c = 0; c < critic.input_dim(); ++c) stacked.at(row, c) = cur_in.at(l, c);
      targets[row] = batch[l]->costs[j] + gamma * next_q.data[l];
    }
  }
  return td_update_raw(critic, stacked, targets, adam);
}

}  // namespace decom
