#include "decom/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "decom/metrics.hpp"
#include "decom/optim.hpp"

namespace decom {

std::string to_string(Algo a) {
  switch (a) {
    case Algo::DecomA: return "decom_a";
    case Algo::DecomN: return "decom_n";
    case Algo::DecomI: return "decom_i";
    case Algo::FixedPenalty: return "fp";
    case Algo::Lagrangian: return "la";
  }
  return "?";
}

Algo algo_from_string(const std::string& s) {
  if (s == "decom_a") return Algo::DecomA;
  if (s == "decom_n") return Algo::DecomN;
  if (s == "decom_i") return Algo::DecomI;
  if (s == "fp") return Algo::FixedPenalty;
  if (s == "la") return Algo::Lagrangian;
  throw std::invalid_argument("algo.variant: unknown variant '" + s + "'");
}

Variant AlgoConfig::variant() const {
  switch (algo) {
    case Algo::DecomN: return Variant::N;
    case Algo::DecomI: return Variant::I;
    default: return Variant::A;
  }
}

void AlgoConfig::validate(int cost_count) const {
  if (static_cast<int>(constraint.bounds.size()) != cost_count) {
    throw std::invalid_argument(
        "algo.bounds: expected " + std::to_string(cost_count) +
        " entries for this environment, got " + std::to_string(constraint.bounds.size()));
  }
  constraint.validate();
  if (fp_omega > 0.0) throw std::invalid_argument("algo.fp_omega: must be <= 0");
  if (la_lr <= 0.0) throw std::invalid_argument("algo.la_lr: must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("algo.lambda: must be >= 0");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("algo.gamma: must be in [0,1]");
  if (gamma_cost < 0.0 || gamma_cost > 1.0) {
    throw std::invalid_argument("algo.gamma_cost: must be in [0,1]");
  }
  if (batch_size < 1) throw std::invalid_argument("algo.batch_size: must be >= 1");
  if (buffer_capacity < batch_size) {
    throw std::invalid_argument("algo.buffer_capacity: must be >= algo.batch_size");
  }
  if (train_every < 1) throw std::invalid_argument("algo.train_every: must be >= 1");
  for (int h : actor_hidden)
    if (h < 1) throw std::invalid_argument("algo.hidden: sizes must be positive");
  for (int h : critic_hidden)
    if (h < 1) throw std::invalid_argument("algo.critic_hidden: sizes must be positive");
  if (lr_base <= 0.0) throw std::invalid_argument("algo.lr_base: must be > 0");
  if (lr_critic_r <= 0.0) throw std::invalid_argument("algo.lr_critic_r: must be > 0");
  if (lr_critic_c <= 0.0) throw std::invalid_argument("algo.lr_critic_c: must be > 0");
  for (double d : {delta_base, delta_critic_r, delta_pert_init, delta_pert_final, delta_cc_init,
                   delta_cc_final}) {
    if (d <= 0.0 || d > 1.0) {
      throw std::invalid_argument("algo.delta_*: soft-update rates must be in (0,1]");
    }
  }
  if (target_decay_fraction < 0.0 || target_decay_fraction > 1.0) {
    throw std::invalid_argument("algo.target_decay_fraction: must be in [0,1]");
  }
  if (ou_rate < 0.0 || ou_rate > 1.0) throw std::invalid_argument("algo.ou_rate: must be in [0,1]");
  if (ou_sigma < 0.0) throw std::invalid_argument("algo.ou_sigma: must be >= 0");
}

void RunConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("run.episodes: must be >= 0");
  if (eval_interval < 1) throw std::invalid_argument("run.eval_interval: must be >= 1");
  if (eval_episodes < 0) throw std::invalid_argument("run.eval_episodes: must be >= 0");
}

// ---------------------------------------------------------------------------
// Theorem-2 surrogate machinery.

namespace {

// Per-agent constant blocks of a batch.
Tensor obs_block(const std::vector<const Transition*>& batch, int agent, int obs_dim) {
  Tensor t(static_cast<int>(batch.size()), obs_dim);
  for (std::size_t l = 0; l < batch.size(); ++l)
    for (int c = 0; c < obs_dim; ++c) t.at(static_cast<int>(l), c) = batch[l]->obs[agent][c];
  return t;
}

Tensor base_block(const std::vector<const Transition*>& batch, int agent, int act_dim) {
  Tensor t(static_cast<int>(batch.size()), act_dim);
  for (std::size_t l = 0; l < batch.size(); ++l)
    for (int k = 0; k < act_dim; ++k)
      t.at(static_cast<int>(l), k) = batch[l]->base[agent * act_dim + k];
  return t;
}

Tensor state_block(const std::vector<const Transition*>& batch, int state_dim) {
  Tensor t(static_cast<int>(batch.size()), state_dim);
  for (std::size_t l = 0; l < batch.size(); ++l)
    for (int c = 0; c < state_dim; ++c) t.at(static_cast<int>(l), c) = batch[l]->state[c];
  return t;
}

// Recorded critic evaluation including the Lagrangian penalty when
// multipliers are present. Critic parameters never carry gradients here.
Var combined_critic_on_tape(Tape& tape, const ThetaProblem& prob, Var state_const, Var actions,
                            int batch_size) {
  Mlp::Binding rb = prob.reward_critic->net.bind(tape, false);
  Var in = tape.concat_cols({state_const, actions});
  Var q = prob.reward_critic->net.forward(tape, rb, in);
  if (!prob.multipliers.empty() && prob.cost_critics != nullptr) {
    for (std::size_t j = 0; j < prob.multipliers.size(); ++j) {
      if (prob.multipliers[j] == 0.0) continue;
      const CentralCritic& cc =
          prob.shared_cost_critic ? *(*prob.cost_critics)[0] : *(*prob.cost_critics)[j];
      std::vector<Var> parts{state_const, actions};
      if (cc.onehot_dim() > 0) {
        Tensor oh(batch_size, cc.onehot_dim(), 0.0);
        for (int l = 0; l < batch_size; ++l) oh.at(l, static_cast<int>(j)) = 1.0;
        parts.push_back(tape.constant(std::move(oh)));
      }
      Mlp::Binding cb = cc.net.bind(tape, false);
      Var qc = cc.net.forward(tape, cb, tape.concat_cols(parts));
      q = tape.add(q, tape.scale(qc, -prob.multipliers[j]));
    }
  }
  return q;
}

struct RecordedSurrogate {
  Var objective = -1;
  DecomJointPolicy::TapeBindings bindings;
};

// Builds the Theorem-2 surrogate on the tape:
//   mean_l [ sum_i log f_i(b_il | o_il) * qw_l + Q(s_l, a_l(theta)) ]
// with a_l(theta) recomposed through the perturbation nets (constants) and,
// in stochastic mode, base actions reparameterized with the frozen noises.
RecordedSurrogate record_theta_surrogate(Tape& tape, const ThetaProblem& prob,
                                         const std::vector<const Transition*>& batch,
                                         const ThetaContext& ctx) {
  const DecomJointPolicy& policy = *prob.policy;
  const int n = policy.n_agents();
  const int m = static_cast<int>(batch.size());
  const bool stochastic = policy.mode() == PolicyMode::Stochastic;

  RecordedSurrogate rec;
  rec.bindings = policy.bind(tape, /*base_grad=*/true, /*perturb_grad=*/false);

  std::vector<Var> obs_rows(n), fresh_base(n);
  Var logp_sum = -1;
  for (int i = 0; i < n; ++i) {
    obs_rows[i] = tape.constant(obs_block(batch, i, policy.obs_dim()));
    DecomJointPolicy::BaseHead head =
        policy.base_forward_on_tape(tape, rec.bindings, i, obs_rows[i]);
    if (stochastic) {
      Var sd = tape.exp_act(head.log_std);
      fresh_base[i] = tape.add(head.mean, tape.mul_const(sd, ctx.xi[i]));
      Var logp = policy.log_density_on_tape(tape, head, base_block(batch, i, policy.act_dim()));
      logp_sum = logp_sum < 0 ? logp : tape.add(logp_sum, logp);
    } else {
      fresh_base[i] = head.mean;
    }
  }

  std::vector<Var> composed(n);
  for (int i = 0; i < n; ++i) {
    Var g = policy.perturb_forward_on_tape(tape, rec.bindings, i, obs_rows[i], fresh_base);
    composed[i] = policy.compose_on_tape(tape, fresh_base[i], g);
  }
  Var actions = tape.concat_cols(composed);
  Var state_const = tape.constant(state_block(batch, prob.reward_critic->state_dim()));
  Var q = combined_critic_on_tape(tape, prob, state_const, actions, m);

  Var objective = tape.mean_all(q);
  if (stochastic) {
    Tensor w(m, 1);
    for (int l = 0; l < m; ++l) w.data[l] = ctx.q_weight[l] / static_cast<double>(m);
    objective = tape.add(objective, tape.weighted_sum(logp_sum, std::move(w)));
  }
  rec.objective = objective;
  return rec;
}

}  // namespace

ThetaContext make_theta_context(const ThetaProblem& prob,
                                const std::vector<const Transition*>& batch) {
  const DecomJointPolicy& policy = *prob.policy;
  ThetaContext ctx;
  if (policy.mode() != PolicyMode::Stochastic) return ctx;

  const int n = policy.n_agents();
  const int d = policy.act_dim();
  const int m = static_cast<int>(batch.size());
  ctx.xi.resize(n);
  for (int i = 0; i < n; ++i) {
    Tensor xi(m, d);
    for (int l = 0; l < m; ++l) {
      const std::vector<double> mean = policy.base(i).mean_action(batch[l]->obs[i]);
      const std::vector<double> ls = policy.base(i).log_std(batch[l]->obs[i]);
      for (int k = 0; k < d; ++k) {
        const double sd = std::exp(ls[k]);
        const double raw = (batch[l]->base[i * d + k] - mean[k]) / std::max(sd, 1e-12);
        xi.at(l, k) = std::clamp(raw, -10.0, 10.0);
      }
    }
    ctx.xi[i] = std::move(xi);
  }

  ctx.q_weight.resize(m);
  for (int l = 0; l < m; ++l) {
    double w = prob.reward_critic->q_value(batch[l]->state, batch[l]->action);
    if (!prob.multipliers.empty() && prob.cost_critics != nullptr) {
      for (std::size_t j = 0; j < prob.multipliers.size(); ++j) {
        if (prob.multipliers[j] == 0.0) continue;
        const CentralCritic& cc =
            prob.shared_cost_critic ? *(*prob.cost_critics)[0] : *(*prob.cost_critics)[j];
        const int onehot = cc.onehot_dim() > 0 ? static_cast<int>(j) : -1;
        w -= prob.multipliers[j] * cc.q_value(batch[l]->state, batch[l]->action, onehot);
      }
    }
    ctx.q_weight[l] = w;
  }
  return ctx;
}

double theta_surrogate_value(const ThetaProblem& prob,
                             const std::vector<const Transition*>& batch,
                             const ThetaContext& ctx) {
  Tape tape;
  RecordedSurrogate rec = record_theta_surrogate(tape, prob, batch, ctx);
  return tape.value(rec.objective).data[0];
}

std::vector<Tensor> theta_gradient(const ThetaProblem& prob,
                                   const std::vector<const Transition*>& batch,
                                   const ThetaContext& ctx, double* value_out) {
  if (batch.empty()) throw std::invalid_argument("theta_gradient: empty batch");
  Tape tape;
  RecordedSurrogate rec = record_theta_surrogate(tape, prob, batch, ctx);
  tape.backward(rec.objective);
  if (value_out != nullptr) *value_out = tape.value(rec.objective).data[0];
  std::vector<Tensor> grads;
  for (int i = 0; i < prob.policy->n_agents(); ++i) {
    auto g = prob.policy->base(i).net.grads_from(tape, rec.bindings.base[i]);
    grads.insert(grads.end(), g.begin(), g.end());
  }
  return grads;
}

double theta_ascent_step(DecomJointPolicy& policy, const ThetaProblem& prob,
                         const std::vector<const Transition*>& batch, AdamState& adam) {
  const ThetaContext ctx = make_theta_context(prob, batch);
  std::vector<Tensor> grads = theta_gradient(prob, batch, ctx);
  const double norm = global_norm(grads);
  for (Tensor& g : grads)
    for (double& v : g.data) v = -v;  // ascent through a descent optimizer
  adam_step(policy.base_params(), grads, adam);
  return norm;
}

std::vector<std::vector<double>> gradient_aggregation_check(
    const ThetaProblem& prob, const std::vector<const Transition*>& batch) {
  const DecomJointPolicy& policy = *prob.policy;
  const int n = policy.n_agents();
  const int d = policy.act_dim();
  const int m = static_cast<int>(batch.size());
  const ThetaContext ctx = make_theta_context(prob, batch);

  std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 0.0));
  for (int path = 0; path < n; ++path) {
    Tape tape;
    auto bd = policy.bind(tape, true, false);
    std::vector<Var> obs_rows(n), fresh_base(n);
    for (int i = 0; i < n; ++i) {
      obs_rows[i] = tape.constant(obs_block(batch, i, policy.obs_dim()));
      DecomJointPolicy::BaseHead head = policy.base_forward_on_tape(tape, bd, i, obs_rows[i]);
      if (policy.mode() == PolicyMode::Stochastic) {
        Var sd = tape.exp_act(head.log_std);
        fresh_base[i] = tape.add(head.mean, tape.mul_const(sd, ctx.xi[i]));
      } else {
        fresh_base[i] = head.mean;
      }
    }
    // Only agent `path`'s executed action is recomputed; all other action
    // slots stay at their stored values.
    std::vector<Var> slots(n);
    for (int i = 0; i < n; ++i) {
      if (i == path) {
        Var g = policy.perturb_forward_on_tape(tape, bd, i, obs_rows[i], fresh_base);
        slots[i] = policy.compose_on_tape(tape, fresh_base[i], g);
      } else {
        Tensor stored(m, d);
        for (int l = 0; l < m; ++l)
          for (int k = 0; k < d; ++k) stored.at(l, k) = batch[l]->action[i * d + k];
        slots[i] = tape.constant(std::move(stored));
      }
    }
    Var actions = tape.concat_cols(slots);
    Var state_const = tape.constant(state_block(batch, prob.reward_critic->state_dim()));
    Var q = combined_critic_on_tape(tape, prob, state_const, actions, m);
    tape.backward(tape.mean_all(q));

    for (int i = 0; i < n; ++i) {
      auto g = policy.base(i).net.grads_from(tape, bd.base[i]);
      matrix[i][path] = global_norm(g);
    }
  }
  return matrix;
}

// ---------------------------------------------------------------------------

Trainer::Trainer(std::unique_ptr<CcmgEnv> env, AlgoConfig algo, RunConfig run)
    : env_(std::move(env)),
      algo_(std::move(algo)),
      run_(std::move(run)),
      buffer_(static_cast<std::size_t>(algo_.buffer_capacity)),
      rng_(Rng::mix(run_.seed, 0x7261696e)) {
  const CcmgSpec& spec = env_->spec();
  algo_.validate(spec.cost_count);
  run_.validate();

  Rng init_rng(Rng::mix(run_.seed, 0x696e6974));
  const double lambda_eff = algo_.is_decom() ? algo_.lambda : 0.0;
  policy_ = std::make_unique<DecomJointPolicy>(spec, algo_.mode, algo_.variant(), lambda_eff,
                                               algo_.actor_hidden, algo_.hidden_act, init_rng);

  const int joint_dim = spec.n_agents * spec.act_dim;
  reward_critic_ = std::make_unique<CentralCritic>(env_->state_dim(), joint_dim, 0,
                                                   algo_.critic_hidden, algo_.hidden_act,
                                                   init_rng);
  const int n_cost_nets = algo_.shared_cost_critic ? 1 : spec.cost_count;
  const int onehot = algo_.shared_cost_critic && spec.cost_count > 1 ? spec.cost_count : 0;
  for (int j = 0; j < n_cost_nets; ++j) {
    cost_critics_.push_back(std::make_unique<CentralCritic>(
        env_->state_dim(), joint_dim, onehot, algo_.critic_hidden, algo_.hidden_act, init_rng));
  }
  for (auto& c : cost_critics_) cost_critic_ptrs_.push_back(c.get());

  for (int i = 0; i < spec.n_agents; ++i) {
    base_noise_.emplace_back(spec.act_dim, algo_.ou_rate, algo_.ou_sigma, 0.0,
                             Rng::mix(run_.seed, 0x6f750000 + i));
    perturb_noise_.emplace_back(spec.act_dim, algo_.ou_rate, algo_.ou_sigma, 0.0,
                                Rng::mix(run_.seed, 0x6f751000 + i));
  }

  adam_reward_.lr = algo_.lr_critic_r;
  adam_theta_.lr = algo_.lr_base;
  adam_costs_.resize(n_cost_nets);
  for (auto& a : adam_costs_) a.lr = algo_.lr_critic_c;
  multipliers_.assign(spec.cost_count, 0.0);
}

double Trainer::delta_perturb_at(std::int64_t episode) const {
  const double span = algo_.target_decay_fraction * static_cast<double>(run_.episodes);
  if (span <= 0.0) return algo_.delta_pert_final;
  const double frac = std::min(1.0, static_cast<double>(episode) / span);
  return algo_.delta_pert_init + frac * (algo_.delta_pert_final - algo_.delta_pert_init);
}

double Trainer::delta_cost_critic_at(std::int64_t episode) const {
  const double span = algo_.target_decay_fraction * static_cast<double>(run_.episodes);
  if (span <= 0.0) return algo_.delta_cc_final;
  const double frac = std::min(1.0, static_cast<double>(episode) / span);
  return algo_.delta_cc_init + frac * (algo_.delta_cc_final - algo_.delta_cc_init);
}

void Trainer::apply_schedules() {
  if (!algo_.use_schedules) return;
  const std::int64_t k = counters_.update_blocks;
  adam_reward_.lr = algo_.schedules.eta.value(k);
  for (auto& a : adam_costs_) a.lr = algo_.schedules.zeta.value(k);
  adam_theta_.lr = algo_.schedules.theta.value(k);
}

EpisodeStats Trainer::collect_episode(bool explore) {
  const CcmgSpec& spec = env_->spec();
  env_->reset(Rng::mix(run_.seed, 0x65700000 + static_cast<std::uint64_t>(episode_index_)));
  for (auto& p : base_noise_) p.reset();
  for (auto& p : perturb_noise_) p.reset();

  EpisodeStats stats;
  stats.cost_sums.assign(spec.cost_count, 0.0);
  stats.cost_discounted.assign(spec.cost_count, 0.0);
  std::vector<double> prefix(spec.cost_count, 0.0);
  double gamma_r = 1.0, gamma_c = 1.0;

  for (int t = 0; t < spec.episode_len; ++t) {
    Transition tr;
    tr.state = env_->global_state();
    tr.obs.resize(spec.n_agents);
    for (int i = 0; i < spec.n_agents; ++i) tr.obs[i] = env_->observe(i);

    auto act = policy_->joint_act(tr.obs, explore, &base_noise_, &perturb_noise_, rng_);
    StepOutcome out = env_->step(act.action);

    tr.base.reserve(spec.n_agents * spec.act_dim);
    tr.action.reserve(spec.n_agents * spec.act_dim);
    for (int i = 0; i < spec.n_agents; ++i) {
      tr.base.insert(tr.base.end(), act.base[i].begin(), act.base[i].end());
      tr.action.insert(tr.action.end(), act.action[i].begin(), act.action[i].end());
    }
    tr.reward = out.team_reward;
    tr.costs = out.team_costs;
    for (int j = 0; j < spec.cost_count; ++j) prefix[j] += out.team_costs[j];
    tr.prefix_costs = prefix;
    tr.t = t;
    tr.done = out.done;
    tr.next_state = env_->global_state();
    tr.next_obs.resize(spec.n_agents);
    for (int i = 0; i < spec.n_agents; ++i) tr.next_obs[i] = env_->observe(i);

    stats.reward_sum += out.team_reward;
    stats.reward_discounted += gamma_r * out.team_reward;
    gamma_r *= algo_.gamma;
    for (int j = 0; j < spec.cost_count; ++j) {
      stats.cost_sums[j] += out.team_costs[j];
      stats.cost_discounted[j] += gamma_c * out.team_costs[j];
    }
    gamma_c *= algo_.gamma_cost;
    ++stats.steps;

    buffer_.push(std::move(tr));
    if (out.done) break;
  }
  ++episode_index_;
  return stats;
}

EpisodeStats Trainer::rollout_eval(std::uint64_t env_seed) {
  const CcmgSpec& spec = env_->spec();
  env_->reset(env_seed);
  EpisodeStats stats;
  stats.cost_sums.assign(spec.cost_count, 0.0);
  stats.cost_discounted.assign(spec.cost_count, 0.0);
  double gamma_r = 1.0, gamma_c = 1.0;
  Rng eval_rng(Rng::mix(env_seed, 0x6576616c));
  for (int t = 0; t < spec.episode_len; ++t) {
    std::vector<std::vector<double>> obs(spec.n_agents);
    for (int i = 0; i < spec.n_agents; ++i) obs[i] = env_->observe(i);
    auto act = policy_->joint_act(obs, /*explore=*/false, nullptr, nullptr, eval_rng);
    StepOutcome out = env_->step(act.action);
    stats.reward_sum += out.team_reward;
    stats.reward_discounted += gamma_r * out.team_reward;
    gamma_r *= algo_.gamma;
    for (int j = 0; j < spec.cost_count; ++j) {
      stats.cost_sums[j] += out.team_costs[j];
      stats.cost_discounted[j] += gamma_c * out.team_costs[j];
    }
    gamma_c *= algo_.gamma_cost;
    ++stats.steps;
    if (out.done) break;
  }
  return stats;
}

ThetaProblem Trainer::theta_problem() const {
  ThetaProblem prob;
  prob.policy = policy_.get();
  prob.reward_critic = reward_critic_.get();
  prob.cost_critics = &cost_critic_ptrs_;
  prob.shared_cost_critic = algo_.shared_cost_critic;
  if (algo_.algo == Algo::Lagrangian) prob.multipliers = multipliers_;
  return prob;
}

void Trainer::update_block() {
  const CcmgSpec& spec = env_->spec();
  if (buffer_.size() < static_cast<std::size_t>(algo_.batch_size)) {
    throw std::logic_error("update_block: buffer smaller than one mini-batch");
  }
  apply_schedules();
  const auto batch = buffer_.sample(algo_.batch_size, rng_);

  // Reward critic (shaped target under FP).
  const double omega = algo_.algo == Algo::FixedPenalty ? algo_.fp_omega : 0.0;
  TdUpdateStats rstats =
      td_update(*reward_critic_, -1, batch, *policy_, algo_.gamma, adam_reward_, rng_, omega);
  last_td_r_ = rstats.loss;
  counters_.reward_critic_steps += 1;

  // Cost critics (skipped by FP, which folds costs into the reward).
  last_td_c_ = 0.0;
  if (algo_.algo != Algo::FixedPenalty) {
    if (algo_.shared_cost_critic) {
      TdUpdateStats cstats = td_update_shared(*cost_critics_[0], spec.cost_count, batch, *policy_,
                                              algo_.gamma_cost, adam_costs_[0], rng_);
      last_td_c_ = cstats.loss;
      counters_.cost_critic_steps += 1;
    } else {
      double acc = 0.0;
      for (int j = 0; j < spec.cost_count; ++j) {
        TdUpdateStats cstats = td_update(*cost_critics_[j], j, batch, *policy_, algo_.gamma_cost,
                                         adam_costs_[j], rng_);
        acc += cstats.loss;
        counters_.cost_critic_steps += 1;
      }
      last_td_c_ = acc / spec.cost_count;
    }
  }

  // Theta ascent on the Theorem-2 surrogate.
  last_gn_theta_ = theta_ascent_step(*policy_, theta_problem(), batch, adam_theta_);
  counters_.theta_steps += 1;

  // Phi via the constraints-satisfaction inner loop (DeCOM only).
  last_gn_phi_ = 0.0;
  last_phi_loss_ = 0.0;
  if (algo_.is_decom()) {
    const bool per_step = algo_.gamma_cost == 1.0;
    InnerLoopStats istats = run_inner_loop(*policy_, batch, algo_.constraint, cost_critic_ptrs_,
                                           algo_.shared_cost_critic, per_step, spec.episode_len);
    counters_.inner_loop_calls += 1;
    counters_.phi_steps += istats.steps;
    last_gn_phi_ = istats.grad_norm;
    last_phi_loss_ = istats.last_violation;
  } else if (algo_.algo == Algo::Lagrangian) {
    // Dual ascent on the multipliers from the initial-step cost estimates.
    std::vector<double> excess(spec.cost_count, 0.0);
    std::vector<int> count(spec.cost_count, 0);
    for (const Transition* tr : batch) {
      if (tr->t != 0) continue;
      for (int j = 0; j < spec.cost_count; ++j) {
        const CentralCritic& cc =
            algo_.shared_cost_critic ? *cost_critics_[0] : *cost_critics_[j];
        const int onehot = cc.onehot_dim() > 0 ? j : -1;
        excess[j] += cc.q_value(tr->state, tr->action, onehot);
        count[j] += 1;
      }
    }
    bool any = false;
    for (int j = 0; j < spec.cost_count; ++j) {
      if (count[j] > 0) {
        excess[j] = excess[j] / count[j] - algo_.constraint.bounds[j];
        any = true;
      }
    }
    if (any) lagrangian_update(multipliers_, excess, algo_.la_lr);
  }

  // Soft target updates, with the decaying rates on the perturbation and
  // cost-critic targets.
  policy_->soft_update_targets(algo_.delta_base, delta_perturb_at(episode_index_));
  reward_critic_->soft_update(algo_.delta_critic_r);
  for (auto& c : cost_critics_) c->soft_update(delta_cost_critic_at(episode_index_));
  counters_.soft_updates += 1;
  counters_.update_blocks += 1;
}

EvalPoint Trainer::evaluate(std::int64_t episode_index) {
  const CcmgSpec& spec = env_->spec();
  EvalPoint point;
  point.episode = episode_index;
  point.cost_means.assign(spec.cost_count, 0.0);
  point.violations.assign(spec.cost_count, 0.0);
  if (run_.eval_episodes > 0) {
    std::vector<double> rewards;
    for (int k = 0; k < run_.eval_episodes; ++k) {
      const std::uint64_t s =
          Rng::mix(Rng::mix(run_.seed, 0x6576616c00ULL + static_cast<std::uint64_t>(episode_index)),
                   static_cast<std::uint64_t>(k));
      EpisodeStats st = rollout_eval(s);
      rewards.push_back(st.reward_discounted);
      for (int j = 0; j < spec.cost_count; ++j) point.cost_means[j] += st.cost_discounted[j];
    }
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= rewards.size();
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    point.reward_mean = mean;
    point.reward_std = rewards.size() > 1 ? std::sqrt(var / (rewards.size() - 1)) : 0.0;
    for (int j = 0; j < spec.cost_count; ++j) {
      point.cost_means[j] /= run_.eval_episodes;
      point.violations[j] = std::max(0.0, point.cost_means[j] - algo_.constraint.bounds[j]);
    }
  }
  point.td_loss_r = last_td_r_;
  point.td_loss_c = last_td_c_;
  point.phi_loss = last_phi_loss_;
  point.grad_norm_theta = last_gn_theta_;
  point.grad_norm_phi = last_gn_phi_;
  history_.push_back(point);
  return point;
}

Checkpoint Trainer::make_checkpoint() const {
  Checkpoint ckpt;
  policy_->to_checkpoint(ckpt);
  auto net_tensors = [](const Mlp& net) {
    std::vector<Tensor> out;
    for (const auto& l : net.layers) {
      out.push_back(l.w);
      out.push_back(l.b);
    }
    return out;
  };
  ckpt.add("critic_r", net_tensors(reward_critic_->net));
  ckpt.add("critic_r_target", net_tensors(reward_critic_->target));
  for (std::size_t j = 0; j < cost_critics_.size(); ++j) {
    ckpt.add("critic_c_" + std::to_string(j + 1), net_tensors(cost_critics_[j]->net));
    ckpt.add("critic_c_" + std::to_string(j + 1) + "_target",
             net_tensors(cost_critics_[j]->target));
  }
  return ckpt;
}

void Trainer::load_from_checkpoint(const Checkpoint& ckpt) {
  policy_->from_checkpoint(ckpt);
  auto load_net = [](Mlp& net, const std::vector<Tensor>* tensors, const std::string& name) {
    if (tensors == nullptr) throw std::runtime_error("checkpoint: missing entry '" + name + "'");
    if (tensors->size() != 2 * net.layers.size()) {
      throw std::runtime_error("checkpoint: tensor count mismatch for '" + name + "'");
    }
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (!net.layers[l].w.same_shape((*tensors)[2 * l]) ||
          !net.layers[l].b.same_shape((*tensors)[2 * l + 1])) {
        throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
      }
      net.layers[l].w = (*tensors)[2 * l];
      net.layers[l].b = (*tensors)[2 * l + 1];
    }
  };
  load_net(reward_critic_->net, ckpt.find("critic_r"), "critic_r");
  load_net(reward_critic_->target, ckpt.find("critic_r_target"), "critic_r_target");
  for (std::size_t j = 0; j < cost_critics_.size(); ++j) {
    const std::string name = "critic_c_" + std::to_string(j + 1);
    load_net(cost_critics_[j]->net, ckpt.find(name), name);
    load_net(cost_critics_[j]->target, ckpt.find(name + "_target"), name + "_target");
  }
}

void Trainer::write_outputs_if_due(std::int64_t episode_index, bool force) {
  if (!run_.write_outputs || run_.out_dir.empty()) return;
  std::filesystem::create_directories(run_.out_dir);
  const CcmgSpec& spec = env_->spec();
  std::vector<MetricsRow> rows;
  for (const EvalPoint& p : history_) {
    MetricsRow row;
    row.episode = p.episode;
    row.seed = run_.seed;
    row.variant = to_string(algo_.algo);
    row.reward_mean = p.reward_mean;
    row.reward_std = p.reward_std;
    row.costs = p.cost_means;
    row.violations = p.violations;
    row.td_loss_r = p.td_loss_r;
    row.td_loss_c = p.td_loss_c;
    row.phi_loss = p.phi_loss;
    row.grad_norm_theta = p.grad_norm_theta;
    row.grad_norm_phi = p.grad_norm_phi;
    rows.push_back(std::move(row));
  }
  write_metrics_csv(run_.out_dir + "/metrics.csv", spec.cost_count, rows);
  save_checkpoint(make_checkpoint(),
                  run_.out_dir + "/checkpoint_" + std::to_string(episode_index) + ".ckpt");
  if (force) save_checkpoint(make_checkpoint(), run_.out_dir + "/checkpoint_final.ckpt");
}

void Trainer::train() {
  if (run_.episodes == 0) {
    // Initialization-only run: checkpoint plus header-only metrics.
    write_outputs_if_due(0, true);
    return;
  }
  for (std::int64_t k = 0; k < run_.episodes; ++k) {
    collect_episode(/*explore=*/true);
    if ((k + 1) % algo_.train_every == 0 &&
        buffer_.size() >= static_cast<std::size_t>(algo_.batch_size)) {
      update_block();
    }
    const bool last = k + 1 == run_.episodes;
    if ((k + 1) % run_.eval_interval == 0 || last) {
      evaluate(k + 1);
      write_outputs_if_due(k + 1, last);
    }
  }
}

double Trainer::fp_shaped_reward(double reward, std::span<const double> costs, double omega) {
  double shaped = reward;
  for (double c : costs) shaped += omega * c;
  return shaped;
}

void Trainer::lagrangian_update(std::vector<double>& multipliers,
                                std::span<const double> excess, double alpha) {
  if (multipliers.size() != excess.size()) {
    throw std::invalid_argument("lagrangian_update: size mismatch");
  }
  for (std::size_t j = 0; j < multipliers.size(); ++j) {
    multipliers[j] = std::max(0.0, multipliers[j] + alpha * excess[j]);
  }
}

}  // namespace decom
