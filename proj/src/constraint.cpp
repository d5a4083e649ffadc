#include "decom/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "decom/optim.hpp"

namespace decom {

void ConstraintSpec::validate() const {
  if (bounds.empty()) throw std::invalid_argument("algo.bounds: at least one bound required");
  for (double d : bounds) {
    if (!std::isfinite(d)) throw std::invalid_argument("algo.bounds: bounds must be finite");
  }
  if (inner_iters < 1) throw std::invalid_argument("algo.w_iters: must be >= 1");
  if (step <= 0.0) throw std::invalid_argument("algo.tau: must be > 0");
  if (clip_norm <= 0.0) throw std::invalid_argument("algo.clip_norm: must be > 0");
  if (box_half <= 0.0) throw std::invalid_argument("algo.phi_box: must be > 0");
}

Var recomposed_actions_on_tape(Tape& tape, const DecomJointPolicy& policy,
                               const DecomJointPolicy::TapeBindings& bd,
                               const std::vector<const Transition*>& batch) {
  const int n = policy.n_agents();
  const int d = policy.act_dim();
  const int m = static_cast<int>(batch.size());

  std::vector<Var> obs_rows(n), base_rows(n);
  for (int i = 0; i < n; ++i) {
    Tensor obs(m, policy.obs_dim());
    Tensor base(m, d);
    for (int l = 0; l < m; ++l) {
      for (int c = 0; c < policy.obs_dim(); ++c) obs.at(l, c) = batch[l]->obs[i][c];
      for (int k = 0; k < d; ++k) base.at(l, k) = batch[l]->base[i * d + k];
    }
    obs_rows[i] = tape.constant(std::move(obs));
    base_rows[i] = tape.constant(std::move(base));
  }
  std::vector<Var> composed(n);
  for (int i = 0; i < n; ++i) {
    Var g = policy.perturb_forward_on_tape(tape, bd, i, obs_rows[i], base_rows);
    composed[i] = policy.compose_on_tape(tape, base_rows[i], g);
  }
  return tape.concat_cols(composed);
}

std::vector<std::vector<double>> recomposed_actions(const DecomJointPolicy& policy,
                                                    const std::vector<const Transition*>& batch) {
  const int n = policy.n_agents();
  const int d = policy.act_dim();
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const Transition* tr : batch) {
    std::vector<std::vector<double>> bases(n);
    for (int i = 0; i < n; ++i) {
      bases[i].assign(tr->base.begin() + i * d, tr->base.begin() + (i + 1) * d);
    }
    std::vector<double> joint;
    joint.reserve(n * d);
    for (int i = 0; i < n; ++i) {
      std::vector<std::vector<double>> nb;
      for (int j : policy.neighbors()[i]) nb.push_back(bases[j]);
      ComposeResult c = policy.compose(i, tr->obs[i], bases[i], nb, policy.lambda());
      joint.insert(joint.end(), c.preclamp.begin(), c.preclamp.end());
    }
    out.push_back(std::move(joint));
  }
  return out;
}

namespace {

double hinge_sq(double x) {
  const double h = x > 0.0 ? x : 0.0;
  return h * h;
}

// Per-timestep batch statistics used by the violation estimators.
struct StepGroups {
  std::vector<int> count;            // samples at step t
  std::vector<double> mean_prefix;   // of prefix cost sums
  std::vector<double> mean_cost;     // of the step cost
  std::vector<std::vector<double>> q_weight;  // 1/count at matching rows
};

StepGroups group_by_step(const std::vector<const Transition*>& batch, int cost_index,
                         int episode_len) {
  StepGroups g;
  g.count.assign(episode_len, 0);
  g.mean_prefix.assign(episode_len, 0.0);
  g.mean_cost.assign(episode_len, 0.0);
  for (const Transition* tr : batch) {
    if (tr->t < 0 || tr->t >= episode_len) {
      throw std::invalid_argument("violation loss: transition timestep outside episode");
    }
    g.count[tr->t] += 1;
    g.mean_prefix[tr->t] += tr->prefix_costs[cost_index];
    g.mean_cost[tr->t] += tr->costs[cost_index];
  }
  g.q_weight.assign(episode_len, std::vector<double>(batch.size(), 0.0));
  for (int t = 0; t < episode_len; ++t) {
    if (g.count[t] == 0) continue;
    g.mean_prefix[t] /= g.count[t];
    g.mean_cost[t] /= g.count[t];
    const double w = 1.0 / g.count[t];
    for (std::size_t l = 0; l < batch.size(); ++l) {
      if (batch[l]->t == t) g.q_weight[t][l] = w;
    }
  }
  return g;
}

std::vector<double> q_column(const CentralCritic& critic,
                             const std::vector<const Transition*>& batch,
                             const std::vector<std::vector<double>>& actions, int onehot_index) {
  const Tensor in = critic.assemble_input(batch, false, actions, onehot_index);
  const Tensor q = critic.forward(in);
  return q.data;
}

double masked_mean(const std::vector<double>& values, const std::vector<double>& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += values[i] * weights[i];
  return acc;
}

}  // namespace

double empirical_violation_loss_initial(const CentralCritic& critic,
                                        const std::vector<const Transition*>& batch,
                                        const DecomJointPolicy& policy, double bound,
                                        int cost_index) {
  if (batch.empty()) throw std::invalid_argument("violation loss: empty batch");
  const int onehot = critic.onehot_dim() > 0 ? cost_index : -1;
  const auto actions = recomposed_actions(policy, batch);
  const auto q = q_column(critic, batch, actions, onehot);
  double acc = 0.0;
  int count = 0;
  for (std::size_t l = 0; l < batch.size(); ++l) {
    if (batch[l]->t == 0) {
      acc += q[l];
      ++count;
    }
  }
  if (count == 0) return 0.0;
  return hinge_sq(acc / count - bound);
}

double per_step_violation_loss(const CentralCritic& critic,
                               const std::vector<const Transition*>& batch,
                               const DecomJointPolicy& policy, double bound, int cost_index,
                               int t, int episode_len) {
  if (batch.empty()) throw std::invalid_argument("violation loss: empty batch");
  if (t < 0 || t > episode_len) {
    throw std::invalid_argument("per_step_violation_loss: t outside [0, T]");
  }
  if (t == episode_len) {
    // Degenerate tail: the decomposition collapses to the empirical
    // full-episode sum carried by the last step's prefix.
    double acc = 0.0;
    int count = 0;
    for (const Transition* tr : batch) {
      if (tr->t == episode_len - 1) {
        acc += tr->prefix_costs[cost_index];
        ++count;
      }
    }
    if (count == 0) return 0.0;
    return hinge_sq(acc / count - bound);
  }
  const int onehot = critic.onehot_dim() > 0 ? cost_index : -1;
  const auto actions = recomposed_actions(policy, batch);
  const auto q = q_column(critic, batch, actions, onehot);
  const StepGroups g = group_by_step(batch, cost_index, episode_len);
  if (g.count[t] == 0) return 0.0;
  const double mq = masked_mean(q, g.q_weight[t]);
  return hinge_sq(g.mean_prefix[t] + mq - g.mean_cost[t] - bound);
}

double combined_violation(const std::vector<double>& per_step_losses) {
  if (per_step_losses.empty()) {
    throw std::invalid_argument("combined_violation: no losses supplied");
  }
  double mean = 0.0;
  for (double v : per_step_losses) mean += v;
  mean /= static_cast<double>(per_step_losses.size());
  return std::max(per_step_losses.front(), mean);
}

int select_worst_constraint(const std::vector<double>& combined) {
  if (combined.empty()) throw std::invalid_argument("select_worst_constraint: empty input");
  int best = 0;
  for (std::size_t j = 1; j < combined.size(); ++j) {
    if (combined[j] > combined[best]) best = static_cast<int>(j);
  }
  return best;
}

std::vector<double> clipped_projected_step(const std::vector<double>& phi,
                                           const std::vector<double>& grad, double tau,
                                           double clip_norm, double box_half) {
  if (tau <= 0.0) throw std::invalid_argument("clipped_projected_step: tau must be > 0");
  if (phi.size() != grad.size()) {
    throw std::invalid_argument("clipped_projected_step: size mismatch");
  }
  double norm2 = 0.0;
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw std::invalid_argument("clipped_projected_step: non-finite gradient");
    }
    norm2 += g * g;
  }
  const double norm = std::sqrt(norm2);
  const double s = norm > clip_norm ? clip_norm / norm : 1.0;
  std::vector<double> out(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    out[i] = std::clamp(phi[i] - tau * s * grad[i], -box_half, box_half);
  }
  return out;
}

ViolationReport evaluate_violations(const std::vector<CentralCritic*>& cost_critics,
                                    bool shared_critic,
                                    const std::vector<const Transition*>& batch,
                                    const DecomJointPolicy& policy,
                                    const std::vector<double>& bounds, bool use_per_step,
                                    int episode_len) {
  const int m_costs = static_cast<int>(bounds.size());
  ViolationReport report;
  report.initial.resize(m_costs);
  report.per_step.resize(m_costs);
  report.combined.resize(m_costs);

  const auto actions = recomposed_actions(policy, batch);
  for (int j = 0; j < m_costs; ++j) {
    const CentralCritic& critic = shared_critic ? *cost_critics[0] : *cost_critics[j];
    const int onehot = critic.onehot_dim() > 0 ? j : -1;
    const auto q = q_column(critic, batch, actions, onehot);
    const StepGroups g = group_by_step(batch, j, episode_len);
    const double l0 =
        g.count[0] > 0 ? hinge_sq(masked_mean(q, g.q_weight[0]) - bounds[j]) : 0.0;
    report.initial[j] = l0;
    if (use_per_step) {
      std::vector<double> per_t(episode_len, 0.0);
      for (int t = 0; t < episode_len; ++t) {
        if (g.count[t] == 0) continue;
        const double mq = masked_mean(q, g.q_weight[t]);
        per_t[t] = hinge_sq(g.mean_prefix[t] + mq - g.mean_cost[t] - bounds[j]);
      }
      report.per_step[j] = per_t;
      report.combined[j] = combined_violation(per_t);
    } else {
      report.per_step[j] = {l0};
      report.combined[j] = l0;
    }
  }
  report.worst = select_worst_constraint(report.combined);
  return report;
}

namespace {

// Recorded combined violation for one cost stream; gradients reach only the
// perturbation parameters.
Var combined_violation_on_tape(Tape& tape, const DecomJointPolicy& policy,
                               const DecomJointPolicy::TapeBindings& bd,
                               const std::vector<const Transition*>& batch,
                               const CentralCritic& critic, int cost_index, double bound,
                               bool use_per_step, int episode_len) {
  const int onehot = critic.onehot_dim() > 0 ? cost_index : -1;
  Var actions = recomposed_actions_on_tape(tape, policy, bd, batch);
  const int m = static_cast<int>(batch.size());

  Tensor state_block(m, critic.state_dim());
  for (int l = 0; l < m; ++l)
    for (int c = 0; c < critic.state_dim(); ++c) state_block.at(l, c) = batch[l]->state[c];
  std::vector<Var> parts{tape.constant(std::move(state_block)), actions};
  if (critic.onehot_dim() > 0) {
    Tensor oh(m, critic.onehot_dim(), 0.0);
    for (int l = 0; l < m; ++l) oh.at(l, onehot) = 1.0;
    parts.push_back(tape.constant(std::move(oh)));
  }
  Mlp::Binding cb = critic.net.bind(tape, false);
  Var q = critic.net.forward(tape, cb, tape.concat_cols(parts));

  const StepGroups g = group_by_step(batch, cost_index, episode_len);
  auto step_loss = [&](int t) -> Var {
    Tensor w(m, 1, 0.0);
    for (int l = 0; l < m; ++l) w.data[l] = g.q_weight[t][l];
    Var mq = tape.weighted_sum(q, std::move(w));
    const double shift = g.mean_prefix[t] - g.mean_cost[t] - bound;
    return tape.square(tape.relu(tape.add_scalar(mq, shift)));
  };

  if (g.count[0] == 0 && !use_per_step) return tape.constant_scalar(0.0);
  Var l0 = g.count[0] > 0 ? step_loss(0) : tape.constant_scalar(0.0);
  if (!use_per_step) return l0;

  Var acc = -1;
  int terms = 0;
  for (int t = 0; t < episode_len; ++t) {
    Var lt = g.count[t] > 0 ? step_loss(t) : tape.constant_scalar(0.0);
    acc = terms == 0 ? lt : tape.add(acc, lt);
    ++terms;
  }
  Var mean_t = tape.scale(acc, 1.0 / static_cast<double>(terms));
  return tape.max2(l0, mean_t);
}

}  // namespace

InnerLoopStats run_inner_loop(DecomJointPolicy& policy,
                              const std::vector<const Transition*>& batch,
                              const ConstraintSpec& cs,
                              const std::vector<CentralCritic*>& cost_critics,
                              bool shared_critic, bool use_per_step, int episode_len) {
  cs.validate();
  if (batch.empty()) throw std::invalid_argument("run_inner_loop: empty batch");

  InnerLoopStats stats;
  const std::vector<double> phi_before = flatten(policy.perturb_params());

  for (int w = 0; w < cs.inner_iters; ++w) {
    const ViolationReport report = evaluate_violations(cost_critics, shared_critic, batch, policy,
                                                       cs.bounds, use_per_step, episode_len);
    const int jstar = report.worst;
    stats.last_worst = jstar;
    stats.last_violation = report.combined[jstar];
    ++stats.steps;

    if (report.combined[jstar] <= 0.0) {
      // Squared hinge is flat on the satisfied side: the step is a no-op.
      stats.grad_norm = 0.0;
      stats.clipped = false;
      continue;
    }

    Tape tape;
    auto bd = policy.bind(tape, false, true);
    const CentralCritic& critic = shared_critic ? *cost_critics[0] : *cost_critics[jstar];
    Var loss = combined_violation_on_tape(tape, policy, bd, batch, critic, jstar,
                                          cs.bounds[jstar], use_per_step, episode_len);
    tape.backward(loss);

    std::vector<Tensor> grads;
    for (int i = 0; i < policy.n_agents(); ++i) {
      auto g = policy.perturb(i).grads_from(tape, bd.perturb[i]);
      grads.insert(grads.end(), g.begin(), g.end());
    }
    stats.grad_norm = global_norm(grads);
    stats.clipped = stats.grad_norm > cs.clip_norm;

    auto params = policy.perturb_params();
    const std::vector<double> phi = flatten(
        std::vector<const Tensor*>(params.begin(), params.end()));
    const std::vector<double> updated =
        clipped_projected_step(phi, flatten(grads), cs.step, cs.clip_norm, cs.box_half);
    unflatten(updated, params);
  }

  const std::vector<double> phi_after = flatten(policy.perturb_params());
  double delta2 = 0.0;
  for (std::size_t i = 0; i < phi_after.size(); ++i) {
    const double d = phi_after[i] - phi_before[i];
    delta2 += d * d;
  }
  stats.phi_delta_norm = std::sqrt(delta2);
  return stats;
}

// ---------------------------------------------------------------------------

double SmoothLossProblem::l_max() const {
  double m = 0.0;
  for (const Quad& q : losses) m = std::max(m, q.smoothness);
  return m;
}

double SmoothLossProblem::eval(int j, const std::vector<double>& x) const {
  const Quad& q = losses[j];
  const int d = dim();
  double acc = q.offset;
  std::vector<double> diff(d);
  for (int i = 0; i < d; ++i) diff[i] = x[i] - q.minimizer[i];
  for (int r = 0; r < d; ++r) {
    double row = 0.0;
    for (int c = 0; c < d; ++c) row += q.curvature[r][c] * diff[c];
    acc += 0.5 * diff[r] * row;
  }
  return acc;
}

std::vector<double> SmoothLossProblem::grad(int j, const std::vector<double>& x) const {
  const Quad& q = losses[j];
  const int d = dim();
  std::vector<double> diff(d), g(d, 0.0);
  for (int i = 0; i < d; ++i) diff[i] = x[i] - q.minimizer[i];
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) g[r] += q.curvature[r][c] * diff[c];
  return g;
}

void SmoothLossProblem::validate() const {
  if (losses.empty()) throw std::invalid_argument("SmoothLossProblem: no losses");
  if (box_half <= 0.0) throw std::invalid_argument("SmoothLossProblem: box must be positive");
  const int d = dim();
  for (const Quad& q : losses) {
    if (static_cast<int>(q.minimizer.size()) != d ||
        static_cast<int>(q.curvature.size()) != d) {
      throw std::invalid_argument("SmoothLossProblem: dimension mismatch");
    }
    if (q.offset < 0.0) throw std::invalid_argument("SmoothLossProblem: losses must be >= 0");
    if (q.smoothness <= 0.0) {
      throw std::invalid_argument("SmoothLossProblem: non-smooth loss rejected");
    }
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) {
        if (std::fabs(q.curvature[r][c] - q.curvature[c][r]) > 1e-9) {
          throw std::invalid_argument("SmoothLossProblem: curvature must be symmetric");
        }
      }
    }
  }
}

SmoothLossProblem make_spd_interior_problem(int dim, double l_max_cap, Rng& rng) {
  // Random orthonormal frame via Gram-Schmidt over Gaussian vectors.
  std::vector<std::vector<double>> basis(dim, std::vector<double>(dim));
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) basis[r][c] = rng.normal();
    for (int p = 0; p < r; ++p) {
      double dot = 0.0;
      for (int c = 0; c < dim; ++c) dot += basis[r][c] * basis[p][c];
      for (int c = 0; c < dim; ++c) basis[r][c] -= dot * basis[p][c];
    }
    double norm = 0.0;
    for (int c = 0; c < dim; ++c) norm += basis[r][c] * basis[r][c];
    norm = std::sqrt(std::max(norm, 1e-12));
    for (int c = 0; c < dim; ++c) basis[r][c] /= norm;
  }
  std::vector<double> eigs(dim);
  double emax = 0.0;
  for (double& e : eigs) {
    e = rng.uniform(0.5, l_max_cap);
    emax = std::max(emax, e);
  }

  SmoothLossProblem p;
  p.box_half = 5.0;
  SmoothLossProblem::Quad q;
  q.curvature.assign(dim, std::vector<double>(dim, 0.0));
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      for (int k = 0; k < dim; ++k) q.curvature[r][c] += eigs[k] * basis[k][r] * basis[k][c];
  // Symmetrize away accumulation error.
  for (int r = 0; r < dim; ++r)
    for (int c = r + 1; c < dim; ++c) {
      const double v = 0.5 * (q.curvature[r][c] + q.curvature[c][r]);
      q.curvature[r][c] = q.curvature[c][r] = v;
    }
  q.minimizer.resize(dim);
  for (double& v : q.minimizer) v = rng.uniform(-0.6 * p.box_half, 0.6 * p.box_half);
  q.offset = 0.0;
  q.smoothness = emax;
  p.argmin = q.minimizer;
  p.optimal_value = 0.0;
  p.losses.push_back(std::move(q));
  p.validate();
  return p;
}

SmoothLossProblem make_diagonal_clamped_problem(int dim, double l_max_cap, Rng& rng) {
  SmoothLossProblem p;
  p.box_half = 5.0;
  SmoothLossProblem::Quad q;
  q.curvature.assign(dim, std::vector<double>(dim, 0.0));
  double emax = 0.0;
  for (int i = 0; i < dim; ++i) {
    q.curvature[i][i] = rng.uniform(0.5, l_max_cap);
    emax = std::max(emax, q.curvature[i][i]);
  }
  q.minimizer.resize(dim);
  for (double& v : q.minimizer) v = rng.uniform(-1.6 * p.box_half, 1.6 * p.box_half);
  q.offset = 0.0;
  q.smoothness = emax;
  // Separable objective: the box-constrained argmin clamps coordinatewise.
  p.argmin.resize(dim);
  for (int i = 0; i < dim; ++i) p.argmin[i] = std::clamp(q.minimizer[i], -p.box_half, p.box_half);
  p.losses.push_back(std::move(q));
  p.optimal_value = p.eval(0, p.argmin);
  p.validate();
  return p;
}

ConvergenceTrace theorem3_harness(const SmoothLossProblem& problem,
                                  const std::vector<double>& phi0, double tau, double clip_norm,
                                  double eps, std::int64_t max_iters) {
  problem.validate();
  if (static_cast<int>(phi0.size()) != problem.dim()) {
    throw std::invalid_argument("theorem3_harness: phi0 dimension mismatch");
  }
  if (tau <= 0.0 || clip_norm <= 0.0 || eps <= 0.0) {
    throw std::invalid_argument("theorem3_harness: tau, G, eps must be positive");
  }
  const int m_losses = static_cast<int>(problem.losses.size());
  const double g2 = clip_norm * clip_norm;

  ConvergenceTrace trace;
  {
    double d2 = 0.0;
    for (std::size_t i = 0; i < phi0.size(); ++i) {
      const double d = phi0[i] - problem.argmin[i];
      d2 += d * d;
    }
    trace.h_bound = d2 / (2.0 * tau * eps);
  }

  auto losses_at = [&](const std::vector<double>& x) {
    std::vector<double> ls(m_losses);
    for (int j = 0; j < m_losses; ++j) ls[j] = problem.eval(j, x);
    return ls;
  };
  auto dist_to_argmin = [&](const std::vector<double>& x) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - problem.argmin[i];
      d2 += d * d;
    }
    return std::sqrt(d2);
  };

  std::vector<double> phi = phi0;
  std::int64_t terminal_target = max_iters;
  int prev_jstar = -1;
  for (std::int64_t w = 0; w <= max_iters; ++w) {
    const std::vector<double> ls = losses_at(phi);
    int jstar = 0;
    for (int j = 1; j < m_losses; ++j)
      if (ls[j] > ls[jstar]) jstar = j;
    if (prev_jstar >= 0 && jstar != prev_jstar) ++trace.jstar_switches;
    prev_jstar = jstar;
    const std::vector<double> grad = problem.grad(jstar, phi);
    double gnorm = 0.0;
    for (double g : grad) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    const bool clipped = gnorm > clip_norm;
    const double f_w = gnorm > 0.0 ? std::min(1.0, clip_norm / gnorm) : 1.0;
    const double l_star_at_opt = problem.eval(jstar, problem.argmin);
    const double alpha_w = 2.0 * f_w * (l_star_at_opt - ls[jstar]) + tau * g2;

    const bool record = w < 256 || w % 512 == 0 || w == max_iters;
    if (record) {
      trace.rows.push_back({w, jstar, ls, gnorm, clipped, dist_to_argmin(phi)});
    }

    if (!trace.entered && alpha_w >= -2.0 * eps) {
      trace.entered = true;
      trace.entry_step = w;
      trace.entry_point = phi;
      trace.f_entry = f_w;
      if (!record) trace.rows.push_back({w, jstar, ls, gnorm, clipped, dist_to_argmin(phi)});
      terminal_target = std::min<std::int64_t>(max_iters, w + std::min<std::int64_t>(w, 2000) + 50);
    }
    if (trace.entered && w >= terminal_target) {
      trace.terminal_step = w;
      trace.terminal_point = phi;
      trace.f_terminal = f_w;
      if (!record) trace.rows.push_back({w, jstar, ls, gnorm, clipped, dist_to_argmin(phi)});
      break;
    }
    if (w == max_iters) {
      trace.terminal_step = w;
      trace.terminal_point = phi;
      trace.f_terminal = f_w;
      break;
    }

    // phi_{w+1} = proj_box(phi_w - tau * Clip(grad))
    const double s = clipped ? clip_norm / gnorm : 1.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      phi[i] = std::clamp(phi[i] - tau * s * grad[i], -problem.box_half, problem.box_half);
    }
  }

  trace.h_ok = trace.entered && static_cast<double>(trace.entry_step) <= trace.h_bound;
  if (trace.entered) {
    trace.region_halfwidth_entry = (2.0 * eps + tau * g2) / (2.0 * trace.f_entry);
    trace.region_halfwidth_terminal = (2.0 * eps + tau * g2) / (2.0 * trace.f_terminal);
    const auto le = losses_at(trace.entry_point);
    const auto lt = losses_at(trace.terminal_point);
    trace.bound_ok_entry = true;
    trace.bound_ok_terminal = true;
    double max_le = le[0];
    for (int j = 0; j < m_losses; ++j) {
      max_le = std::max(max_le, le[j]);
      if (le[j] > problem.optimal_value + trace.region_halfwidth_entry + 1e-9) {
        trace.bound_ok_entry = false;
      }
      if (lt[j] > problem.optimal_value + trace.region_halfwidth_terminal + 1e-9) {
        trace.bound_ok_terminal = false;
      }
    }
    trace.lower_ok = problem.optimal_value <= max_le + 1e-9;
  }
  return trace;
}

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open '" + path + "'");
  const int m_losses = trace.rows.empty() ? 0 : static_cast<int>(trace.rows[0].losses.size());
  os << "iteration,jstar";
  for (int j = 0; j < m_losses; ++j) os << ",loss_" << (j + 1);
  os << ",grad_norm,clipped,dist_to_argmin\n";
  char buf[64];
  for (const auto& row : trace.rows) {
    os << row.iter << "," << (row.jstar + 1);
    for (double l : row.losses) {
      std::snprintf(buf, sizeof(buf), "%.9g", l);
      os << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.9g", row.grad_norm);
    os << "," << buf << "," << (row.clipped ? 1 : 0);
    std::snprintf(buf, sizeof(buf), "%.9g", row.dist_to_argmin);
    os << "," << buf << "\n";
  }
}

}  // namespace decom
