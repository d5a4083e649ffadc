#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decom/critic.hpp"
#include "decom/policy.hpp"
#include "decom/replay.hpp"
#include "decom/rng.hpp"

namespace decom {

// Bounds and inner-loop controls for the constraints-satisfaction step.
struct ConstraintSpec {
  std::vector<double> bounds;  // D_j
  int inner_iters = 1;         // W
  double step = 0.003;         // tau
  double clip_norm = 0.5;      // G
  double box_half = 10.0;      // projection box half-width B

  void validate() const;  // throws on violated invariants
};

// Recorded joint actions where stored base actions are constants and only
// the perturbation nets carry gradients; the violation losses differentiate
// through this into phi.
Var recomposed_actions_on_tape(Tape& tape, const DecomJointPolicy& policy,
                               const DecomJointPolicy::TapeBindings& bd,
                               const std::vector<const Transition*>& batch);

// Plain (value-only) recomposed joint actions through the current policy.
std::vector<std::vector<double>> recomposed_actions(const DecomJointPolicy& policy,
                                                    const std::vector<const Transition*>& batch);

// Squared-hinge violation at the initial time step:
//   (max(0, mean over t=0 samples of Q(s_0, a) - D))^2
// with a recomputed through the current policy. Throws on an empty batch;
// returns 0 when the batch carries no t=0 sample.
double empirical_violation_loss_initial(const CentralCritic& critic,
                                        const std::vector<const Transition*>& batch,
                                        const DecomJointPolicy& policy, double bound,
                                        int cost_index);

// Per-step violation using the backward-value decomposition
//   (max(0, E[prefix_t] + E[Q(s_t, a_t)] - E[c_t] - D))^2
// valid for episodic data in the undiscounted-cost regime. t may be 0..T;
// t == T degenerates to the purely empirical full-episode estimate.
double per_step_violation_loss(const CentralCritic& critic,
                               const std::vector<const Transition*>& batch,
                               const DecomJointPolicy& policy, double bound, int cost_index,
                               int t, int episode_len);

// max(L^0, mean over all provided per-step losses). Throws on empty input.
double combined_violation(const std::vector<double>& per_step_losses);

// Index of the largest combined violation; ties break to the lowest index.
int select_worst_constraint(const std::vector<double>& combined);

// phi' = clamp(phi - tau * Clip_G(grad), -B, B). Throws on non-finite
// gradients or non-positive tau.
std::vector<double> clipped_projected_step(const std::vector<double>& phi,
                                           const std::vector<double>& grad, double tau,
                                           double clip_norm, double box_half);

struct ViolationReport {
  std::vector<double> initial;                 // L^0_j per cost
  std::vector<std::vector<double>> per_step;   // [j][t]
  std::vector<double> combined;                // per cost
  int worst = 0;                               // j*
};

// Evaluates every cost's violation (per-step decomposition when
// use_per_step is set, initial-step form otherwise) and selects j*.
ViolationReport evaluate_violations(const std::vector<CentralCritic*>& cost_critics,
                                    bool shared_critic,
                                    const std::vector<const Transition*>& batch,
                                    const DecomJointPolicy& policy,
                                    const std::vector<double>& bounds, bool use_per_step,
                                    int episode_len);

struct InnerLoopStats {
  int steps = 0;
  int last_worst = 0;
  double last_violation = 0.0;   // combined violation of j* before the last step
  double grad_norm = 0.0;        // pre-clip norm at the last step
  bool clipped = false;
  double phi_delta_norm = 0.0;   // total parameter movement
};

// Alg-2 inner loop: W iterations of {select worst j*, clipped projected
// step on its combined violation}. Mutates the policy's perturbation
// parameters in place and keeps them inside the projection box.
InnerLoopStats run_inner_loop(DecomJointPolicy& policy,
                              const std::vector<const Transition*>& batch,
                              const ConstraintSpec& cs,
                              const std::vector<CentralCritic*>& cost_critics,
                              bool shared_critic, bool use_per_step, int episode_len);

// ---------------------------------------------------------------------------
// Synthetic smooth problems and the convergence harness.

struct SmoothLossProblem {
  // L_j(x) = 0.5 (x - m_j)' A_j (x - m_j) + c_j, A_j symmetric positive
  // definite with known largest eigenvalue (the smoothness constant).
  struct Quad {
    std::vector<std::vector<double>> curvature;  // A_j
    std::vector<double> minimizer;               // m_j
    double offset = 0.0;                         // c_j >= 0
    double smoothness = 0.0;                     // L_j
  };
  std::vector<Quad> losses;
  double box_half = 5.0;
  std::vector<double> argmin;   // known argmin over the box of max_j L_j
  double optimal_value = 0.0;   // C_k = min over box of max_j L_j

  int dim() const { return losses.empty() ? 0 : static_cast<int>(losses[0].minimizer.size()); }
  double l_max() const;
  double eval(int j, const std::vector<double>& x) const;
  std::vector<double> grad(int j, const std::vector<double>& x) const;
  void validate() const;  // rejects non-smooth/asymmetric constructions
};

SmoothLossProblem make_spd_interior_problem(int dim, double l_max_cap, Rng& rng);
SmoothLossProblem make_diagonal_clamped_problem(int dim, double l_max_cap, Rng& rng);

struct ConvergenceTrace {
  struct Row {
    std::int64_t iter;
    int jstar;
    std::vector<double> losses;
    double grad_norm;
    bool clipped;
    double dist_to_argmin;
  };
  std::vector<Row> rows;

  std::int64_t entry_step = -1;   // H_obs: first step inside the region
  double h_bound = 0.0;           // ||phi0 - phi*||^2 / (2 tau eps)
  bool entered = false;
  bool h_ok = false;

  // Residual bound under both readings of F: evaluated at the entry step
  // and at the terminal iterate.
  double f_entry = 1.0, f_terminal = 1.0;
  double region_halfwidth_entry = 0.0, region_halfwidth_terminal = 0.0;
  bool bound_ok_entry = false, bound_ok_terminal = false;
  bool lower_ok = false;  // C_k <= max_j L_j at the entry iterate

  std::vector<double> entry_point, terminal_point;
  std::int64_t terminal_step = 0;
  std::int64_t jstar_switches = 0;  // how often the worst constraint changed
};

// Runs the exact-loss variant of the inner loop (unbounded W) and verifies
// the convergence bound. max_iters caps the run; entry is detected with the
// proof's criterion alpha_w >= -2 eps.
ConvergenceTrace theorem3_harness(const SmoothLossProblem& problem,
                                  const std::vector<double>& phi0, double tau, double clip_norm,
                                  double eps, std::int64_t max_iters);

void write_trace_csv(const ConvergenceTrace& trace, const std::string& path);

}  // namespace decom
