#include "decom/env_ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace decom {

CtcEnv::CtcEnv(const EnvConfig& cfg) : cfg_(cfg), safe_(cfg.name == "ctc_safe") {
  const int n = cfg_.n_hunters + cfg_.n_banks;
  spec_.n_agents = n;
  spec_.cost_count = safe_ ? cfg_.n_regions : 1;
  spec_.act_dim = 2;
  spec_.action_low = -1.0;
  spec_.action_high = 1.0;
  spec_.episode_len = cfg_.episode_len;
  spec_.gamma = cfg_.gamma;
  spec_.obs_dim = 2 + 2 * (n - 1) + 2 * cfg_.n_treasures + 1 + (safe_ ? 3 * cfg_.n_regions : 0);
  if (cfg_.neighbor_mode == "full") {
    spec_.neighbors = full_neighbor_graph(n);
  } else {
    // Radius graphs are rebuilt per reset from initial positions; they stay
    // stable within an episode.
    spec_.neighbors = full_neighbor_graph(n);
  }
  spec_.validate();
}

void CtcEnv::require_reset() const {
  if (!has_state_) throw std::logic_error("CtcEnv: reset() must be called before use");
}

double CtcEnv::dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) const {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

void CtcEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  const int n = spec_.n_agents;
  pos_.assign(n, {0.0, 0.0});
  for (int i = 0; i < cfg_.n_hunters; ++i) {
    pos_[i] = {rng_.uniform(cfg_.hunter_spawn_box[0], cfg_.hunter_spawn_box[1]),
               rng_.uniform(cfg_.hunter_spawn_box[2], cfg_.hunter_spawn_box[3])};
  }
  for (int b = 0; b < cfg_.n_banks; ++b) {
    const int i = cfg_.n_hunters + b;
    if (std::isnan(cfg_.bank_start[0])) {
      pos_[i] = {rng_.uniform(-cfg_.arena_half, cfg_.arena_half),
                 rng_.uniform(-cfg_.arena_half, cfg_.arena_half)};
    } else {
      pos_[i] = {cfg_.bank_start[0], cfg_.bank_start[1]};
    }
  }
  cargo_.assign(cfg_.n_hunters, false);
  treasures_.assign(cfg_.n_treasures, {0.0, 0.0});
  for (auto& t : treasures_) {
    t = {rng_.uniform(cfg_.treasure_box[0], cfg_.treasure_box[1]),
         rng_.uniform(cfg_.treasure_box[2], cfg_.treasure_box[3])};
  }
  regions_.clear();
  if (safe_) {
    if (!cfg_.fixed_regions.empty()) {
      for (const auto& r : cfg_.fixed_regions) regions_.push_back(r);
    } else {
      for (int j = 0; j < cfg_.n_regions; ++j) {
        const double radius = 0.5 * rng_.uniform(cfg_.region_diam_min, cfg_.region_diam_max);
        const double lim = std::max(0.0, cfg_.arena_half - radius);
        regions_.push_back({rng_.uniform(-lim, lim), rng_.uniform(-lim, lim), radius});
      }
    }
  }
  dist_.assign(n, 0.0);
  if (cfg_.neighbor_mode == "radius") {
    spec_.neighbors.assign(n, {});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i && dist2(pos_[i], pos_[j]) <= cfg_.neighbor_radius * cfg_.neighbor_radius)
          spec_.neighbors[i].push_back(j);
  }
  t_ = 0;
  has_state_ = true;
}

StepOutcome CtcEnv::step(const std::vector<std::vector<double>>& joint_action) {
  require_reset();
  const int n = spec_.n_agents;
  if (static_cast<int>(joint_action.size()) != n) {
    throw std::invalid_argument("CtcEnv::step: expected one action per agent");
  }
  std::vector<std::array<double, 2>> act(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(joint_action[i].size()) != spec_.act_dim) {
      throw std::invalid_argument("CtcEnv::step: action dim mismatch for agent " +
                                  std::to_string(i));
    }
    act[i] = {std::clamp(joint_action[i][0], spec_.action_low, spec_.action_high),
              std::clamp(joint_action[i][1], spec_.action_low, spec_.action_high)};
  }

  StepOutcome out;
  out.agent_rewards.assign(n, 0.0);
  out.agent_costs.assign(spec_.cost_count, std::vector<double>(n, 0.0));

  for (int i = 0; i < n; ++i) {
    pos_[i][0] = std::clamp(pos_[i][0] + cfg_.step_scale * act[i][0], -cfg_.arena_half,
                            cfg_.arena_half);
    pos_[i][1] = std::clamp(pos_[i][1] + cfg_.step_scale * act[i][1], -cfg_.arena_half,
                            cfg_.arena_half);
    dist_[i] += std::sqrt(act[i][0] * act[i][0] + act[i][1] * act[i][1]);
  }

  for (int i = 0; i < cfg_.n_hunters; ++i) {
    for (int j = i + 1; j < cfg_.n_hunters; ++j) {
      if (dist2(pos_[i], pos_[j]) <= cfg_.collision_radius * cfg_.collision_radius) {
        out.agent_rewards[i] += cfg_.collision_penalty;
        out.agent_rewards[j] += cfg_.collision_penalty;
      }
    }
  }

  for (int i = 0; i < cfg_.n_hunters; ++i) {
    if (cargo_[i]) continue;
    int best = -1;
    double best_d2 = cfg_.collect_radius * cfg_.collect_radius;
    for (int k = 0; k < cfg_.n_treasures; ++k) {
      const double d2 = dist2(pos_[i], treasures_[k]);
      if (d2 <= best_d2) {
        best = k;
        best_d2 = d2;
      }
    }
    if (best >= 0) {
      cargo_[i] = true;
      out.agent_rewards[i] += cfg_.collect_reward;
      treasures_[best] = {rng_.uniform(cfg_.treasure_box[0], cfg_.treasure_box[1]),
                          rng_.uniform(cfg_.treasure_box[2], cfg_.treasure_box[3])};
    }
  }

  int deposits = 0;
  for (int i = 0; i < cfg_.n_hunters; ++i) {
    if (!cargo_[i]) continue;
    for (int b = 0; b < cfg_.n_banks; ++b) {
      if (dist2(pos_[i], pos_[cfg_.n_hunters + b]) <= cfg_.deposit_radius * cfg_.deposit_radius) {
        cargo_[i] = false;
        ++deposits;
        break;
      }
    }
  }
  if (deposits > 0) {
    for (int i = 0; i < n; ++i) out.agent_rewards[i] += cfg_.deposit_reward * deposits;
  }

  if (cfg_.shaping_weight > 0.0) {
    for (int i = 0; i < cfg_.n_hunters; ++i) {
      double best_d2 = std::numeric_limits<double>::infinity();
      if (cargo_[i]) {
        for (int b = 0; b < cfg_.n_banks; ++b)
          best_d2 = std::min(best_d2, dist2(pos_[i], pos_[cfg_.n_hunters + b]));
      } else {
        for (const auto& t : treasures_) best_d2 = std::min(best_d2, dist2(pos_[i], t));
      }
      if (std::isfinite(best_d2)) {
        out.agent_rewards[i] -= cfg_.shaping_weight * std::sqrt(best_d2) / cfg_.arena_half;
      }
    }
    for (int b = 0; b < cfg_.n_banks; ++b) {
      const int i = cfg_.n_hunters + b;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int h = 0; h < cfg_.n_hunters; ++h)
        if (cargo_[h]) best_d2 = std::min(best_d2, dist2(pos_[i], pos_[h]));
      if (std::isfinite(best_d2)) {
        out.agent_rewards[i] -= cfg_.shaping_weight * std::sqrt(best_d2) / cfg_.arena_half;
      }
    }
  }

  if (safe_) {
    for (int j = 0; j < cfg_.n_regions; ++j) {
      const std::array<double, 2> c = {regions_[j][0], regions_[j][1]};
      const double r2 = regions_[j][2] * regions_[j][2];
      for (int i = 0; i < n; ++i) out.agent_costs[j][i] = dist2(pos_[i], c) <= r2 ? 1.0 : 0.0;
    }
  } else {
    const auto [lo, hi] = std::minmax_element(dist_.begin(), dist_.end());
    const double spread = *hi - *lo;
    for (int i = 0; i < n; ++i) out.agent_costs[0][i] = spread;
  }

  double rsum = 0.0;
  for (double r : out.agent_rewards) rsum += r;
  out.team_reward = rsum / n;
  out.team_costs.assign(spec_.cost_count, 0.0);
  for (int j = 0; j < spec_.cost_count; ++j) {
    double csum = 0.0;
    for (double c : out.agent_costs[j]) csum += c;
    out.team_costs[j] = csum / n;
  }

  ++t_;
  out.done = t_ >= spec_.episode_len;
  return out;
}

std::vector<double> CtcEnv::observe(int agent) const {
  require_reset();
  if (agent < 0 || agent >= spec_.n_agents) {
    throw std::out_of_range("CtcEnv::observe: invalid agent id " + std::to_string(agent));
  }
  const double inv = 1.0 / cfg_.arena_half;
  std::vector<double> obs;
  obs.reserve(spec_.obs_dim);
  obs.push_back(pos_[agent][0] * inv);
  obs.push_back(pos_[agent][1] * inv);
  for (int j = 0; j < spec_.n_agents; ++j) {
    if (j == agent) continue;
    obs.push_back((pos_[j][0] - pos_[agent][0]) * inv);
    obs.push_back((pos_[j][1] - pos_[agent][1]) * inv);
  }
  for (const auto& t : treasures_) {
    obs.push_back((t[0] - pos_[agent][0]) * inv);
    obs.push_back((t[1] - pos_[agent][1]) * inv);
  }
  obs.push_back(agent < cfg_.n_hunters && cargo_[agent] ? 1.0 : 0.0);
  if (safe_) {
    for (const auto& r : regions_) {
      obs.push_back((r[0] - pos_[agent][0]) * inv);
      obs.push_back((r[1] - pos_[agent][1]) * inv);
      obs.push_back(r[2] * inv);
    }
  }
  return obs;
}

std::vector<double> CtcEnv::global_state() const {
  require_reset();
  const double inv = 1.0 / cfg_.arena_half;
  std::vector<double> s;
  s.reserve(state_dim());
  for (const auto& p : pos_) {
    s.push_back(p[0] * inv);
    s.push_back(p[1] * inv);
  }
  for (int i = 0; i < cfg_.n_hunters; ++i) s.push_back(cargo_[i] ? 1.0 : 0.0);
  for (const auto& t : treasures_) {
    s.push_back(t[0] * inv);
    s.push_back(t[1] * inv);
  }
  if (safe_) {
    for (const auto& r : regions_) {
      s.push_back(r[0] * inv);
      s.push_back(r[1] * inv);
      s.push_back(r[2] * inv);
    }
  } else {
    for (double d : dist_) s.push_back(d / spec_.episode_len);
  }
  s.push_back(static_cast<double>(t_) / spec_.episode_len);
  return s;
}

int CtcEnv::state_dim() const {
  return 2 * spec_.n_agents + cfg_.n_hunters + 2 * cfg_.n_treasures +
         (safe_ ? 3 * cfg_.n_regions : spec_.n_agents) + 1;
}

}  // namespace decom
