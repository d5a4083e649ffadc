#include "decom/env_cdsn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decom {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

CdsnEnv::CdsnEnv(const EnvConfig& cfg) : cfg_(cfg) {
  spec_.n_agents = cfg_.n_sensors;
  spec_.cost_count = 1;
  spec_.act_dim = 1;
  spec_.action_low = -cfg_.cdsn_action_box;
  spec_.action_high = cfg_.cdsn_action_box;
  spec_.episode_len = cfg_.episode_len;
  spec_.gamma = cfg_.gamma;
  spec_.obs_dim = 2 + 3 * cfg_.n_objects;
  spec_.neighbors = full_neighbor_graph(cfg_.n_sensors);
  spec_.validate();
  fov_rad_ = cfg_.fov_deg * kPi / 180.0;

  // Fixed deployment on a circle; independent of the episode seed.
  sensor_pos_.resize(cfg_.n_sensors);
  for (int i = 0; i < cfg_.n_sensors; ++i) {
    const double a = 2.0 * kPi * i / cfg_.n_sensors;
    sensor_pos_[i] = {0.6 * std::cos(a), 0.6 * std::sin(a)};
  }
}

double CdsnEnv::wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a < -kPi) a += 2.0 * kPi;
  return a;
}

void CdsnEnv::require_reset() const {
  if (!has_state_) throw std::logic_error("CdsnEnv: reset() must be called before use");
}

void CdsnEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  angle_.resize(cfg_.n_sensors);
  for (double& a : angle_) a = rng_.uniform(-kPi, kPi);
  obj_pos_.resize(cfg_.n_objects);
  obj_vel_.resize(cfg_.n_objects);
  for (int k = 0; k < cfg_.n_objects; ++k) {
    obj_pos_[k] = {rng_.uniform(-0.9, 0.9), rng_.uniform(-0.9, 0.9)};
    const double dir = rng_.uniform(-kPi, kPi);
    obj_vel_[k] = {cfg_.object_speed * std::cos(dir), cfg_.object_speed * std::sin(dir)};
  }
  t_ = 0;
  has_state_ = true;
}

bool CdsnEnv::captures(int sensor, int object) const {
  const double dx = obj_pos_[object][0] - sensor_pos_[sensor][0];
  const double dy = obj_pos_[object][1] - sensor_pos_[sensor][1];
  const double d2 = dx * dx + dy * dy;
  if (d2 > cfg_.capture_radius * cfg_.capture_radius) return false;
  const double bearing = std::atan2(dy, dx);
  return std::fabs(wrap_angle(bearing - angle_[sensor])) <= fov_rad_;
}

StepOutcome CdsnEnv::step(const std::vector<std::vector<double>>& joint_action) {
  require_reset();
  const int n = spec_.n_agents;
  if (static_cast<int>(joint_action.size()) != n) {
    throw std::invalid_argument("CdsnEnv::step: expected one action per agent");
  }
  std::vector<double> adj(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(joint_action[i].size()) != 1) {
      throw std::invalid_argument("CdsnEnv::step: action dim mismatch for agent " +
                                  std::to_string(i));
    }
    adj[i] = std::clamp(joint_action[i][0], spec_.action_low, spec_.action_high);
  }

  for (int i = 0; i < n; ++i) angle_[i] = wrap_angle(angle_[i] + adj[i] * kPi / 180.0);

  for (int k = 0; k < cfg_.n_objects; ++k) {
    for (int d = 0; d < 2; ++d) {
      obj_pos_[k][d] += obj_vel_[k][d];
      if (obj_pos_[k][d] > 1.0) {
        obj_pos_[k][d] = 2.0 - obj_pos_[k][d];
        obj_vel_[k][d] = -obj_vel_[k][d];
      } else if (obj_pos_[k][d] < -1.0) {
        obj_pos_[k][d] = -2.0 - obj_pos_[k][d];
        obj_vel_[k][d] = -obj_vel_[k][d];
      }
    }
  }

  StepOutcome out;
  out.agent_rewards.assign(n, 0.0);
  out.agent_costs.assign(1, std::vector<double>(n, 0.0));

  std::vector<bool> covered(cfg_.n_objects, false);
  std::vector<int> captured_by(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < cfg_.n_objects; ++k) {
      if (captures(i, k)) {
        ++captured_by[i];
        covered[k] = true;
      }
    }
  }
  int total_covered = 0;
  for (bool c : covered)
    if (c) ++total_covered;
  const double ratio = static_cast<double>(total_covered) / cfg_.n_objects;

  for (int i = 0; i < n; ++i) {
    out.agent_rewards[i] = cfg_.reward_mix * captured_by[i] + (1.0 - cfg_.reward_mix) * ratio;
    out.agent_costs[0][i] = std::fabs(adj[i]);
  }

  double rsum = 0.0, csum = 0.0;
  for (int i = 0; i < n; ++i) {
    rsum += out.agent_rewards[i];
    csum += out.agent_costs[0][i];
  }
  out.team_reward = rsum / n;
  out.team_costs = {csum / n};

  ++t_;
  out.done = t_ >= spec_.episode_len;
  return out;
}

std::vector<double> CdsnEnv::observe(int agent) const {
  require_reset();
  if (agent < 0 || agent >= spec_.n_agents) {
    throw std::out_of_range("CdsnEnv::observe: invalid agent id " + std::to_string(agent));
  }
  std::vector<double> obs;
  obs.reserve(spec_.obs_dim);
  obs.push_back(std::sin(angle_[agent]));
  obs.push_back(std::cos(angle_[agent]));
  for (int k = 0; k < cfg_.n_objects; ++k) {
    if (captures(agent, k)) {
      const double dx = obj_pos_[k][0] - sensor_pos_[agent][0];
      const double dy = obj_pos_[k][1] - sensor_pos_[agent][1];
      obs.push_back(1.0);
      obs.push_back(wrap_angle(std::atan2(dy, dx) - angle_[agent]) / kPi);
      obs.push_back(std::sqrt(dx * dx + dy * dy) / cfg_.capture_radius);
    } else {
      obs.push_back(0.0);
      obs.push_back(0.0);
      obs.push_back(0.0);
    }
  }
  return obs;
}

std::vector<double> CdsnEnv::global_state() const {
  require_reset();
  std::vector<double> s;
  s.reserve(state_dim());
  for (double a : angle_) {
    s.push_back(std::sin(a));
    s.push_back(std::cos(a));
  }
  for (int k = 0; k < cfg_.n_objects; ++k) {
    s.push_back(obj_pos_[k][0]);
    s.push_back(obj_pos_[k][1]);
    s.push_back(obj_vel_[k][0] / std::max(cfg_.object_speed, 1e-9));
    s.push_back(obj_vel_[k][1] / std::max(cfg_.object_speed, 1e-9));
  }
  s.push_back(static_cast<double>(t_) / spec_.episode_len);
  return s;
}

int CdsnEnv::state_dim() const { return 2 * cfg_.n_sensors + 4 * cfg_.n_objects + 1; }

}  // namespace decom
