#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace decom {

// Static description of a constrained cooperative Markov game instance.
struct CcmgSpec {
  int n_agents = 0;
  int cost_count = 0;  // M
  int obs_dim = 0;
  int act_dim = 0;
  double action_low = -1.0;
  double action_high = 1.0;
  int episode_len = 0;  // T
  double gamma = 0.99;
  std::vector<std::vector<int>> neighbors;  // ascending ids, no self-loops

  void validate() const;  // throws on violated invariants
  double action_half() const { return 0.5 * (action_high - action_low); }
};

struct StepOutcome {
  double team_reward = 0.0;
  std::vector<double> team_costs;                 // M entries
  std::vector<double> agent_rewards;              // N entries
  std::vector<std::vector<double>> agent_costs;   // [M][N]
  bool done = false;
};

class CcmgEnv {
 public:
  virtual ~CcmgEnv() = default;

  virtual const CcmgSpec& spec() const = 0;

  // Deterministic initial state given the seed.
  virtual void reset(std::uint64_t seed) = 0;

  // Advances dynamics. Out-of-box action coordinates are clamped, not
  // rejected. Throws on dimension mismatch.
  virtual StepOutcome step(const std::vector<std::vector<double>>& joint_action) = 0;

  virtual std::vector<double> observe(int agent) const = 0;

  virtual std::vector<double> global_state() const = 0;
  virtual int state_dim() const = 0;

  virtual int time() const = 0;

  const std::vector<int>& neighbor_ids(int agent) const;
};

// Environment construction parameters, including the geometry overrides
// exposed through the experiment config file.
struct EnvConfig {
  std::string name = "ctc_safe";  // ctc_safe | ctc_fair | cdsn

  // CTC family.
  int n_hunters = 3;
  int n_banks = 1;
  int n_treasures = 3;
  int n_regions = 3;
  int episode_len = 25;
  double arena_half = 1.0;
  double step_scale = 0.25;
  double collect_radius = 0.1;
  double deposit_radius = 0.15;
  double collision_radius = 0.05;
  double collision_penalty = -1.0;
  double collect_reward = 2.0;
  double deposit_reward = 5.0;
  double shaping_weight = 0.0;
  double region_diam_min = 0.2;
  double region_diam_max = 0.5;
  // Fixed-geometry override: (cx, cy, radius) per region; empty = random.
  std::vector<std::array<double, 3>> fixed_regions;
  // Treasure respawn box (xmin, xmax, ymin, ymax); defaults to the arena.
  std::array<double, 4> treasure_box = {-1.0, 1.0, -1.0, 1.0};
  std::array<double, 4> hunter_spawn_box = {-1.0, 1.0, -1.0, 1.0};
  // Bank start position; NaN = random.
  std::array<double, 2> bank_start = {
      std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};

  // CDSN.
  int n_sensors = 5;
  int n_objects = 4;
  double fov_deg = 30.0;
  double capture_radius = 0.5;
  double object_speed = 0.05;
  double reward_mix = 0.5;  // weight on individual vs global reward
  double cdsn_action_box = 5.0;

  // Neighbor graph: "full" (default) or "radius".
  std::string neighbor_mode = "full";
  double neighbor_radius = 2.0;

  double gamma = 0.99;

  int agents() const;
  int cost_count() const;
  void validate() const;  // throws with field paths
};

std::unique_ptr<CcmgEnv> make_env(const EnvConfig& cfg);

// Neighbor sets for n agents: fully connected, excluding self.
std::vector<std::vector<int>> full_neighbor_graph(int n);

}  // namespace decom
