#include "decom/env.hpp"

#include <cmath>
#include <stdexcept>

#include "decom/env_cdsn.hpp"
#include "decom/env_ctc.hpp"

namespace decom {

void CcmgSpec::validate() const {
  if (n_agents < 1) throw std::invalid_argument("CcmgSpec: n_agents must be >= 1");
  if (cost_count < 1) throw std::invalid_argument("CcmgSpec: cost_count must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("CcmgSpec: gamma must be in [0,1]");
  if (static_cast<int>(neighbors.size()) != n_agents) {
    throw std::invalid_argument("CcmgSpec: neighbor list size mismatch");
  }
  for (int i = 0; i < n_agents; ++i) {
    int prev = -1;
    for (int j : neighbors[i]) {
      if (j == i) throw std::invalid_argument("CcmgSpec: self-loop in neighbor graph");
      if (j < 0 || j >= n_agents) throw std::invalid_argument("CcmgSpec: neighbor id out of range");
      if (j <= prev) throw std::invalid_argument("CcmgSpec: neighbor ids must be ascending");
      prev = j;
    }
  }
}

const std::vector<int>& CcmgEnv::neighbor_ids(int agent) const {
  const CcmgSpec& s = spec();
  if (agent < 0 || agent >= s.n_agents) {
    throw std::out_of_range("neighbor_ids: invalid agent id " + std::to_string(agent));
  }
  return s.neighbors[agent];
}

int EnvConfig::agents() const {
  if (name == "cdsn") return n_sensors;
  return n_hunters + n_banks;
}

int EnvConfig::cost_count() const {
  if (name == "ctc_safe") return n_regions;
  return 1;  // ctc_fair: unfairness; cdsn: operational cost
}

void EnvConfig::validate() const {
  if (name != "ctc_safe" && name != "ctc_fair" && name != "cdsn") {
    throw std::invalid_argument("env.name: unknown environment '" + name + "'");
  }
  if (episode_len < 1) throw std::invalid_argument("env.episode_len: must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("env.gamma: must be in [0,1]");
  if (name == "cdsn") {
    if (n_sensors < 1) throw std::invalid_argument("env.n_sensors: must be >= 1");
    if (n_objects < 1) throw std::invalid_argument("env.n_objects: must be >= 1");
    if (cdsn_action_box <= 0.0) throw std::invalid_argument("env.cdsn_action_box: must be > 0");
  } else {
    if (n_hunters < 1) throw std::invalid_argument("env.n_hunters: must be >= 1");
    if (n_banks < 0) throw std::invalid_argument("env.n_banks: must be >= 0");
    if (n_hunters + n_banks < 1) throw std::invalid_argument("env: no agents declared");
    if (n_treasures < 1) throw std::invalid_argument("env.n_treasures: must be >= 1");
    if (name == "ctc_safe" && n_regions < 1) {
      throw std::invalid_argument("env.n_regions: must be >= 1 for ctc_safe");
    }
    if (!fixed_regions.empty() && static_cast<int>(fixed_regions.size()) != n_regions) {
      throw std::invalid_argument("env.fixed_regions: entry count must equal env.n_regions");
    }
    if (arena_half <= 0.0) throw std::invalid_argument("env.arena_half: must be > 0");
    if (step_scale <= 0.0) throw std::invalid_argument("env.step_scale: must be > 0");
    if (region_diam_min <= 0.0 || region_diam_max < region_diam_min) {
      throw std::invalid_argument("env.region_diam_min/max: need 0 < min <= max");
    }
  }
  if (neighbor_mode != "full" && neighbor_mode != "radius") {
    throw std::invalid_argument("env.neighbor_mode: must be 'full' or 'radius'");
  }
}

std::vector<std::vector<int>> full_neighbor_graph(int n) {
  std::vector<std::vector<int>> g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) g[i].push_back(j);
  return g;
}

std::unique_ptr<CcmgEnv> make_env(const EnvConfig& cfg) {
  cfg.validate();
  if (cfg.name == "cdsn") return std::make_unique<CdsnEnv>(cfg);
  return std::make_unique<CtcEnv>(cfg);
}

}  // namespace decom
