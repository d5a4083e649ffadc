#pragma once

#include "decom/env.hpp"
#include "decom/rng.hpp"

namespace decom {

// Cooperative treasure collection. Hunters collect treasures and store them
// into banks; every agent moves by selecting a displacement within the
// action box. The "safe" flavor adds unsafe regions, each generating one
// indicator cost stream; the "fair" flavor charges every agent the spread
// of accumulated travel distances.
class CtcEnv : public CcmgEnv {
 public:
  explicit CtcEnv(const EnvConfig& cfg);

  const CcmgSpec& spec() const override { return spec_; }
  void reset(std::uint64_t seed) override;
  StepOutcome step(const std::vector<std::vector<double>>& joint_action) override;
  std::vector<double> observe(int agent) const override;
  std::vector<double> global_state() const override;
  int state_dim() const override;
  int time() const override { return t_; }

  // Introspection for tests and trajectory dumps.
  bool safe_mode() const { return safe_; }
  int n_hunters() const { return cfg_.n_hunters; }
  int n_banks() const { return cfg_.n_banks; }
  const std::vector<std::array<double, 2>>& positions() const { return pos_; }
  const std::vector<std::array<double, 3>>& regions() const { return regions_; }
  const std::vector<double>& travel_distance() const { return dist_; }

 private:
  struct Vec2 {
    double x, y;
  };

  void require_reset() const;
  double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) const;

  EnvConfig cfg_;
  CcmgSpec spec_;
  bool safe_ = false;

  bool has_state_ = false;
  int t_ = 0;
  std::vector<std::array<double, 2>> pos_;        // agents: hunters then banks
  std::vector<bool> cargo_;                       // hunters only
  std::vector<std::array<double, 2>> treasures_;  // active treasure positions
  std::vector<std::array<double, 3>> regions_;    // (cx, cy, radius)
  std::vector<double> dist_;                      // accumulated travel per agent
  Rng rng_{0};
};

}  // namespace decom
