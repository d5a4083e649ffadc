#pragma once

#include "decom/env.hpp"
#include "decom/rng.hpp"

namespace decom {

// Constrained directional sensor network: fixed sensors rotate their field
// of view to capture moving objects. The adjustment applied each step is
// charged as an operational cost. Objects follow constant-velocity motion
// with reflective walls.
class CdsnEnv : public CcmgEnv {
 public:
  explicit CdsnEnv(const EnvConfig& cfg);

  const CcmgSpec& spec() const override { return spec_; }
  void reset(std::uint64_t seed) override;
  StepOutcome step(const std::vector<std::vector<double>>& joint_action) override;
  std::vector<double> observe(int agent) const override;
  std::vector<double> global_state() const override;
  int state_dim() const override;
  int time() const override { return t_; }

  const std::vector<double>& angles() const { return angle_; }
  const std::vector<std::array<double, 2>>& sensor_positions() const { return sensor_pos_; }

 private:
  void require_reset() const;
  bool captures(int sensor, int object) const;
  static double wrap_angle(double a);

  EnvConfig cfg_;
  CcmgSpec spec_;
  double fov_rad_ = 0.0;

  bool has_state_ = false;
  int t_ = 0;
  std::vector<std::array<double, 2>> sensor_pos_;  // fixed deployment
  std::vector<double> angle_;
  std::vector<std::array<double, 2>> obj_pos_;
  std::vector<std::array<double, 2>> obj_vel_;
  Rng rng_{0};
};

}  // namespace decom
