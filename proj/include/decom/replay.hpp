#pragma once

#include <cstdint>
#include <vector>

#include "decom/rng.hpp"

namespace decom {

// One experience tuple (s, b, a, r, {c^j}, s'). Per-agent observations for
// both states are stored alongside so policies can be re-evaluated without
// the environment, and the in-episode timestep with running cost prefixes
// supports the per-step violation estimator.
struct Transition {
  std::vector<double> state, next_state;
  std::vector<std::vector<double>> obs, next_obs;  // per agent
  std::vector<double> base;                        // joint base actions, concatenated
  std::vector<double> action;                      // joint executed actions, concatenated
  double reward = 0.0;
  std::vector<double> costs;         // M entries
  std::vector<double> prefix_costs;  // sum of c^j over steps 0..t inclusive
  int t = 0;
  bool done = false;
};

// Fixed-capacity ring buffer with uniform without-replacement mini-batch
// sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition tr);
  std::size_t size() const { return full_ ? store_.size() : next_; }
  std::size_t capacity() const { return capacity_; }

  // L distinct uniformly-drawn transitions. Throws if L exceeds size().
  std::vector<const Transition*> sample(int batch_size, Rng& rng) const;

  const Transition& at(std::size_t i) const { return store_[i]; }

 private:
  std::size_t capacity_;
  std::vector<Transition> store_;
  std::size_t next_ = 0;
  bool full_ = false;
};

}  // namespace decom
