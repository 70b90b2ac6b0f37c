#pragma once

#include "jepa/core.hpp"
#include "jepa/rng.hpp"

namespace jepa {

// Physical state of the cart-pole system. Hidden from the agent; only the
// simulator and diagnostics read it.
struct CartState {
  double x = 0.0;         // cart position (m)
  double x_dot = 0.0;     // cart velocity (m/s)
  double theta = 0.0;     // pole angle from vertical (rad)
  double theta_dot = 0.0; // pole angular velocity (rad/s)
};

struct StepResult {
  CartState next_state;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kTotalMass = kCartMass + kPoleMass;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kPoleMassLength = kPoleMass * kHalfLength;
inline constexpr double kForceMag = 10.0;
inline constexpr double kTau = 0.02;
inline constexpr double kThetaThreshold = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr double kXThreshold = 2.4;
inline constexpr int kMaxEpisodeSteps = 500;
}  // namespace cartpole

bool alive(const CartState& s);

// Initial state: all four fields i.i.d. uniform in [-0.05, 0.05].
CartState reset_state(Rng& rng);

// One step of explicit Euler dynamics. Reward is 1 for a step taken from a
// live state and 0 once the episode has already terminated. Truncation is
// tracked by CartPoleEnv, not here.
StepResult step(const CartState& s, Action action);

// Stateful episode wrapper: owns the reset stream and the step counter used
// for truncation at max_episode_steps.
class CartPoleEnv {
 public:
  explicit CartPoleEnv(std::uint64_t seed, int max_episode_steps = cartpole::kMaxEpisodeSteps)
      : rng_(seed), max_episode_steps_(max_episode_steps) {}

  CartState reset();
  StepResult step(Action action);

  // Exact state restore for checkpoint resume.
  void restore(const CartState& s, int steps, bool done = false) {
    state_ = s;
    steps_ = steps;
    done_ = done;
  }

  const CartState& state() const { return state_; }
  int episode_steps() const { return steps_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  Rng rng_;
  CartState state_;
  int max_episode_steps_ = cartpole::kMaxEpisodeSteps;
  int steps_ = 0;
  bool done_ = true;
};

}  // namespace jepa
