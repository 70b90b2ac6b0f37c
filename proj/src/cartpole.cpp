#include "jepa/cartpole.hpp"

#include <cmath>

namespace jepa {

using namespace cartpole;

bool alive(const CartState& s) {
  return std::abs(s.x) <= kXThreshold && std::abs(s.theta) <= kThetaThreshold;
}

CartState reset_state(Rng& rng) {
  CartState s;
  s.x = rng.uniform(-0.05, 0.05);
  s.x_dot = rng.uniform(-0.05, 0.05);
  s.theta = rng.uniform(-0.05, 0.05);
  s.theta_dot = rng.uniform(-0.05, 0.05);
  return s;
}

StepResult step(const CartState& s, Action action) {
  const double force = action == Action::Right ? kForceMag : -kForceMag;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);

  const double temp =
      (force + kPoleMassLength * s.theta_dot * s.theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  StepResult r;
  r.next_state.x = s.x + kTau * s.x_dot;
  r.next_state.x_dot = s.x_dot + kTau * x_acc;
  r.next_state.theta = s.theta + kTau * s.theta_dot;
  r.next_state.theta_dot = s.theta_dot + kTau * theta_acc;

  const bool was_alive = alive(s);
  r.reward = was_alive ? 1.0 : 0.0;
  r.terminated = !was_alive || !alive(r.next_state);
  r.truncated = false;
  return r;
}

CartState CartPoleEnv::reset() {
  state_ = reset_state(rng_);
  steps_ = 0;
  done_ = false;
  return state_;
}

StepResult CartPoleEnv::step(Action action) {
  StepResult r = jepa::step(state_, action);
  state_ = r.next_state;
  ++steps_;
  if (!r.terminated && steps_ >= max_episode_steps_) r.truncated = true;
  done_ = r.terminated || r.truncated;
  return r;
}

}  // namespace jepa
