#pragma once

// Test-only reference implementations. These deliberately do not reuse any
// library code paths they are meant to check.

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

struct State {
  long double x, x_dot, theta, theta_dot;
};

// Cart-pole update evaluated in long double straight from the closed-form
// equations: temp = (F + m_p l th'^2 sin) / M; th'' = (g sin - cos temp) /
// (l (4/3 - m_p cos^2 / M)); x'' = temp - m_p l th'' cos / M; explicit Euler.
inline State cartpole_step(const State& s, long double force) {
  const long double g = 9.8L, m_c = 1.0L, m_p = 0.1L, l = 0.5L, tau = 0.02L;
  const long double total = m_c + m_p;
  const long double pml = m_p * l;
  const long double st = std::sin(s.theta);
  const long double ct = std::cos(s.theta);
  const long double temp = (force + pml * s.theta_dot * s.theta_dot * st) / total;
  const long double th_acc =
      (g * st - ct * temp) / (l * (4.0L / 3.0L - m_p * ct * ct / total));
  const long double x_acc = temp - pml * th_acc * ct / total;
  return {s.x + tau * s.x_dot, s.x_dot + tau * x_acc, s.theta + tau * s.theta_dot,
          s.theta_dot + tau * th_acc};
}

// Advantage estimate by direct evaluation of the discounted delta sum,
// restarting at episode boundaries.
inline std::vector<double> gae_brute(const std::vector<double>& r,
                                     const std::vector<double>& v,
                                     const std::vector<std::uint8_t>& dones,
                                     double bootstrap, double gamma,
                                     double lambda) {
  const std::size_t n = r.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double fac = 1.0;
    double acc = 0.0;
    for (std::size_t k = t; k < n; ++k) {
      const double next_v = (k + 1 < n) ? v[k + 1] : bootstrap;
      const double not_done = dones[k] ? 0.0 : 1.0;
      const double delta = r[k] + gamma * next_v * not_done - v[k];
      acc += fac * delta;
      if (dones[k]) break;
      fac *= gamma * lambda;
    }
    adv[t] = acc;
  }
  return adv;
}

}  // namespace oracle
