#pragma once

#include <cstdint>
#include <vector>

#include "jepa/core.hpp"

namespace jepa {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over one trajectory segment.
// delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t, with v at the end of
// the segment supplied by bootstrap_value; advantage_t follows the usual
// backward recursion and returns_t = advantage_t + v_t.
inline GaeResult compute_gae(const std::vector<double>& rewards,
                             const std::vector<double>& values,
                             const std::vector<std::uint8_t>& dones,
                             double bootstrap_value, double gamma,
                             double lambda) {
  const std::size_t n = rewards.size();
  if (n == 0) throw UsageError("compute_gae: empty rollout");
  if (values.size() != n || dones.size() != n)
    throw UsageError("compute_gae: length mismatch");

  GaeResult out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const double not_done = dones[i] ? 0.0 : 1.0;
    const double next_v = (i + 1 < n) ? values[i + 1] : bootstrap_value;
    const double delta = rewards[i] + gamma * next_v * not_done - values[i];
    acc = delta + gamma * lambda * not_done * acc;
    out.advantages[i] = acc;
    out.returns[i] = acc + values[i];
  }
  return out;
}

// In-place zero-mean / unit-std normalization (population std).
inline void normalize_advantages(std::vector<double>& adv, double eps = 1e-8) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  const double denom = std::sqrt(var) + eps;
  for (double& a : adv) a = (a - mean) / denom;
}

}  // namespace jepa
