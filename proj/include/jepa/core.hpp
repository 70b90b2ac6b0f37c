#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace jepa {

using Index = Eigen::Index;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

using Matf = Mat<float>;
using Matd = Mat<double>;
using Vecf = Vec<float>;
using Vecd = Vec<double>;

// A rasterized grayscale observation, intensities in [0,1]. rows = image
// rows (top to bottom), cols = image columns (left to right).
using Frame = Matf;

enum class Action : int { Left = 0, Right = 1 };
inline constexpr int kNumActions = 2;

inline int action_index(Action a) { return static_cast<int>(a); }

// Mean batch-wise embedding variance below this threshold counts as a
// representation collapse. The inequality is strict.
inline constexpr double kCollapseThreshold = 1e-7;

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : std::logic_error {
  explicit UsageError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace jepa
