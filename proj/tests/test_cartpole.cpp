#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "jepa/cartpole.hpp"
#include "jepa/render.hpp"
#include "oracles.hpp"

using namespace jepa;

namespace {

CartState negate(const CartState& s) {
  return {-s.x, -s.x_dot, -s.theta, -s.theta_dot};
}

bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

}  // namespace

TEST_CASE("reset is deterministic and inside the live region") {
  Rng a(42), b(42);
  const CartState s1 = reset_state(a);
  const CartState s2 = reset_state(b);
  CHECK(s1.x == s2.x);
  CHECK(s1.x_dot == s2.x_dot);
  CHECK(s1.theta == s2.theta);
  CHECK(s1.theta_dot == s2.theta_dot);

  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const CartState s = reset_state(rng);
    CHECK(alive(s));
    CHECK(std::abs(s.x) <= 0.05);
    CHECK(std::abs(s.x_dot) <= 0.05);
    CHECK(std::abs(s.theta) <= 0.05);
    CHECK(std::abs(s.theta_dot) <= 0.05);
  }
}

TEST_CASE("reset fields average to zero over 10k draws") {
  Rng rng(123);
  double mx = 0, mxd = 0, mt = 0, mtd = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const CartState s = reset_state(rng);
    mx += s.x;
    mxd += s.x_dot;
    mt += s.theta;
    mtd += s.theta_dot;
  }
  CHECK(std::abs(mx / n) < 0.005);
  CHECK(std::abs(mxd / n) < 0.005);
  CHECK(std::abs(mt / n) < 0.005);
  CHECK(std::abs(mtd / n) < 0.005);
}

TEST_CASE("step from the origin matches the closed-form values") {
  const StepResult r = step(CartState{}, Action::Right);
  // temp = 100/11, th_acc = -600/41, x_acc = 400/41 at theta = 0
  CHECK(r.next_state.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.next_state.x_dot == doctest::Approx(8.0 / 41.0).epsilon(1e-12));
  CHECK(r.next_state.theta == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.next_state.theta_dot == doctest::Approx(-12.0 / 41.0).epsilon(1e-12));
  CHECK(r.reward == 1.0);
  CHECK_FALSE(r.terminated);
}

TEST_CASE("left and right forces mirror each other exactly") {
  const StepResult r = step(CartState{}, Action::Right);
  const StepResult l = step(CartState{}, Action::Left);
  CHECK(r.next_state.x == -l.next_state.x);
  CHECK(r.next_state.x_dot == -l.next_state.x_dot);
  CHECK(r.next_state.theta == -l.next_state.theta);
  CHECK(r.next_state.theta_dot == -l.next_state.theta_dot);
}

TEST_CASE("a dead state stays terminated and earns nothing") {
  CartState s;
  s.theta = 0.3;  // beyond the 12 degree threshold
  for (Action a : {Action::Left, Action::Right}) {
    const StepResult r = step(s, a);
    CHECK(r.terminated);
    CHECK(r.reward == 0.0);
  }
}

TEST_CASE("physics matches the independent oracle on 100 random inputs") {
  Rng rng(99);
  for (int i = 0; i < 100; ++i) {
    CartState s;
    s.x = rng.uniform(-2.0, 2.0);
    s.x_dot = rng.uniform(-3.0, 3.0);
    s.theta = rng.uniform(-0.2, 0.2);
    s.theta_dot = rng.uniform(-3.0, 3.0);
    const Action a = rng.uniform() < 0.5 ? Action::Left : Action::Right;
    const StepResult got = step(s, a);
    const oracle::State want = oracle::cartpole_step(
        {s.x, s.x_dot, s.theta, s.theta_dot}, a == Action::Right ? 10.0L : -10.0L);
    CHECK(close_rel(got.next_state.x, static_cast<double>(want.x), 1e-12));
    CHECK(close_rel(got.next_state.x_dot, static_cast<double>(want.x_dot), 1e-12));
    CHECK(close_rel(got.next_state.theta, static_cast<double>(want.theta), 1e-12));
    CHECK(close_rel(got.next_state.theta_dot, static_cast<double>(want.theta_dot), 1e-12));
  }
}

TEST_CASE("an always-left policy ends deterministically before truncation") {
  auto run = [] {
    CartPoleEnv env(5);
    env.reset();
    int steps = 0;
    for (;;) {
      const StepResult r = env.step(Action::Left);
      ++steps;
      if (r.terminated || r.truncated) return std::pair(steps, r.truncated);
    }
  };
  const auto [len1, trunc1] = run();
  const auto [len2, trunc2] = run();
  CHECK(len1 == len2);
  CHECK(len1 < 500);
  CHECK_FALSE(trunc1);
  CHECK(trunc1 == trunc2);
}

TEST_CASE("episodes truncate at the step limit") {
  CartPoleEnv env(11, /*max_episode_steps=*/3);
  env.reset();
  StepResult r = env.step(Action::Left);
  CHECK_FALSE(r.truncated);
  r = env.step(Action::Right);
  CHECK_FALSE(r.truncated);
  r = env.step(Action::Left);
  CHECK(r.truncated);
  CHECK_FALSE(r.terminated);
  CHECK(r.reward == 1.0);
}

// --- rendering ---

TEST_CASE("zero state renders a centered cart and a vertical pole") {
  const Frame f = render(CartState{});
  CHECK(f.rows() == 84);
  CHECK(f.cols() == 84);
  CHECK(f.minCoeff() >= 0.0f);
  CHECK(f.maxCoeff() <= 1.0f);

  // horizontal symmetry of pixel mass about the 41.5 center column
  double mass = 0, moment = 0;
  for (Index r = 0; r < f.rows(); ++r)
    for (Index c = 0; c < f.cols(); ++c) {
      mass += f(r, c);
      moment += f(r, c) * (static_cast<double>(c) - 41.5);
    }
  CHECK(mass > 0);
  CHECK(std::abs(moment / mass) < 1e-9);

  // pole pixels (full intensity) sit in the four center columns
  std::set<Index> pole_cols;
  for (Index r = 0; r < f.rows(); ++r)
    for (Index c = 0; c < f.cols(); ++c)
      if (f(r, c) == 1.0f) pole_cols.insert(c);
  CHECK(!pole_cols.empty());
  for (Index c : pole_cols) {
    CHECK(c >= 40);
    CHECK(c <= 43);
  }
}

TEST_CASE("rendering ignores velocities and is bit-deterministic") {
  CartState a;
  a.x = 0.7;
  a.theta = -0.1;
  CartState b = a;
  b.x_dot = 2.5;
  b.theta_dot = -3.0;
  const Frame fa = render(a);
  const Frame fb = render(b);
  CHECK(fa == fb);
  CHECK(render(a) == fa);
}

namespace {

// Mirrored comparison with a one-pixel tolerance: every differing pixel must
// find its value within the 1-neighborhood of the mirrored image.
bool mirror_close(const Frame& a, const Frame& b) {
  const Index n = a.cols();
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < n; ++c) {
      const float want = a(r, c);
      bool ok = false;
      for (Index dc = -1; dc <= 1 && !ok; ++dc) {
        for (Index dr = -1; dr <= 1 && !ok; ++dr) {
          const Index mc = n - 1 - c + dc;
          const Index mr = r + dr;
          if (mc < 0 || mc >= n || mr < 0 || mr >= a.rows()) continue;
          if (b(mr, mc) == want) ok = true;
        }
      }
      if (!ok) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("mirroring the state mirrors the frame") {
  // exact at x = 0 where the cart center sits between the two middle columns
  CartState c;
  c.theta = 0.17;
  const Frame f = render(c);
  const Frame g = render(negate(c));
  CHECK(f == g.rowwise().reverse());

  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    CartState s;
    s.x = rng.uniform(-2.3, 2.3);
    s.theta = rng.uniform(-0.2, 0.2);
    const Frame fa = render(s);
    const Frame fb = render(negate(s));
    CHECK(mirror_close(fa, fb));
  }
}

TEST_CASE("cart is clamped to the image at the position limits") {
  CartState s;
  s.x = 2.4;
  const Frame f = render(s);
  Index min_col = 84, max_col = -1;
  int cart_pixels = 0;
  for (Index r = 0; r < f.rows(); ++r)
    for (Index c = 0; c < f.cols(); ++c)
      if (f(r, c) == 0.6f) {
        ++cart_pixels;
        min_col = std::min(min_col, c);
        max_col = std::max(max_col, c);
      }
  // 16x8 rectangle pushed against the right edge, minus the pole overlap
  CHECK(max_col == 83);
  CHECK(min_col == 68);
  CHECK(cart_pixels > 100);
  CHECK(cart_pixels < 16 * 8);
}
