#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jepa/frame_history.hpp"

using namespace jepa;

namespace {

FramePtr frame(float fill) {
  return std::make_shared<Frame>(Frame::Constant(4, 4, fill));
}

}  // namespace

TEST_CASE("push keeps the most recent frames in order") {
  FrameHistory h(4, 4, 4);
  CHECK(h.size() == 0);
  auto f0 = frame(0.0f);
  h.push(f0);
  CHECK(h.size() == 1);
  CHECK(h.recent(0) == f0);

  std::vector<FramePtr> fs;
  for (int i = 1; i <= 4; ++i) {
    fs.push_back(frame(static_cast<float>(i)));
    h.push(fs.back());
  }
  CHECK(h.size() == 4);  // capacity caps retention, last 4 remain
  for (int k = 0; k < 4; ++k) CHECK(h.recent(static_cast<std::size_t>(k)) == fs[static_cast<std::size_t>(3 - k)]);
}

TEST_CASE("frame dimension mismatch is a configuration error") {
  FrameHistory h(4, 4);
  CHECK_THROWS_AS(h.push(std::make_shared<Frame>(Frame::Zero(5, 4))), ConfigError);
}

TEST_CASE("x windows pad episode starts by repeating the earliest frame") {
  FrameHistory h(4, 4);
  CHECK_THROWS_AS(h.x_window(), UsageError);

  auto f0 = frame(0), f1 = frame(1), f2 = frame(2), f3 = frame(3);
  h.push(f0);
  auto w = h.x_window();
  CHECK(w.kind == WindowKind::X);
  CHECK(w.frames[0] == f0);
  CHECK(w.frames[1] == f0);
  CHECK(w.frames[2] == f0);

  h.push(f1);
  w = h.x_window();
  CHECK(w.frames[0] == f0);
  CHECK(w.frames[1] == f0);
  CHECK(w.frames[2] == f1);

  h.push(f2);
  h.push(f3);
  w = h.x_window();
  CHECK(w.frames[0] == f1);
  CHECK(w.frames[1] == f2);
  CHECK(w.frames[2] == f3);
}

TEST_CASE("y windows need a successor frame and share padding rules") {
  FrameHistory h(4, 4);
  auto f0 = frame(0), f1 = frame(1), f2 = frame(2), f3 = frame(3);
  h.push(f0);
  CHECK_THROWS_AS(h.y_window(), UsageError);

  h.push(f1);  // f1 is the successor of decision step 0
  auto y = h.y_window();
  CHECK(y.kind == WindowKind::Y);
  CHECK(y.frames[0] == f0);
  CHECK(y.frames[1] == f0);
  CHECK(y.frames[2] == f1);

  h.push(f2);
  h.push(f3);  // decision step 2
  y = h.y_window();
  CHECK(y.frames[0] == f1);
  CHECK(y.frames[1] == f2);
  CHECK(y.frames[2] == f3);
}

TEST_CASE("x and y windows of the same decision step overlap in two frames") {
  FrameHistory h(4, 4);
  auto f0 = frame(0), f1 = frame(1), f2 = frame(2), f3 = frame(3);
  h.push(f0);
  h.push(f1);
  h.push(f2);
  const auto x = h.x_window();  // decision at t = 2
  h.push(f3);                   // successor arrives
  const auto y = h.y_window();
  CHECK(x.frames[1] == y.frames[0]);
  CHECK(x.frames[2] == y.frames[1]);
}

TEST_CASE("reset isolates episodes") {
  FrameHistory h(4, 4);
  h.push(frame(1));
  h.push(frame(2));
  h.reset();
  CHECK(h.size() == 0);
  auto g0 = frame(7);
  h.push(g0);
  const auto w = h.x_window();
  CHECK(w.frames[0] == g0);
  CHECK(w.frames[1] == g0);
  CHECK(w.frames[2] == g0);
}
