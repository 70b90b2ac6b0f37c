#pragma once

#include <array>
#include <deque>
#include <memory>
#include <optional>

#include "jepa/core.hpp"

namespace jepa {

using FramePtr = std::shared_ptr<const Frame>;

enum class WindowKind { X, Y };

// Ordered triple of frames, oldest to newest. An X window at decision step t
// holds (f_{t-2}, f_{t-1}, f_t); a Y window holds (f_{t-1}, f_t, f_{t+1}).
struct ObservationWindow {
  WindowKind kind = WindowKind::X;
  std::array<FramePtr, 3> frames;
};

// Per-episode ring of recent frames. Cleared on episode reset so windows
// never mix frames across episode boundaries. At episode start, missing
// older frames are filled by repeating the earliest frame.
class FrameHistory {
 public:
  explicit FrameHistory(Index rows = 84, Index cols = 84, std::size_t capacity = 8)
      : rows_(rows), cols_(cols), capacity_(capacity < 4 ? 4 : capacity) {}

  void reset() { frames_.clear(); }

  void push(FramePtr frame) {
    if (!frame) throw ConfigError("FrameHistory: null frame");
    if (frame->rows() != rows_ || frame->cols() != cols_) {
      throw ConfigError("FrameHistory: frame dimensions do not match history");
    }
    frames_.push_back(std::move(frame));
    if (frames_.size() > capacity_) frames_.pop_front();
  }

  std::size_t size() const { return frames_.size(); }

  // k = 0 is the newest frame.
  const FramePtr& recent(std::size_t k) const {
    if (k >= frames_.size()) throw UsageError("FrameHistory: recent() out of range");
    return frames_[frames_.size() - 1 - k];
  }

  // (f_{t-2}, f_{t-1}, f_t) ending at the newest frame.
  ObservationWindow x_window() const {
    if (frames_.empty()) throw UsageError("FrameHistory: x_window on empty history");
    return window(WindowKind::X);
  }

  // (f_{t-1}, f_t, f_{t+1}) ending at the newest frame, which must be the
  // successor frame f_{t+1}. The caller is responsible for not requesting a
  // target across an episode boundary.
  ObservationWindow y_window() const {
    if (frames_.size() < 2) throw UsageError("FrameHistory: y_window needs a successor frame");
    return window(WindowKind::Y);
  }

 private:
  ObservationWindow window(WindowKind kind) const {
    ObservationWindow w;
    w.kind = kind;
    const std::size_t m = frames_.size();
    for (std::size_t i = 0; i < 3; ++i) {
      // Slot 2 is the newest; pad older slots with the earliest frame.
      const std::size_t back = 2 - i;
      w.frames[i] = back >= m ? frames_.front() : frames_[m - 1 - back];
    }
    return w;
  }

  Index rows_;
  Index cols_;
  std::size_t capacity_;
  std::deque<FramePtr> frames_;
};

}  // namespace jepa
