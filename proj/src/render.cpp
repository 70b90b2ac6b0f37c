#include "jepa/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace jepa {

namespace {

// Distance from point p to the segment a..b.
double segment_distance(double px, double py, double ax, double ay, double bx,
                        double by) {
  const double vx = bx - ax;
  const double vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = px - (ax + t * vx);
  const double dy = py - (ay + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

Frame render(const CartState& s, const RenderSpec& spec) {
  const int n = spec.size;
  Frame frame = Frame::Constant(n, n, spec.background);

  // Cart center in pixel-center coordinates, clamped so the cart rectangle
  // stays inside the image.
  const double half_w = spec.cart_width / 2.0;
  double cx = (s.x + cartpole::kXThreshold) / (2.0 * cartpole::kXThreshold) *
                  static_cast<double>(n) -
              0.5;
  cx = std::clamp(cx, half_w - 0.5, static_cast<double>(n) - 0.5 - half_w);
  const double cy = spec.cart_center_row;

  // Cart body: half-open [cx - w/2, cx + w/2) over pixel centers, so the
  // rectangle is always exactly cart_width columns wide.
  const int col_lo = static_cast<int>(std::ceil(cx - half_w));
  const int row_lo = static_cast<int>(std::ceil(cy - spec.cart_height / 2.0));
  for (int r = row_lo; r < row_lo + spec.cart_height; ++r) {
    if (r < 0 || r >= n) continue;
    for (int c = col_lo; c < col_lo + spec.cart_width; ++c) {
      if (c < 0 || c >= n) continue;
      frame(r, c) = spec.cart_intensity;
    }
  }

  // Pole: segment from the cart center, drawn over the cart.
  const double tip_x = cx + spec.pole_length * std::sin(s.theta);
  const double tip_y = cy - spec.pole_length * std::cos(s.theta);
  const int margin = static_cast<int>(std::ceil(spec.pole_half_width)) + 1;
  const int c0 = std::max(0, static_cast<int>(std::floor(std::min(cx, tip_x))) - margin);
  const int c1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(cx, tip_x))) + margin);
  const int r0 = std::max(0, static_cast<int>(std::floor(std::min(cy, tip_y))) - margin);
  const int r1 = std::min(n - 1, static_cast<int>(std::ceil(std::max(cy, tip_y))) + margin);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (segment_distance(c, r, cx, cy, tip_x, tip_y) <= spec.pole_half_width) {
        frame(r, c) = spec.pole_intensity;
      }
    }
  }
  return frame;
}

void write_pgm(const Frame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "P5\n" << frame.cols() << " " << frame.rows() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(frame.cols()));
  for (Index r = 0; r < frame.rows(); ++r) {
    for (Index c = 0; c < frame.cols(); ++c) {
      const float v = std::clamp(frame(r, c), 0.0f, 1.0f);
      row[static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
}

}  // namespace jepa
