#pragma once

#include <string>

#include "jepa/cartpole.hpp"
#include "jepa/core.hpp"

namespace jepa {

// Rasterization geometry. World x in [-2.4, 2.4] maps linearly onto pixel
// columns; pixel centers sit at integer coordinates.
struct RenderSpec {
  int size = 84;
  float background = 0.0f;
  float cart_intensity = 0.6f;
  float pole_intensity = 1.0f;
  int cart_width = 16;
  int cart_height = 8;
  double cart_center_row = 61.5;
  double pole_length = 34.0;
  double pole_half_width = 1.5;
};

// Deterministic function of (x, theta); velocities are not drawn.
Frame render(const CartState& s, const RenderSpec& spec = {});

// Portable graymap, P5, maxval 255.
void write_pgm(const Frame& frame, const std::string& path);

}  // namespace jepa
