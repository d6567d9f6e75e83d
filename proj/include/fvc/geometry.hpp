#pragma once

#include <cmath>

namespace fvc {

// Continuous pixel coordinate, origin at the top-left corner.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  PixelCoord() = default;
  PixelCoord(double px, double py) : x(px), y(py) {}

  PixelCoord operator+(const PixelCoord& o) const { return {x + o.x, y + o.y}; }
  PixelCoord operator-(const PixelCoord& o) const { return {x - o.x, y - o.y}; }
  PixelCoord operator*(double s) const { return {x * s, y * s}; }

  double norm() const { return std::hypot(x, y); }
};

inline PixelCoord operator*(double s, const PixelCoord& p) { return p * s; }

inline bool finite(const PixelCoord& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

}  // namespace fvc
