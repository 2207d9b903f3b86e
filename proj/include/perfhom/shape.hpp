#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace perfhom {

using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

// Hole geometry in lattice or physical units. "empty" is a valid shape:
// lattice sites are allowed to carry no hole at all.
struct ShapeSpec {
  enum class Kind { ball, box, empty };

  Kind kind = Kind::empty;
  double radius = 0.0;       // ball
  Vec3 half_widths{0, 0, 0}; // box

  static ShapeSpec ball(double r) {
    if (r < 0) throw std::invalid_argument("ShapeSpec: ball radius must be >= 0");
    ShapeSpec s;
    s.kind = r > 0 ? Kind::ball : Kind::empty;
    s.radius = r;
    return s;
  }

  static ShapeSpec box(const Vec3& hw) {
    for (double w : hw)
      if (w < 0) throw std::invalid_argument("ShapeSpec: box half_widths must be >= 0");
    ShapeSpec s;
    s.kind = (hw[0] > 0 && hw[1] > 0 && hw[2] >= 0) ? Kind::box : Kind::empty;
    s.half_widths = hw;
    return s;
  }

  static ShapeSpec empty() { return ShapeSpec{}; }

  bool is_empty(int dim) const {
    if (kind == Kind::empty) return true;
    if (kind == Kind::ball) return radius <= 0;
    for (int a = 0; a < dim; ++a)
      if (half_widths[a] <= 0) return true;
    return false;
  }

  // Radius of the smallest origin-centered ball containing the shape.
  double bounding_radius(int dim) const {
    switch (kind) {
      case Kind::ball: return radius;
      case Kind::box: {
        double s = 0;
        for (int a = 0; a < dim; ++a) s += half_widths[a] * half_widths[a];
        return std::sqrt(s);
      }
      default: return 0;
    }
  }

  double diameter(int dim) const { return 2.0 * bounding_radius(dim); }
};

} // namespace perfhom
