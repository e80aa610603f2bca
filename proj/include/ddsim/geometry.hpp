#pragma once

#include <cmath>
#include <limits>

namespace ddsim {

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

inline double squared_distance(Point a, Point b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/// Closed axis-aligned box. A 1-D interval [a, b] is the box [a, b] x R.
struct Box {
  Point lo{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Point hi{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};

  static Box interval(double a, double b) {
    return Box{{a, -std::numeric_limits<double>::infinity()},
               {b, std::numeric_limits<double>::infinity()}};
  }
  static Box everywhere() { return Box{}; }

  bool contains(Point p) const { return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y; }
  bool operator==(const Box&) const = default;
};

}  // namespace ddsim
