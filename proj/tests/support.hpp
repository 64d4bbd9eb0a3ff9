#ifndef EGO2TOP_TESTS_SUPPORT_HPP_
#define EGO2TOP_TESTS_SUPPORT_HPP_

#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ego2top/core.hpp"
#include "ego2top/geometry.hpp"

namespace testsupport
{

inline ego2top::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = 0.0,
                                     double hi = 1.0)
{
  std::uniform_real_distribution<double> u(lo, hi);
  ego2top::Matrix m(r, c);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

inline ego2top::GeometryConfig geometry(double radius, double theta_d = std::numbers::pi / 6.0)
{
  ego2top::GeometryConfig g;
  g.radius = radius;
  g.theta_d = theta_d;
  return g;
}

inline ego2top::Trajectory line(const std::string& id, ego2top::Point start, ego2top::Point step, std::size_t n)
{
  ego2top::Trajectory t;
  t.viewer_id = id;
  for (std::size_t f = 0; f < n; ++f) t.positions.push_back(start + static_cast<double>(f) * step);
  return t;
}

// Membership in the ideal (curved) sector, independent of the polygon.
inline bool in_true_sector(ego2top::Point apex, double heading, double half_angle, double radius, ego2top::Point p)
{
  const double dx = p.x - apex.x, dy = p.y - apex.y;
  const double d = std::hypot(dx, dy);
  if (d > radius) return false;
  if (d == 0.0) return true;
  double diff = std::atan2(dy, dx) - heading;
  diff = std::remainder(diff, 2.0 * std::numbers::pi);
  return std::abs(diff) <= half_angle;
}

}  // namespace testsupport

#endif
