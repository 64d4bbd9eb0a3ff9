#ifndef EGO2TOP_GEOMETRY_HPP_
#define EGO2TOP_GEOMETRY_HPP_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ego2top/core.hpp"

namespace ego2top
{

struct Trajectory
{
  std::string viewer_id;
  std::vector<Point> positions;  // one per frame
  double fps = 30.0;

  std::size_t frames() const noexcept { return positions.size(); }
};

struct OrientationSeries
{
  std::vector<double> angles;  // radians in [-pi, pi)
  std::vector<bool> valid;
};

/// A trajectory paired with its estimated heading series.
struct OrientedTrajectory
{
  Trajectory trajectory;
  OrientationSeries orientation;
};

struct GeometryConfig
{
  double theta_d = std::numbers::pi / 6.0;
  /// Sector radius in pixels. Unset means "scene bounding-box half-diagonal".
  std::optional<double> radius;
  int smoothing_window = 5;
  double speed_epsilon = 0.1;
  int arc_samples = 16;

  void validate() const
  {
    if (!(theta_d > 0.0 && theta_d <= std::numbers::pi / 2.0))
      throw Error(ErrorKind::invalid_input, "theta_d must lie in (0, pi/2]");
    if (radius && !(*radius > 0.0 && std::isfinite(*radius)))
      throw Error(ErrorKind::invalid_input, "radius must be positive");
    if (smoothing_window < 3 || smoothing_window % 2 == 0)
      throw Error(ErrorKind::invalid_input, "smoothing_window must be odd and >= 3");
    if (!(speed_epsilon >= 0.0))
      throw Error(ErrorKind::invalid_input, "speed_epsilon must be nonnegative");
    if (arc_samples < 4) throw Error(ErrorKind::invalid_input, "arc_samples must be >= 4");
  }

  double sector_radius() const
  {
    if (!radius) throw Error(ErrorKind::invalid_input, "sector radius has not been resolved");
    return *radius;
  }
};

struct FovSector
{
  Point apex;
  std::vector<Point> polygon;  // apex first, then arc samples, counterclockwise
  double half_angle = 0.0;
  double radius = 0.0;
};

/// Maps an angle to [-pi, pi).
inline double wrap_angle(double a)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(a + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  w -= std::numbers::pi;
  if (w >= std::numbers::pi) w -= two_pi;
  return w;
}

inline void validate_trajectory(const Trajectory& traj)
{
  if (traj.positions.size() < 2)
    throw Error(ErrorKind::invalid_input,
                "trajectory '" + traj.viewer_id + "' has fewer than 2 frames");
  for (const auto& p : traj.positions)
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw Error(ErrorKind::invalid_input,
                  "trajectory '" + traj.viewer_id + "' has non-finite coordinates");
}

/// Half-diagonal of the bounding box of every position in the scene.
inline double scene_half_diagonal(std::span<const Trajectory> trajectories)
{
  double xmin = INFINITY, ymin = INFINITY, xmax = -INFINITY, ymax = -INFINITY;
  for (const auto& t : trajectories)
    for (const auto& p : t.positions) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  if (!(xmax >= xmin)) throw Error(ErrorKind::invalid_input, "scene has no positions");
  return 0.5 * std::hypot(xmax - xmin, ymax - ymin);
}

/// Fills in cfg.radius from the scene extent when it is unset.
inline GeometryConfig resolve_radius(GeometryConfig cfg, std::span<const Trajectory> scene)
{
  if (!cfg.radius) {
    double r = scene_half_diagonal(scene);
    if (!(r > 0.0)) throw Error(ErrorKind::invalid_input, "scene extent is degenerate");
    cfg.radius = r;
  }
  return cfg;
}

/// Heading of the camera at each frame, taken as the direction of the
/// window-averaged central-difference velocity. Stationary frames keep the
/// last measurable heading.
inline OrientationSeries estimate_orientation(const Trajectory& traj, const GeometryConfig& cfg)
{
  validate_trajectory(traj);
  cfg.validate();
  const auto& pos = traj.positions;
  const std::size_t n = pos.size();

  std::vector<Point> velocity(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t == 0)
      velocity[t] = pos[1] - pos[0];
    else if (t == n - 1)
      velocity[t] = pos[n - 1] - pos[n - 2];
    else
      velocity[t] = 0.5 * (pos[t + 1] - pos[t - 1]);
  }

  const std::ptrdiff_t half = cfg.smoothing_window / 2;
  OrientationSeries out;
  out.angles.assign(n, 0.0);
  out.valid.assign(n, false);
  std::optional<double> last;
  std::optional<std::size_t> first_valid;
  for (std::size_t t = 0; t < n; ++t) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(t) - half);
    const std::ptrdiff_t hi =
        std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) - 1, static_cast<std::ptrdiff_t>(t) + half);
    Point mean{};
    for (std::ptrdiff_t k = lo; k <= hi; ++k) mean = mean + velocity[k];
    mean = (1.0 / static_cast<double>(hi - lo + 1)) * mean;
    if (std::hypot(mean.x, mean.y) >= cfg.speed_epsilon && (mean.x != 0.0 || mean.y != 0.0)) {
      last = wrap_angle(std::atan2(mean.y, mean.x));
      if (!first_valid) first_valid = t;
    }
    if (last) {
      out.angles[t] = *last;
      out.valid[t] = true;
    }
  }
  if (!first_valid)
    throw Error(ErrorKind::degenerate_trajectory,
                "trajectory '" + traj.viewer_id + "' never moves faster than speed_epsilon");
  for (std::size_t t = 0; t < *first_valid; ++t) out.angles[t] = out.angles[*first_valid];
  return out;
}

inline OrientedTrajectory orient(Trajectory traj, const GeometryConfig& cfg)
{
  auto o = estimate_orientation(traj, cfg);
  return {std::move(traj), std::move(o)};
}

inline FovSector fov_sector(Point position, double angle, const GeometryConfig& cfg)
{
  if (!std::isfinite(angle)) throw Error(ErrorKind::invalid_input, "sector angle is not finite");
  const double r = cfg.sector_radius();
  FovSector s;
  s.apex = position;
  s.half_angle = cfg.theta_d;
  s.radius = r;
  s.polygon.reserve(static_cast<std::size_t>(cfg.arc_samples) + 1);
  s.polygon.push_back(position);
  const double start = angle - cfg.theta_d;
  const double step = 2.0 * cfg.theta_d / static_cast<double>(cfg.arc_samples - 1);
  for (int k = 0; k < cfg.arc_samples; ++k) {
    const double a = start + step * k;
    s.polygon.push_back({position.x + r * std::cos(a), position.y + r * std::sin(a)});
  }
  return s;
}

/// Signed shoelace area; positive for counterclockwise polygons.
inline double polygon_area(std::span<const Point> poly)
{
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += cross(poly[i], poly[(i + 1) % n]);
  return 0.5 * acc;
}

/// Sutherland-Hodgman clip of `subject` against the convex counterclockwise
/// polygon `clip`.
inline std::vector<Point> clip_convex(std::span<const Point> subject, std::span<const Point> clip)
{
  std::vector<Point> out(subject.begin(), subject.end());
  std::vector<Point> in;
  const std::size_t m = clip.size();
  for (std::size_t e = 0; e < m && !out.empty(); ++e) {
    const Point a = clip[e];
    const Point b = clip[(e + 1) % m];
    const Point edge = b - a;
    if (edge.x == 0.0 && edge.y == 0.0) continue;
    in.swap(out);
    out.clear();
    const std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point p = in[i];
      const Point q = in[(i + 1) % n];
      const double sp = cross(edge, p - a);
      const double sq = cross(edge, q - a);
      const bool p_in = sp >= 0.0;
      const bool q_in = sq >= 0.0;
      if (p_in) out.push_back(p);
      if (p_in != q_in) {
        const double t = sp / (sp - sq);
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

namespace detail
{

struct Box
{
  double xmin, ymin, xmax, ymax;
};

inline Box bounds(std::span<const Point> poly)
{
  Box b{INFINITY, INFINITY, -INFINITY, -INFINITY};
  for (const auto& p : poly) {
    b.xmin = std::min(b.xmin, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.xmax = std::max(b.xmax, p.x);
    b.ymax = std::max(b.ymax, p.y);
  }
  return b;
}

// Strict weak order on sectors; used to pick a canonical clipping direction.
inline bool sector_less(const FovSector& a, const FovSector& b)
{
  if (a.half_angle != b.half_angle) return a.half_angle < b.half_angle;
  if (a.radius != b.radius) return a.radius < b.radius;
  const std::size_t n = std::min(a.polygon.size(), b.polygon.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a.polygon[i].x != b.polygon[i].x) return a.polygon[i].x < b.polygon[i].x;
    if (a.polygon[i].y != b.polygon[i].y) return a.polygon[i].y < b.polygon[i].y;
  }
  return a.polygon.size() < b.polygon.size();
}

}  // namespace detail

/// Intersection over union of two sector polygons.
inline double sector_iou(const FovSector& a, const FovSector& b)
{
  const double area_a = polygon_area(a.polygon);
  const double area_b = polygon_area(b.polygon);
  if (!(area_a > 0.0) || !(area_b > 0.0))
    throw Error(ErrorKind::invalid_input, "sector polygon has zero area");

  const auto ba = detail::bounds(a.polygon);
  const auto bb = detail::bounds(b.polygon);
  if (ba.xmax < bb.xmin || bb.xmax < ba.xmin || ba.ymax < bb.ymin || bb.ymax < ba.ymin) return 0.0;

  if (a.polygon == b.polygon) return 1.0;

  // Clip in a fixed direction so that iou(a, b) == iou(b, a) bit for bit.
  const bool a_first = !detail::sector_less(b, a);
  const auto& subject = a_first ? a : b;
  const auto& clipper = a_first ? b : a;
  const double inter = std::max(0.0, polygon_area(clip_convex(subject.polygon, clipper.polygon)));
  const double uni = area_a + area_b - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Point-in-convex-polygon test; points on the boundary count as inside.
inline bool in_sector(const FovSector& sector, Point p)
{
  const auto& poly = sector.polygon;
  const std::size_t n = poly.size();
  const double tol = 1e-9 * sector.radius * sector.radius;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i];
    const Point b = poly[(i + 1) % n];
    if (a == b) continue;
    if (cross(b - a, p - a) < -tol) return false;
  }
  return true;
}

inline int count_in_fov(const FovSector& sector, std::span<const Point> others)
{
  int count = 0;
  for (const auto& p : others)
    if (in_sector(sector, p)) ++count;
  return count;
}

}  // namespace ego2top

#endif
