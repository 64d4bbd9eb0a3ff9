#ifndef EGO2TOP_SIMULATOR_HPP_
#define EGO2TOP_SIMULATOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ego2top/core.hpp"
#include "ego2top/features.hpp"
#include "ego2top/geometry.hpp"
#include "ego2top/graph.hpp"
#include "ego2top/matching.hpp"

namespace ego2top
{

struct ScenarioConfig
{
  double arena_radius = 200.0;
  int n_viewers = 5;
  int n_ego = 5;
  int frames = 600;
  int descriptor_dim = 32;
  double speed_min = 1.0;  // pixels per frame
  double speed_max = 3.0;
  double descriptor_noise_sigma = 0.0;
  /// Frame-to-frame correlation of the descriptor noise (AR(1) coefficient);
  /// the per-frame marginal stays N(0, sigma^2).
  double descriptor_noise_correlation = 0.0;
  double detection_fp_rate = 0.0;
  double detection_fn_rate = 0.0;
  /// Box height, in pixels, of a person standing at the sector radius.
  double detection_reference_height = 100.0;
  std::uint64_t rng_seed = 0;
  GeometryConfig geometry;  // radius left unset resolves to the scene half-diagonal

  void validate() const
  {
    if (!(arena_radius > 0.0)) throw Error(ErrorKind::invalid_input, "arena_radius must be positive");
    if (n_viewers < 1) throw Error(ErrorKind::invalid_input, "n_viewers must be >= 1");
    if (n_ego < 1) throw Error(ErrorKind::invalid_input, "n_ego must be >= 1");
    if (n_ego > n_viewers) throw Error(ErrorKind::invalid_input, "n_ego exceeds n_viewers");
    if (frames < 2) throw Error(ErrorKind::invalid_input, "frames must be >= 2");
    if (descriptor_dim < 1) throw Error(ErrorKind::invalid_input, "descriptor_dim must be >= 1");
    if (!(speed_min > 0.0 && speed_max >= speed_min))
      throw Error(ErrorKind::invalid_input, "speed range must satisfy 0 < speed_min <= speed_max");
    if (!(descriptor_noise_sigma >= 0.0))
      throw Error(ErrorKind::invalid_input, "descriptor_noise_sigma must be nonnegative");
    if (!(descriptor_noise_correlation >= 0.0 && descriptor_noise_correlation < 1.0))
      throw Error(ErrorKind::invalid_input, "descriptor_noise_correlation must lie in [0, 1)");
    if (!(detection_fp_rate >= 0.0 && detection_fp_rate < 1.0) ||
        !(detection_fn_rate >= 0.0 && detection_fn_rate < 1.0))
      throw Error(ErrorKind::invalid_input, "detection rates must lie in [0, 1)");
    if (!(detection_reference_height > 0.0))
      throw Error(ErrorKind::invalid_input, "detection_reference_height must be positive");
    geometry.validate();
  }
};

/// Static random appearance over the arena's bounding square: one unit
/// vector per square cell of side arena_radius / 16.
struct AppearanceField
{
  Point origin;
  double cell = 1.0;
  std::size_t nx = 0, ny = 0;
  Matrix vectors;  // (ny * nx) x dim, row = iy * nx + ix

  std::span<const double> at(std::size_t ix, std::size_t iy) const { return vectors.row(iy * nx + ix); }
};

struct Scenario
{
  ScenarioConfig config;
  GeometryConfig geometry;  // radius resolved
  std::vector<Trajectory> trajectories;
  std::vector<EgoVideo> egos;
  Truth truth;
  AppearanceField field;
};

struct RenderedDescriptor
{
  std::vector<double> values;
  bool empty = false;  // sector misses the field; values are all zero
};

/// FOV-area-weighted mean of the field vectors under the sector, normalized,
/// shifted by `noise` (empty for none) and renormalized.
inline RenderedDescriptor render_ego_descriptor(const AppearanceField& field, const FovSector& sector,
                                                std::span<const double> noise)
{
  const std::size_t dim = field.vectors.cols();
  RenderedDescriptor out;
  out.values.assign(dim, 0.0);

  const auto box = detail::bounds(sector.polygon);
  const auto clamp_index = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n - 1)));
  };
  const double fx0 = (box.xmin - field.origin.x) / field.cell;
  const double fx1 = (box.xmax - field.origin.x) / field.cell;
  const double fy0 = (box.ymin - field.origin.y) / field.cell;
  const double fy1 = (box.ymax - field.origin.y) / field.cell;
  double total = 0.0;
  if (fx1 >= 0.0 && fy1 >= 0.0 && fx0 < static_cast<double>(field.nx) && fy0 < static_cast<double>(field.ny)) {
    const std::size_t ix0 = clamp_index(std::floor(fx0), field.nx), ix1 = clamp_index(std::floor(fx1), field.nx);
    const std::size_t iy0 = clamp_index(std::floor(fy0), field.ny), iy1 = clamp_index(std::floor(fy1), field.ny);
    const double full = field.cell * field.cell;
    for (std::size_t iy = iy0; iy <= iy1; ++iy)
      for (std::size_t ix = ix0; ix <= ix1; ++ix) {
        const double x0 = field.origin.x + field.cell * static_cast<double>(ix);
        const double y0 = field.origin.y + field.cell * static_cast<double>(iy);
        const Point square[4] = {{x0, y0}, {x0 + field.cell, y0}, {x0 + field.cell, y0 + field.cell},
                                 {x0, y0 + field.cell}};
        double w = 0.0;
        if (std::all_of(std::begin(square), std::end(square), [&](Point p) { return in_sector(sector, p); }))
          w = full;
        else
          w = std::max(0.0, polygon_area(clip_convex(square, sector.polygon)));
        if (w <= 0.0) continue;
        total += w;
        const auto v = field.at(ix, iy);
        for (std::size_t d = 0; d < dim; ++d) out.values[d] += w * v[d];
      }
  }
  if (!(total > 0.0)) {
    out.empty = true;
    return out;
  }
  double norm = 0.0;
  for (double& v : out.values) {
    v /= total;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : out.values) v /= norm;
  if (!noise.empty()) {
    if (noise.size() != dim) throw Error(ErrorKind::invalid_input, "noise dimension mismatch");
    for (std::size_t d = 0; d < dim; ++d) out.values[d] += noise[d];
  }
  norm = 0.0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : out.values) v /= norm;
  return out;
}

/// As above with independent N(0, noise_sigma^2) noise per component.
template<typename Rng>
RenderedDescriptor render_ego_descriptor(const AppearanceField& field, const FovSector& sector, double noise_sigma,
                                         Rng& rng)
{
  if (!(noise_sigma > 0.0)) return render_ego_descriptor(field, sector, std::span<const double>{});
  std::normal_distribution<double> gauss(0.0, noise_sigma);
  std::vector<double> noise(field.vectors.cols());
  for (double& v : noise) v = gauss(rng);
  return render_ego_descriptor(field, sector, noise);
}

/// Detector output for one viewer: every other viewer inside the Top-FOV is
/// seen with probability 1 - fn_rate; a spurious detection appears with
/// probability fp_rate per frame.
template<typename Rng>
DetectionSeries render_detections(const OrientedTrajectory& viewer, std::span<const Trajectory> others,
                                  const ScenarioConfig& cfg, const GeometryConfig& geometry, Rng& rng)
{
  DetectionSeries d;
  d.video_id = viewer.trajectory.viewer_id;
  const std::size_t n = viewer.trajectory.frames();
  d.frames.resize(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> hit_score(0.7, 1.0);
  std::uniform_real_distribution<double> fp_score(0.1, 0.5);
  const double radius = geometry.sector_radius();
  const double ref = cfg.detection_reference_height;
  for (std::size_t f = 0; f < n; ++f) {
    const Point apex = viewer.trajectory.positions[f];
    const auto sector = fov_sector(apex, viewer.orientation.angles[f], geometry);
    for (const auto& o : others) {
      const Point p = o.positions[f];
      if (!in_sector(sector, p)) continue;
      const bool dropped = unit(rng) < cfg.detection_fn_rate;
      const double score = hit_score(rng);
      if (dropped) continue;
      const double dist = std::hypot(p.x - apex.x, p.y - apex.y);
      const double height = dist > 1e-9 ? ref * radius / dist : ref * radius * 1e9;
      d.frames[f].push_back({score, height});
    }
    if (unit(rng) < cfg.detection_fp_rate) {
      const double score = fp_score(rng);
      d.frames[f].push_back({score, ref * (1.0 + unit(rng))});
    }
  }
  return d;
}

namespace detail
{

inline std::vector<Point> random_waypoint_path(const ScenarioConfig& cfg, Point center, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double r = 0.95 * cfg.arena_radius;
  auto sample_disc = [&] {
    const double rho = r * std::sqrt(unit(rng));
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    return Point{center.x + rho * std::cos(phi), center.y + rho * std::sin(phi)};
  };
  auto sample_speed = [&] { return cfg.speed_min + (cfg.speed_max - cfg.speed_min) * unit(rng); };

  std::vector<Point> path;
  path.reserve(static_cast<std::size_t>(cfg.frames));
  Point pos = sample_disc();
  Point target = sample_disc();
  double speed = sample_speed();
  path.push_back(pos);
  while (path.size() < static_cast<std::size_t>(cfg.frames)) {
    Point step = target - pos;
    double len = std::hypot(step.x, step.y);
    while (len < speed) {
      target = sample_disc();
      speed = sample_speed();
      step = target - pos;
      len = std::hypot(step.x, step.y);
    }
    pos = pos + (speed / len) * step;
    // Straight legs between points of a disc stay inside it; reflect anyway
    // in case of rounding at the rim.
    const Point rel = pos - center;
    const double dist = std::hypot(rel.x, rel.y);
    if (dist > cfg.arena_radius) pos = center + ((2.0 * cfg.arena_radius - dist) / dist) * rel;
    path.push_back(pos);
  }
  return path;
}

}  // namespace detail

inline AppearanceField make_field(const ScenarioConfig& cfg, std::mt19937_64& rng)
{
  AppearanceField field;
  field.origin = {0.0, 0.0};
  field.cell = cfg.arena_radius / 16.0;
  field.nx = field.ny = 32;
  field.vectors = Matrix(field.nx * field.ny, static_cast<std::size_t>(cfg.descriptor_dim));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t c = 0; c < field.vectors.rows(); ++c) {
    auto row = field.vectors.row(c);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : row) {
        v = gauss(rng);
        norm += v * v;
      }
    } while (!(norm > 0.0));
    norm = std::sqrt(norm);
    for (double& v : row) v /= norm;
  }
  return field;
}

/// Seeded synthetic scene. Viewers walk random-waypoint paths inside a disc
/// of radius arena_radius centered at (arena_radius, arena_radius); the first
/// n_ego viewers, in a seeded random order, carry egocentric cameras.
inline Scenario generate_scenario(const ScenarioConfig& cfg)
{
  cfg.validate();
  Scenario s;
  s.config = cfg;
  std::mt19937_64 rng(cfg.rng_seed);
  s.field = make_field(cfg, rng);

  const Point center{cfg.arena_radius, cfg.arena_radius};
  for (int v = 0; v < cfg.n_viewers; ++v) {
    Trajectory t;
    t.viewer_id = "v" + std::to_string(v);
    t.positions = detail::random_waypoint_path(cfg, center, rng);
    s.trajectories.push_back(std::move(t));
  }
  s.geometry = resolve_radius(cfg.geometry, s.trajectories);

  std::vector<int> order(static_cast<std::size_t>(cfg.n_viewers));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  for (int e = 0; e < cfg.n_ego; ++e) {
    const auto vi = static_cast<std::size_t>(order[static_cast<std::size_t>(e)]);
    const auto viewer = orient(s.trajectories[vi], s.geometry);
    std::vector<Trajectory> others;
    for (std::size_t j = 0; j < s.trajectories.size(); ++j)
      if (j != vi) others.push_back(s.trajectories[j]);

    EgoVideo video;
    video.descriptors.video_id = "ego" + std::to_string(e);
    video.descriptors.vectors = Matrix(static_cast<std::size_t>(cfg.frames), static_cast<std::size_t>(cfg.descriptor_dim));
    const double rho = cfg.descriptor_noise_correlation;
    const double innovation = std::sqrt(1.0 - rho * rho);
    std::normal_distribution<double> gauss(0.0, cfg.descriptor_noise_sigma);
    std::vector<double> noise(static_cast<std::size_t>(cfg.descriptor_dim), 0.0);
    for (std::size_t f = 0; f < static_cast<std::size_t>(cfg.frames); ++f) {
      const auto sector = fov_sector(viewer.trajectory.positions[f], viewer.orientation.angles[f], s.geometry);
      if (cfg.descriptor_noise_sigma > 0.0)
        for (double& v : noise) v = f == 0 ? gauss(rng) : rho * v + innovation * gauss(rng);
      const auto d = render_ego_descriptor(s.field, sector, cfg.descriptor_noise_sigma > 0.0
                                                               ? std::span<const double>(noise)
                                                               : std::span<const double>{});
      std::copy(d.values.begin(), d.values.end(), video.descriptors.vectors.row(f).begin());
    }
    video.detections = render_detections(viewer, others, cfg, s.geometry, rng);
    video.detections.video_id = video.descriptors.video_id;
    s.truth[video.descriptors.video_id] = s.trajectories[vi].viewer_id;
    s.egos.push_back(std::move(video));
  }
  return s;
}

/// Egocentric recordings that start `delay` frames after the top-view video.
inline std::vector<EgoVideo> delay_egos(std::span<const EgoVideo> egos, std::size_t delay)
{
  std::vector<EgoVideo> out;
  for (const auto& e : egos) {
    if (delay + 2 > e.descriptors.frames())
      throw Error(ErrorKind::invalid_input, "delay leaves fewer than 2 egocentric frames");
    EgoVideo d;
    d.descriptors.video_id = e.descriptors.video_id;
    d.descriptors.fps = e.descriptors.fps;
    d.descriptors.vectors = Matrix(e.descriptors.frames() - delay, e.descriptors.dim());
    for (std::size_t f = delay; f < e.descriptors.frames(); ++f) {
      const auto src = e.descriptors.vectors.row(f);
      std::copy(src.begin(), src.end(), d.descriptors.vectors.row(f - delay).begin());
    }
    d.detections = e.detections;
    d.detections.frames.erase(d.detections.frames.begin(),
                              d.detections.frames.begin() + static_cast<std::ptrdiff_t>(delay));
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace ego2top

#endif
