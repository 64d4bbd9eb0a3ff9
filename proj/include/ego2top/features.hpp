#ifndef EGO2TOP_FEATURES_HPP_
#define EGO2TOP_FEATURES_HPP_

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ego2top/core.hpp"
#include "ego2top/geometry.hpp"

namespace ego2top
{

/// Per-frame appearance descriptors of one egocentric video (frames x D).
struct FrameDescriptorSequence
{
  std::string video_id;
  Matrix vectors;
  double fps = 30.0;

  std::size_t frames() const noexcept { return vectors.rows(); }
  std::size_t dim() const noexcept { return vectors.cols(); }
};

struct Detection
{
  double score = 0.0;
  double box_height = 0.0;
};

struct DetectionSeries
{
  std::string video_id;
  std::vector<std::vector<Detection>> frames;
  double min_box_height = 50.0;
};

enum class FeatureKind
{
  descriptor_similarity,
  descriptor_self_similarity,
  fov_iou,
};

struct FeatureMatrix
{
  Matrix values;
  FeatureKind kind = FeatureKind::descriptor_similarity;
  std::string row_id;
  std::string col_id;
};

enum class CountSource
{
  top,
  ego,
};

struct CountSeries
{
  std::vector<double> values;
  CountSource source = CountSource::top;
};

struct FeatureConfig
{
  double min_box_height = 50.0;
  /// Features are evaluated on every `frame_stride`-th frame.
  int frame_stride = 10;

  void validate() const
  {
    if (!(min_box_height >= 0.0))
      throw Error(ErrorKind::invalid_input, "min_box_height must be nonnegative");
    if (frame_stride < 1) throw Error(ErrorKind::invalid_input, "frame_stride must be >= 1");
  }
};

inline void validate_descriptors(const FrameDescriptorSequence& s)
{
  if (s.frames() < 2)
    throw Error(ErrorKind::invalid_input, "descriptor sequence '" + s.video_id + "' has fewer than 2 frames");
  if (s.dim() < 1)
    throw Error(ErrorKind::invalid_input, "descriptor sequence '" + s.video_id + "' has dimension 0");
  for (double v : s.vectors.data())
    if (!std::isfinite(v))
      throw Error(ErrorKind::invalid_input, "descriptor sequence '" + s.video_id + "' has non-finite entries");
}

inline void validate_detections(const DetectionSeries& d)
{
  for (const auto& frame : d.frames)
    for (const auto& det : frame) {
      if (!(det.score >= 0.0 && det.score <= 1.0))
        throw Error(ErrorKind::invalid_input, "detection score outside [0, 1] in '" + d.video_id + "'");
      if (!(det.box_height > 0.0))
        throw Error(ErrorKind::invalid_input, "non-positive box height in '" + d.video_id + "'");
    }
}

namespace detail
{

inline double euclidean(std::span<const double> a, std::span<const double> b)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// values(p, q) = exp(-gamma * |a_p - b_q|). Passing the same sequence twice
/// yields the exactly symmetric self-similarity matrix.
inline FeatureMatrix descriptor_similarity(const FrameDescriptorSequence& a, const FrameDescriptorSequence& b,
                                           double gamma)
{
  if (!(gamma > 0.0)) throw Error(ErrorKind::invalid_input, "gamma must be positive");
  if (a.dim() != b.dim())
    throw Error(ErrorKind::invalid_input, "descriptor dimension mismatch between '" + a.video_id + "' and '" +
                                              b.video_id + "'");
  const bool self = &a == &b || (a.video_id == b.video_id && a.vectors == b.vectors);
  FeatureMatrix m;
  m.kind = self ? FeatureKind::descriptor_self_similarity : FeatureKind::descriptor_similarity;
  m.row_id = a.video_id;
  m.col_id = b.video_id;
  m.values = Matrix(a.frames(), b.frames());
  for (std::size_t p = 0; p < a.frames(); ++p) {
    const std::size_t q0 = self ? p : 0;
    for (std::size_t q = q0; q < b.frames(); ++q) {
      const double s = std::exp(-gamma * detail::euclidean(a.vectors.row(p), b.vectors.row(q)));
      m.values(p, q) = s;
      if (self) m.values(q, p) = s;
    }
  }
  return m;
}

inline std::vector<FovSector> sectors_of(const OrientedTrajectory& t, const GeometryConfig& cfg)
{
  std::vector<FovSector> s;
  s.reserve(t.trajectory.frames());
  for (std::size_t f = 0; f < t.trajectory.frames(); ++f)
    s.push_back(fov_sector(t.trajectory.positions[f], t.orientation.angles[f], cfg));
  return s;
}

/// Top-FOV IOU between every frame of viewer i and every frame of viewer j.
inline FeatureMatrix fov_overlap_matrix(const OrientedTrajectory& ti, const OrientedTrajectory& tj,
                                        const GeometryConfig& cfg)
{
  if (ti.trajectory.frames() != tj.trajectory.frames())
    throw Error(ErrorKind::invalid_input, "trajectories '" + ti.trajectory.viewer_id + "' and '" +
                                              tj.trajectory.viewer_id + "' differ in length");
  const bool self = &ti == &tj || ti.trajectory.viewer_id == tj.trajectory.viewer_id;
  const auto si = sectors_of(ti, cfg);
  const auto sj = self ? si : sectors_of(tj, cfg);
  FeatureMatrix m;
  m.kind = FeatureKind::fov_iou;
  m.row_id = ti.trajectory.viewer_id;
  m.col_id = tj.trajectory.viewer_id;
  m.values = Matrix(si.size(), sj.size());
  for (std::size_t p = 0; p < si.size(); ++p) {
    const std::size_t q0 = self ? p : 0;
    for (std::size_t q = q0; q < sj.size(); ++q) {
      const double v = sector_iou(si[p], sj[q]);
      m.values(p, q) = v;
      if (self) m.values(q, p) = v;
    }
  }
  return m;
}

/// Sum of the scores of detections at least min_box_height tall, per frame.
inline CountSeries ego_count_series(const DetectionSeries& d)
{
  validate_detections(d);
  CountSeries c;
  c.source = CountSource::ego;
  c.values.reserve(d.frames.size());
  for (const auto& frame : d.frames) {
    double sum = 0.0;
    for (const auto& det : frame)
      if (det.box_height >= d.min_box_height) sum += det.score;
    c.values.push_back(sum);
  }
  return c;
}

/// Number of other viewers inside the viewer's Top-FOV, per frame.
inline CountSeries top_count_series(const OrientedTrajectory& viewer, std::span<const Trajectory> others,
                                    const GeometryConfig& cfg)
{
  const std::size_t n = viewer.trajectory.frames();
  for (const auto& o : others)
    if (o.frames() != n)
      throw Error(ErrorKind::invalid_input, "trajectory '" + o.viewer_id + "' differs in length from '" +
                                                viewer.trajectory.viewer_id + "'");
  CountSeries c;
  c.source = CountSource::top;
  c.values.reserve(n);
  std::vector<Point> pts(others.size());
  for (std::size_t f = 0; f < n; ++f) {
    for (std::size_t k = 0; k < others.size(); ++k) pts[k] = others[k].positions[f];
    const auto sector = fov_sector(viewer.trajectory.positions[f], viewer.orientation.angles[f], cfg);
    c.values.push_back(static_cast<double>(count_in_fov(sector, pts)));
  }
  return c;
}

/// Keeps frames 0, stride, 2*stride, ...
template<typename T>
std::vector<T> subsample(std::span<const T> values, int stride)
{
  std::vector<T> out;
  for (std::size_t f = 0; f < values.size(); f += static_cast<std::size_t>(stride)) out.push_back(values[f]);
  return out;
}

inline OrientedTrajectory subsample(const OrientedTrajectory& t, int stride)
{
  OrientedTrajectory out;
  out.trajectory.viewer_id = t.trajectory.viewer_id;
  out.trajectory.fps = t.trajectory.fps / stride;
  out.trajectory.positions = subsample<Point>(t.trajectory.positions, stride);
  out.orientation.angles = subsample<double>(t.orientation.angles, stride);
  for (std::size_t f = 0; f < t.orientation.valid.size(); f += static_cast<std::size_t>(stride))
    out.orientation.valid.push_back(t.orientation.valid[f]);
  return out;
}

inline FrameDescriptorSequence subsample(const FrameDescriptorSequence& s, int stride)
{
  FrameDescriptorSequence out;
  out.video_id = s.video_id;
  out.fps = s.fps / stride;
  const std::size_t rows = (s.frames() + stride - 1) / stride;
  out.vectors = Matrix(rows, s.dim());
  for (std::size_t r = 0; r < rows; ++r) {
    const auto src = s.vectors.row(r * stride);
    std::copy(src.begin(), src.end(), out.vectors.row(r).begin());
  }
  return out;
}

inline CountSeries subsample(const CountSeries& c, int stride)
{
  return {subsample<double>(c.values, stride), c.source};
}

}  // namespace ego2top

#endif
