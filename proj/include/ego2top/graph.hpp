#ifndef EGO2TOP_GRAPH_HPP_
#define EGO2TOP_GRAPH_HPP_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ego2top/core.hpp"
#include "ego2top/features.hpp"
#include "ego2top/geometry.hpp"
#include "ego2top/xcorr.hpp"

namespace ego2top
{

enum class View
{
  ego,
  top,
};

struct GraphNode
{
  std::string id;
  FeatureMatrix unary;
  CountSeries counts;
};

struct ViewGraph
{
  View view = View::ego;
  std::vector<GraphNode> nodes;
  std::map<std::pair<std::size_t, std::size_t>, FeatureMatrix> edges;  // keys (i, j), i < j

  std::size_t size() const noexcept { return nodes.size(); }

  /// Pairwise matrix with rows indexed by node i; transposes the stored
  /// (j, i) matrix when i > j.
  Matrix edge_values(std::size_t i, std::size_t j) const
  {
    if (i == j) throw Error(ErrorKind::invalid_input, "graph has no self edges");
    if (i < j) return edge(i, j).values;
    return edge(j, i).values.transposed();
  }

  const FeatureMatrix& edge(std::size_t i, std::size_t j) const
  {
    auto it = edges.find({i, j});
    if (it == edges.end()) throw Error(ErrorKind::invalid_input, "graph edge is missing");
    return it->second;
  }

  void validate() const
  {
    if (nodes.empty()) throw Error(ErrorKind::invalid_input, "graph has no nodes");
    std::set<std::string> ids;
    for (const auto& n : nodes)
      if (!ids.insert(n.id).second) throw Error(ErrorKind::invalid_input, "duplicate node id '" + n.id + "'");
    const std::size_t n = nodes.size();
    if (edges.size() != n * (n - 1) / 2) throw Error(ErrorKind::invalid_input, "graph edge set is incomplete");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) edge(i, j);
  }
};

/// One egocentric video: per-frame descriptors plus person detections.
struct EgoVideo
{
  FrameDescriptorSequence descriptors;
  DetectionSeries detections;
};

/// Ego graph: self-similarity of each video's descriptors as node features,
/// cross-video similarity as edge features, summed detection scores as counts.
inline ViewGraph build_ego_graph(std::span<const EgoVideo> videos, const FeatureConfig& fcfg, const XCorrConfig& xcfg,
                                 unsigned jobs = 1)
{
  fcfg.validate();
  xcfg.validate();
  if (videos.empty()) throw Error(ErrorKind::invalid_input, "no egocentric videos");
  const std::size_t n = videos.size();
  std::vector<FrameDescriptorSequence> sampled(n);
  ViewGraph g;
  g.view = View::ego;
  g.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    validate_descriptors(videos[i].descriptors);
    if (videos[i].detections.frames.size() != videos[i].descriptors.frames())
      throw Error(ErrorKind::invalid_input,
                  "video '" + videos[i].descriptors.video_id + "' has mismatched descriptor and detection lengths");
    sampled[i] = subsample(videos[i].descriptors, fcfg.frame_stride);
    DetectionSeries det = videos[i].detections;
    det.min_box_height = fcfg.min_box_height;
    g.nodes[i].id = videos[i].descriptors.video_id;
    g.nodes[i].counts = subsample(ego_count_series(det), fcfg.frame_stride);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<FeatureMatrix> out(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    out[t] = descriptor_similarity(sampled[i], sampled[j], xcfg.gamma);
  });
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, j] = pairs[t];
    if (i == j)
      g.nodes[i].unary = std::move(out[t]);
    else
      g.edges.emplace(pairs[t], std::move(out[t]));
  }
  g.validate();
  return g;
}

/// Top graph: Top-FOV IOU matrices per viewer and per viewer pair, plus the
/// number of other viewers inside each Top-FOV. The geometry config must
/// have its radius resolved.
inline ViewGraph build_top_graph(std::span<const Trajectory> trajectories, const GeometryConfig& gcfg,
                                 const FeatureConfig& fcfg, unsigned jobs = 1)
{
  gcfg.validate();
  fcfg.validate();
  if (trajectories.empty()) throw Error(ErrorKind::invalid_input, "no top-view trajectories");
  const std::size_t n = trajectories.size();
  for (const auto& t : trajectories)
    if (t.frames() != trajectories[0].frames())
      throw Error(ErrorKind::invalid_input, "trajectories in one scene must share a frame count");

  std::vector<OrientedTrajectory> oriented(n);
  std::vector<OrientedTrajectory> sampled(n);
  ViewGraph g;
  g.view = View::top;
  g.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    oriented[i] = orient(trajectories[i], gcfg);
    sampled[i] = subsample(oriented[i], fcfg.frame_stride);
    std::vector<Trajectory> others;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) others.push_back(trajectories[j]);
    g.nodes[i].id = trajectories[i].viewer_id;
    g.nodes[i].counts = subsample(top_count_series(oriented[i], others, gcfg), fcfg.frame_stride);
  }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<FeatureMatrix> out(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t t) {
    const auto [i, j] = pairs[t];
    out[t] = fov_overlap_matrix(sampled[i], sampled[j], gcfg);
  });
  for (std::size_t t = 0; t < pairs.size(); ++t) {
    const auto [i, j] = pairs[t];
    if (i == j)
      g.nodes[i].unary = std::move(out[t]);
    else
      g.edges.emplace(pairs[t], std::move(out[t]));
  }
  g.validate();
  return g;
}

struct NodeAffinity
{
  double value = 0.0;
  XCorr2Result unary;
  XCorr1Result counts;
  bool unary_insufficient = false;
  bool counts_insufficient = false;
};

/// alpha * max xcorr(unary matrices) + (1 - alpha) * max xcorr(count series).
/// A term whose shifts all fail the overlap requirement contributes 0.
inline NodeAffinity node_affinity(const GraphNode& ego_node, const GraphNode& top_node, const XCorrConfig& cfg)
{
  NodeAffinity out;
  try {
    out.unary = xcorr2_max(ego_node.unary.values, top_node.unary.values, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_overlap) throw;
    out.unary = {};
    out.unary_insufficient = true;
  }
  try {
    out.counts = xcorr1_max(ego_node.counts.values, top_node.counts.values, cfg);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::insufficient_overlap) throw;
    out.counts = {};
    out.counts_insufficient = true;
  }
  out.value = cfg.alpha * out.unary.value + (1.0 - cfg.alpha) * out.counts.value;
  return out;
}

inline double edge_affinity(const FeatureMatrix& ego_edge, const FeatureMatrix& top_edge, const XCorrConfig& cfg)
{
  return xcorr2_max(ego_edge.values, top_edge.values, cfg).value;
}

struct EdgeDiagnostic
{
  std::size_t i = 0, j = 0, k = 0, l = 0;
  XCorr2Result xcorr;
  bool insufficient = false;
};

/// Affinity between candidate pairings; entry (i * nt + k, j * nt + l) scores
/// ego i -> top k together with ego j -> top l.
struct AffinityMatrix
{
  Matrix values;
  std::size_t ne = 0;
  std::size_t nt = 0;
  std::vector<std::string> ego_ids;
  std::vector<std::string> top_ids;
  std::vector<NodeAffinity> nodes;  // ne * nt, row-major
  std::vector<EdgeDiagnostic> edges;

  std::size_t index(std::size_t ego, std::size_t top) const noexcept { return ego * nt + top; }
};

/// Copy of A with every pairwise entry removed (node affinities only).
inline AffinityMatrix unary_only(const AffinityMatrix& a)
{
  AffinityMatrix u = a;
  u.edges.clear();
  const std::size_t n = a.values.rows();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (r != c) u.values(r, c) = 0.0;
  return u;
}

/// Principal submatrix for a subset of ego nodes (given in increasing order).
inline AffinityMatrix restrict_ego(const AffinityMatrix& a, std::span<const std::size_t> egos)
{
  AffinityMatrix s;
  s.ne = egos.size();
  s.nt = a.nt;
  s.top_ids = a.top_ids;
  for (auto e : egos) s.ego_ids.push_back(a.ego_ids.at(e));
  s.values = Matrix(s.ne * s.nt, s.ne * s.nt);
  for (std::size_t i = 0; i < s.ne; ++i)
    for (std::size_t k = 0; k < s.nt; ++k) {
      s.nodes.push_back(a.nodes[a.index(egos[i], k)]);
      for (std::size_t j = 0; j < s.ne; ++j)
        for (std::size_t l = 0; l < s.nt; ++l)
          s.values(s.index(i, k), s.index(j, l)) = a.values(a.index(egos[i], k), a.index(egos[j], l));
    }
  std::vector<std::size_t> pos(a.ne, a.ne);
  for (std::size_t i = 0; i < egos.size(); ++i) pos[egos[i]] = i;
  for (const auto& e : a.edges)
    if (pos[e.i] < a.ne && pos[e.j] < a.ne) {
      auto d = e;
      d.i = pos[e.i];
      d.j = pos[e.j];
      s.edges.push_back(d);
    }
  return s;
}

inline AffinityMatrix assemble_affinity(const ViewGraph& ego, const ViewGraph& top, const XCorrConfig& cfg,
                                        unsigned jobs = 1)
{
  cfg.validate();
  ego.validate();
  top.validate();
  const std::size_t ne = ego.size(), nt = top.size();
  if (ne > nt)
    throw Error(ErrorKind::invalid_problem, "more egocentric videos (" + std::to_string(ne) +
                                                ") than top-view viewers (" + std::to_string(nt) + ")");
  AffinityMatrix a;
  a.ne = ne;
  a.nt = nt;
  a.values = Matrix(ne * nt, ne * nt);
  for (const auto& n : ego.nodes) a.ego_ids.push_back(n.id);
  for (const auto& n : top.nodes) a.top_ids.push_back(n.id);

  a.nodes.resize(ne * nt);
  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t j = i + 1; j < ne; ++j)
      for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t l = 0; l < nt; ++l)
          if (k != l) a.edges.push_back({i, j, k, l, {}, false});

  const std::size_t node_tasks = ne * nt;
  parallel_for(node_tasks + a.edges.size(), jobs, [&](std::size_t t) {
    if (t < node_tasks) {
      a.nodes[t] = node_affinity(ego.nodes[t / nt], top.nodes[t % nt], cfg);
      return;
    }
    auto& e = a.edges[t - node_tasks];
    // Orient by ego id so the result does not depend on node order.
    const bool forward = ego.nodes[e.i].id <= ego.nodes[e.j].id;
    const Matrix ego_m = forward ? ego.edge_values(e.i, e.j) : ego.edge_values(e.j, e.i);
    const Matrix top_m = forward ? top.edge_values(e.k, e.l) : top.edge_values(e.l, e.k);
    try {
      e.xcorr = xcorr2_max(ego_m, top_m, cfg);
      if (!forward) e.xcorr = {e.xcorr.value, e.xcorr.dc, e.xcorr.dr};
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::insufficient_overlap) throw;
      e.xcorr = {};
      e.insufficient = true;
    }
  });

  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t k = 0; k < nt; ++k) a.values(a.index(i, k), a.index(i, k)) = a.nodes[a.index(i, k)].value;
  for (const auto& e : a.edges) {
    a.values(a.index(e.i, e.k), a.index(e.j, e.l)) = e.xcorr.value;
    a.values(a.index(e.j, e.l), a.index(e.i, e.k)) = e.xcorr.value;
  }
  return a;
}

}  // namespace ego2top

#endif
