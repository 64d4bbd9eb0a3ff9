#ifndef EGO2TOP_PIPELINE_HPP_
#define EGO2TOP_PIPELINE_HPP_

#include <span>
#include <vector>

#include "ego2top/features.hpp"
#include "ego2top/geometry.hpp"
#include "ego2top/graph.hpp"
#include "ego2top/matching.hpp"
#include "ego2top/xcorr.hpp"

namespace ego2top
{

struct PipelineConfig
{
  GeometryConfig geometry;
  FeatureConfig features;
  XCorrConfig xcorr;
  SpectralConfig spectral;
  unsigned jobs = 1;

  void validate() const
  {
    geometry.validate();
    features.validate();
    xcorr.validate();
    spectral.validate();
  }
};

inline ViewGraph top_graph(std::span<const Trajectory> trajectories, const PipelineConfig& cfg)
{
  return build_top_graph(trajectories, resolve_radius(cfg.geometry, trajectories), cfg.features, cfg.jobs);
}

inline ViewGraph ego_graph(std::span<const EgoVideo> videos, const PipelineConfig& cfg)
{
  return build_ego_graph(videos, cfg.features, cfg.xcorr, cfg.jobs);
}

struct SceneMatch
{
  AffinityMatrix affinity;
  AssignmentResult result;
};

inline SceneMatch match_graphs(const ViewGraph& ego, const ViewGraph& top, const PipelineConfig& cfg)
{
  SceneMatch m;
  m.affinity = assemble_affinity(ego, top, cfg.xcorr, cfg.jobs);
  m.result = spectral_match(m.affinity, cfg.spectral);
  return m;
}

/// Full pipeline: both graphs, the affinity matrix, and the assignment.
inline SceneMatch match_scene(std::span<const Trajectory> trajectories, std::span<const EgoVideo> videos,
                              const PipelineConfig& cfg)
{
  cfg.validate();
  const auto ego = ego_graph(videos, cfg);
  const auto top = top_graph(trajectories, cfg);
  return match_graphs(ego, top, cfg);
}

}  // namespace ego2top

#endif
