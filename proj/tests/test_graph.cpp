#include <gtest/gtest.h>

#include <random>

#include "ego2top/graph.hpp"
#include "ego2top/pipeline.hpp"
#include "ego2top/simulator.hpp"
#include "support.hpp"

using namespace ego2top;

namespace
{

ScenarioConfig small_scenario(std::uint64_t seed, int viewers, int egos)
{
  ScenarioConfig c;
  c.n_viewers = viewers;
  c.n_ego = egos;
  c.frames = 300;
  c.rng_seed = seed;
  return c;
}

GraphNode node(const std::string& id, Matrix unary, std::vector<double> counts)
{
  GraphNode n;
  n.id = id;
  n.unary.values = std::move(unary);
  n.counts.values = std::move(counts);
  return n;
}

// Hand-made graph with random node and edge matrices.
ViewGraph random_graph(View view, std::size_t n, std::size_t frames, std::mt19937_64& rng, const std::string& prefix)
{
  ViewGraph g;
  g.view = view;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> counts(frames);
    for (auto& c : counts) c = std::floor(testsupport::random_matrix(1, 1, rng, 0.0, 3.0)(0, 0));
    g.nodes.push_back(node(prefix + std::to_string(i), testsupport::random_matrix(frames, frames, rng), counts));
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      FeatureMatrix f;
      f.values = testsupport::random_matrix(frames, frames, rng);
      g.edges.emplace(std::pair{i, j}, f);
    }
  return g;
}

}  // namespace

TEST(ViewGraph, EdgeValuesTransposeForReversedPair)
{
  std::mt19937_64 rng(1);
  const auto g = random_graph(View::top, 3, 5, rng, "t");
  EXPECT_EQ(g.edge_values(0, 2), g.edge(0, 2).values);
  EXPECT_EQ(g.edge_values(2, 0), g.edge(0, 2).values.transposed());
  EXPECT_THROW(g.edge_values(1, 1), Error);
}

TEST(ViewGraph, ValidationCatchesDuplicatesAndMissingEdges)
{
  std::mt19937_64 rng(2);
  auto g = random_graph(View::ego, 3, 4, rng, "e");
  EXPECT_NO_THROW(g.validate());
  auto dup = g;
  dup.nodes[2].id = dup.nodes[0].id;
  EXPECT_THROW(dup.validate(), Error);
  auto missing = g;
  missing.edges.erase({1, 2});
  EXPECT_THROW(missing.validate(), Error);
  EXPECT_THROW(ViewGraph{}.validate(), Error);
}

TEST(NodeAffinity, BothTermsOneGiveOne)
{
  std::mt19937_64 rng(3);
  const auto m = testsupport::random_matrix(8, 8, rng);
  const std::vector<double> counts{0, 1, 2, 1, 0, 3, 1, 2};
  const auto a = node("a", m, counts), b = node("b", m, counts);
  for (double alpha : {0.0, 0.3, 0.9, 1.0}) {
    XCorrConfig cfg;
    cfg.alpha = alpha;
    EXPECT_NEAR(node_affinity(a, b, cfg).value, 1.0, 1e-12);
  }
}

TEST(NodeAffinity, WeightsTermsWithAlpha)
{
  // Mean-product terms: 0.8 from constant unary matrices, 0.2 from counts.
  XCorrConfig cfg;
  cfg.normalize = XCorrNormalization::mean_product;
  cfg.alpha = 0.9;
  const auto a = node("a", Matrix(4, 4, 1.0), std::vector<double>(6, 1.0));
  const auto b = node("b", Matrix(4, 4, 0.8), std::vector<double>(6, 0.2));
  const auto r = node_affinity(a, b, cfg);
  EXPECT_NEAR(r.unary.value, 0.8, 1e-15);
  EXPECT_NEAR(r.counts.value, 0.2, 1e-15);
  EXPECT_NEAR(r.value, 0.74, 1e-12);
}

TEST(NodeAffinity, InsufficientOverlapCountsAsZeroAndIsFlagged)
{
  const auto a = node("a", Matrix(1, 8, 1.0), std::vector<double>(8, 1.0));
  const auto b = node("b", Matrix(8, 1, 1.0), std::vector<double>(8, 1.0));
  XCorrConfig cfg;
  cfg.normalize = XCorrNormalization::mean_product;
  const auto r = node_affinity(a, b, cfg);
  EXPECT_TRUE(r.unary_insufficient);
  EXPECT_FALSE(r.counts_insufficient);
  EXPECT_DOUBLE_EQ(r.value, (1.0 - cfg.alpha) * 1.0);
}

TEST(NodeAffinity, MatchedPairBeatsMismatchedInNoiseFreeScenes)
{
  int wins = 0;
  const int trials = 100;
  for (int seed = 0; seed < trials; ++seed) {
    const auto s = generate_scenario(small_scenario(static_cast<std::uint64_t>(seed), 3, 1));
    PipelineConfig cfg;
    cfg.geometry = s.geometry;
    const auto ego = ego_graph(s.egos, cfg);
    const auto top = top_graph(s.trajectories, cfg);
    const std::string truth = s.truth.at(ego.nodes[0].id);
    std::size_t match = 0;
    while (top.nodes[match].id != truth) ++match;
    const std::size_t other = (match + 1 + static_cast<std::size_t>(seed) % 2) % 3;
    const double good = node_affinity(ego.nodes[0], top.nodes[match], cfg.xcorr).value;
    const double bad = node_affinity(ego.nodes[0], top.nodes[other], cfg.xcorr).value;
    wins += good > bad;
  }
  EXPECT_GE(wins, 90);
}

TEST(Affinity, SingleEgoGivesDiagonalOfNodeAffinities)
{
  std::mt19937_64 rng(5);
  const auto ego = random_graph(View::ego, 1, 6, rng, "e");
  const auto top = random_graph(View::top, 4, 6, rng, "t");
  const auto a = assemble_affinity(ego, top, XCorrConfig{});
  ASSERT_EQ(a.values.rows(), 4u);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      if (r == c)
        EXPECT_DOUBLE_EQ(a.values(r, c), node_affinity(ego.nodes[0], top.nodes[r], XCorrConfig{}).value);
      else
        EXPECT_EQ(a.values(r, c), 0.0);
    }
}

TEST(Affinity, TwoByTwoConflictZerosAndSymmetry)
{
  std::mt19937_64 rng(6);
  const auto ego = random_graph(View::ego, 2, 6, rng, "e");
  const auto top = random_graph(View::top, 2, 6, rng, "t");
  const auto a = assemble_affinity(ego, top, XCorrConfig{});
  ASSERT_EQ(a.values.rows(), 4u);
  // Index i * 2 + k: (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3.
  EXPECT_EQ(a.values(0, 1), 0.0);  // ego 0 to two tops
  EXPECT_EQ(a.values(2, 3), 0.0);  // ego 1 to two tops
  EXPECT_EQ(a.values(0, 2), 0.0);  // two egos to top 0
  EXPECT_EQ(a.values(1, 3), 0.0);  // two egos to top 1
  EXPECT_EQ(a.values, a.values.transposed());
  EXPECT_GT(a.values(0, 3), 0.0);
  EXPECT_GT(a.values(1, 2), 0.0);
}

TEST(Affinity, MoreEgoThanTopIsInvalidProblem)
{
  std::mt19937_64 rng(7);
  const auto ego = random_graph(View::ego, 3, 5, rng, "e");
  const auto top = random_graph(View::top, 2, 5, rng, "t");
  try {
    assemble_affinity(ego, top, XCorrConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_problem);
  }
}

TEST(Affinity, EveryEntryMatchesRecomputationFromRawFeatures)
{
  const auto s = generate_scenario(small_scenario(12, 4, 3));
  PipelineConfig cfg;
  cfg.geometry = s.geometry;
  const auto ego = ego_graph(s.egos, cfg);
  const auto top = top_graph(s.trajectories, cfg);
  const auto a = assemble_affinity(ego, top, cfg.xcorr);
  ASSERT_EQ(a.ne, 3u);
  ASSERT_EQ(a.nt, 4u);

  // Raw features rebuilt from the scenario without the graph builders.
  const int stride = cfg.features.frame_stride;
  std::vector<FrameDescriptorSequence> desc;
  for (const auto& e : s.egos) desc.push_back(subsample(e.descriptors, stride));
  std::vector<OrientedTrajectory> tops;
  for (const auto& t : s.trajectories) tops.push_back(subsample(orient(t, s.geometry), stride));

  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t l = 0; l < 4; ++l) {
          double want = 0.0;
          if (i == j && k == l) {
            const auto eu = descriptor_similarity(desc[i], desc[i], cfg.xcorr.gamma);
            const auto tu = fov_overlap_matrix(tops[k], tops[k], s.geometry);
            auto det = s.egos[i].detections;
            det.min_box_height = cfg.features.min_box_height;
            const auto ec = subsample(ego_count_series(det), stride);
            std::vector<Trajectory> others;
            for (std::size_t m = 0; m < 4; ++m)
              if (m != k) others.push_back(s.trajectories[m]);
            const auto tc = subsample(top_count_series(orient(s.trajectories[k], s.geometry), others, s.geometry), stride);
            want = cfg.xcorr.alpha * xcorr2_max(eu.values, tu.values, cfg.xcorr).value +
                   (1.0 - cfg.xcorr.alpha) * xcorr1_max(ec.values, tc.values, cfg.xcorr).value;
          } else if (i != j && k != l) {
            const auto ee = descriptor_similarity(desc[i], desc[j], cfg.xcorr.gamma);
            const auto te = fov_overlap_matrix(tops[k], tops[l], s.geometry);
            want = xcorr2_max(ee.values, te.values, cfg.xcorr).value;
          }
          EXPECT_NEAR(a.values(a.index(i, k), a.index(j, l)), want, 1e-12)
              << "(" << i << "," << k << ") x (" << j << "," << l << ")";
        }
}

TEST(Affinity, UnaryOnlyAndRestriction)
{
  std::mt19937_64 rng(9);
  const auto ego = random_graph(View::ego, 3, 5, rng, "e");
  const auto top = random_graph(View::top, 4, 5, rng, "t");
  const auto a = assemble_affinity(ego, top, XCorrConfig{});
  const auto u = unary_only(a);
  for (std::size_t r = 0; r < 12; ++r)
    for (std::size_t c = 0; c < 12; ++c) EXPECT_EQ(u.values(r, c), r == c ? a.values(r, c) : 0.0);

  const std::vector<std::size_t> keep{0, 2};
  const auto s = restrict_ego(a, keep);
  EXPECT_EQ(s.ne, 2u);
  EXPECT_EQ(s.ego_ids, (std::vector<std::string>{"e0", "e2"}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t l = 0; l < 4; ++l)
          EXPECT_EQ(s.values(s.index(i, k), s.index(j, l)), a.values(a.index(keep[i], k), a.index(keep[j], l)));
  // Same as assembling from the reduced ego graph directly.
  ViewGraph sub;
  sub.view = View::ego;
  sub.nodes = {ego.nodes[0], ego.nodes[2]};
  sub.edges.emplace(std::pair<std::size_t, std::size_t>{0, 1}, ego.edge(0, 2));
  EXPECT_EQ(assemble_affinity(sub, top, XCorrConfig{}).values, s.values);
}

TEST(Affinity, EntriesNonnegative)
{
  const auto s = generate_scenario(small_scenario(4, 4, 4));
  PipelineConfig cfg;
  cfg.geometry = s.geometry;
  const auto a = match_scene(s.trajectories, s.egos, cfg).affinity;
  for (double v : a.values.data()) EXPECT_GE(v, 0.0);
  EXPECT_EQ(a.values, a.values.transposed());
}
