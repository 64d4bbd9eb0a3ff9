#ifndef EGO2TOP_MATCHING_HPP_
#define EGO2TOP_MATCHING_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ego2top/core.hpp"
#include "ego2top/graph.hpp"
#include "ego2top/munkres.hpp"

namespace ego2top
{

struct SpectralConfig
{
  double tolerance = 1e-9;
  int max_iterations = 1000;

  void validate() const
  {
    if (!(tolerance > 0.0)) throw Error(ErrorKind::invalid_input, "tolerance must be positive");
    if (max_iterations < 1) throw Error(ErrorKind::invalid_input, "max_iterations must be >= 1");
  }
};

struct Eigenpair
{
  std::vector<double> vector;  // unit L2 norm, nonnegative
  double value = 0.0;          // p^T A p
  double residual = 0.0;       // |A p - value p|
  int iterations = 0;
  bool converged = false;
};

namespace detail
{

inline double norm2(std::span<const double> v)
{
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline void multiply(const Matrix& a, std::span<const double> x, std::span<double> y)
{
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

}  // namespace detail

/// Power iteration from the uniform positive vector. Stops once
/// |A p - lambda p| <= tolerance * lambda or after max_iterations.
inline Eigenpair leading_eigenvector(const Matrix& a, const SpectralConfig& cfg = {})
{
  cfg.validate();
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n) throw Error(ErrorKind::invalid_input, "affinity matrix must be square and nonempty");
  if (std::all_of(a.data().begin(), a.data().end(), [](double v) { return v == 0.0; }))
    throw Error(ErrorKind::degenerate_affinity, "affinity matrix is zero");

  Eigenpair out;
  std::vector<double> p(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    detail::multiply(a, p, y);
    double lambda = 0.0;
    for (std::size_t i = 0; i < n; ++i) lambda += p[i] * y[i];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res += (y[i] - lambda * p[i]) * (y[i] - lambda * p[i]);
    res = std::sqrt(res);
    out.vector = p;
    out.value = lambda;
    out.residual = res;
    out.iterations = it;
    if (res <= cfg.tolerance * std::abs(lambda)) {
      out.converged = true;
      break;
    }
    const double ny = detail::norm2(y);
    if (!(ny > 0.0)) throw Error(ErrorKind::degenerate_affinity, "power iteration collapsed to zero");
    for (std::size_t i = 0; i < n; ++i) p[i] = y[i] / ny;
  }
  return out;
}

/// Row-normalized ne x nt reshape of the leading eigenvector.
struct SoftAssignment
{
  Matrix P;
  std::vector<bool> zero_rows;
};

inline SoftAssignment soft_assignment(std::span<const double> p, std::size_t ne, std::size_t nt)
{
  if (p.size() != ne * nt) throw Error(ErrorKind::invalid_input, "eigenvector length does not match ne * nt");
  SoftAssignment s;
  s.P = Matrix(ne, nt);
  s.zero_rows.assign(ne, false);
  for (std::size_t i = 0; i < ne; ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < nt; ++k) sum += std::max(0.0, p[i * nt + k]);
    if (!(sum > 0.0)) {
      s.zero_rows[i] = true;
      continue;
    }
    for (std::size_t k = 0; k < nt; ++k) s.P(i, k) = std::max(0.0, p[i * nt + k]) / sum;
  }
  return s;
}

struct HardAssignment
{
  std::vector<int> top_of_ego;  // index into the top graph, per ego node
  std::vector<std::pair<std::string, std::string>> pairs;
  double profit = 0.0;  // sum of the matched P entries
  double score = 0.0;   // x^T A x
};

/// x^T A x for the indicator vector of `top_of_ego`.
inline double assignment_score(const AffinityMatrix& a, std::span<const int> top_of_ego)
{
  double s = 0.0;
  for (std::size_t i = 0; i < top_of_ego.size(); ++i)
    for (std::size_t j = 0; j < top_of_ego.size(); ++j)
      s += a.values(a.index(i, static_cast<std::size_t>(top_of_ego[i])),
                    a.index(j, static_cast<std::size_t>(top_of_ego[j])));
  return s;
}

inline HardAssignment make_assignment(const Matrix& profit, const AffinityMatrix& a, std::vector<int> top_of_ego)
{
  HardAssignment h;
  h.top_of_ego = std::move(top_of_ego);
  for (std::size_t i = 0; i < h.top_of_ego.size(); ++i) {
    const auto k = static_cast<std::size_t>(h.top_of_ego[i]);
    h.pairs.emplace_back(a.ego_ids.at(i), a.top_ids.at(k));
    h.profit += profit(i, k);
  }
  h.score = assignment_score(a, h.top_of_ego);
  return h;
}

/// Munkres on the soft assignment, scored by x^T A x.
inline HardAssignment hard_assignment(const SoftAssignment& soft, const AffinityMatrix& a)
{
  if (soft.P.rows() != a.ne || soft.P.cols() != a.nt)
    throw Error(ErrorKind::invalid_input, "soft assignment shape does not match the affinity matrix");
  return make_assignment(soft.P, a, max_profit_assignment(soft.P));
}

struct AssignmentResult
{
  Eigenpair eigen;
  SoftAssignment soft;
  HardAssignment hard;

  double normalized_score() const
  {
    const auto ne = static_cast<double>(soft.P.rows());
    return ne > 0 ? hard.score / (ne * ne) : 0.0;
  }
};

inline AssignmentResult spectral_match(const AffinityMatrix& a, const SpectralConfig& cfg = {})
{
  AssignmentResult r;
  r.eigen = leading_eigenvector(a.values, cfg);
  r.soft = soft_assignment(r.eigen.vector, a.ne, a.nt);
  r.hard = hard_assignment(r.soft, a);
  return r;
}

/// Hungarian-only baselines that ignore the graph edges.
enum class UnaryTerm
{
  descriptor_fov,  // 2D unary cross-correlation
  people_count,    // 1D count cross-correlation
};

inline Matrix unary_profit(const AffinityMatrix& a, UnaryTerm term)
{
  Matrix m(a.ne, a.nt);
  for (std::size_t i = 0; i < a.ne; ++i)
    for (std::size_t k = 0; k < a.nt; ++k) {
      const auto& n = a.nodes[a.index(i, k)];
      m(i, k) = term == UnaryTerm::descriptor_fov ? n.unary.value : n.counts.value;
    }
  return m;
}

inline HardAssignment unary_hungarian(const AffinityMatrix& a, UnaryTerm term)
{
  const Matrix profit = unary_profit(a, term);
  return make_assignment(profit, a, max_profit_assignment(profit));
}

/// 1-based position of column `truth` when row `row` of `scores` is sorted
/// in decreasing order (ties keep column order).
inline int rank_in_row(const Matrix& scores, std::size_t row, std::size_t truth)
{
  int rank = 1;
  const double t = scores(row, truth);
  for (std::size_t k = 0; k < scores.cols(); ++k) {
    const double v = scores(row, k);
    if (v > t || (v == t && k < truth)) ++rank;
  }
  return rank;
}

struct RankedCandidate
{
  std::string id;
  double score = 0.0;
  double normalized_score = 0.0;
  bool feasible = true;
};

struct Candidate
{
  std::string id;
  ViewGraph graph;
};

struct RankOptions
{
  bool unary_only = false;
  unsigned jobs = 1;
};

/// Scores every candidate top-view graph against the ego graph with the full
/// matching pipeline and sorts by x^T A x, best first. Candidates with fewer
/// viewers than ego videos rank last with score -inf.
inline std::vector<RankedCandidate> rank_top_videos(const ViewGraph& ego, std::span<const Candidate> candidates,
                                                    const XCorrConfig& xcfg, const SpectralConfig& scfg = {},
                                                    const RankOptions& opts = {})
{
  if (candidates.empty()) throw Error(ErrorKind::invalid_input, "no candidate top-view videos");
  std::vector<RankedCandidate> out(candidates.size());
  parallel_for(candidates.size(), opts.jobs, [&](std::size_t c) {
    out[c].id = candidates[c].id;
    if (candidates[c].graph.size() < ego.size()) {
      out[c].feasible = false;
      out[c].score = -std::numeric_limits<double>::infinity();
      out[c].normalized_score = out[c].score;
      return;
    }
    auto a = assemble_affinity(ego, candidates[c].graph, xcfg);
    if (opts.unary_only) a = unary_only(a);
    const auto r = spectral_match(a, scfg);
    out[c].score = r.hard.score;
    out[c].normalized_score = r.normalized_score();
  });
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedCandidate& x, const RankedCandidate& y) { return x.score > y.score; });
  return out;
}

/// Entry k is the fraction of queries whose rank is <= k + 1.
inline std::vector<double> cmc_curve(std::span<const int> ranks, int n)
{
  if (n < 1) throw Error(ErrorKind::invalid_input, "CMC length must be >= 1");
  std::vector<double> hits(static_cast<std::size_t>(n), 0.0);
  for (int r : ranks) {
    if (r < 1 || r > n) throw Error(ErrorKind::invalid_input, "rank " + std::to_string(r) + " outside [1, N]");
    hits[static_cast<std::size_t>(r - 1)] += 1.0;
  }
  std::vector<double> curve(hits.size(), 0.0);
  double acc = 0.0;
  for (std::size_t k = 0; k < hits.size(); ++k) {
    acc += hits[k];
    curve[k] = ranks.empty() ? 0.0 : acc / static_cast<double>(ranks.size());
  }
  return curve;
}

using Truth = std::map<std::string, std::string>;  // ego id -> top viewer id

inline double assignment_accuracy(const HardAssignment& pred, const Truth& truth)
{
  if (pred.pairs.empty()) return 0.0;
  int correct = 0;
  for (const auto& [ego, top] : pred.pairs) {
    auto it = truth.find(ego);
    if (it == truth.end()) throw Error(ErrorKind::invalid_input, "no ground truth for ego video '" + ego + "'");
    if (it->second == top) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pred.pairs.size());
}

/// Ranks of the true top viewer in each ego row of P.
inline std::vector<int> viewer_ranks(const SoftAssignment& soft, const AffinityMatrix& a, const Truth& truth)
{
  std::vector<int> ranks;
  for (std::size_t i = 0; i < a.ne; ++i) {
    auto it = truth.find(a.ego_ids[i]);
    if (it == truth.end())
      throw Error(ErrorKind::invalid_input, "no ground truth for ego video '" + a.ego_ids[i] + "'");
    auto k = std::find(a.top_ids.begin(), a.top_ids.end(), it->second);
    if (k == a.top_ids.end())
      throw Error(ErrorKind::invalid_input, "true viewer '" + it->second + "' is not in the top view");
    ranks.push_back(rank_in_row(soft.P, i, static_cast<std::size_t>(k - a.top_ids.begin())));
  }
  return ranks;
}

enum class SweepMethod
{
  graph_matching,
  unary_hungarian,
};

struct SubsetPolicy
{
  std::size_t cap = 255;
  std::uint64_t seed = 0;
  SweepMethod method = SweepMethod::graph_matching;
};

struct SweepRun
{
  std::vector<std::size_t> egos;
  double ratio = 0.0;
  double accuracy = 0.0;
  double mean_rank = 0.0;
};

struct SweepRow
{
  double ratio = 0.0;
  std::size_t runs = 0;
  double mean_accuracy = 0.0;
  double mean_rank = 0.0;
};

struct SweepTable
{
  std::vector<SweepRun> runs;
  std::vector<SweepRow> rows;  // grouped by ratio, ascending
};

/// Non-empty ego subsets as bitmasks: all of them when there are at most
/// `cap`, otherwise `cap` distinct masks drawn with `seed`. Sorted ascending.
inline std::vector<std::uint64_t> ego_subsets(std::size_t ne, const SubsetPolicy& policy)
{
  if (ne == 0 || ne > 63) throw Error(ErrorKind::invalid_input, "unsupported number of ego videos");
  const std::uint64_t total = (std::uint64_t{1} << ne) - 1;
  std::vector<std::uint64_t> masks;
  if (total <= policy.cap) {
    for (std::uint64_t m = 1; m <= total; ++m) masks.push_back(m);
    return masks;
  }
  std::mt19937_64 rng(policy.seed);
  std::uniform_int_distribution<std::uint64_t> pick(1, total);
  while (masks.size() < policy.cap) {
    const auto m = pick(rng);
    if (std::find(masks.begin(), masks.end(), m) == masks.end()) masks.push_back(m);
  }
  std::sort(masks.begin(), masks.end());
  return masks;
}

/// Runs the matcher on ego subsets of a scenario whose full affinity matrix
/// is given and groups accuracy and mean true-viewer rank by the
/// completeness ratio |subset| / nt.
inline SweepTable completeness_sweep(const AffinityMatrix& full, const Truth& truth, const SubsetPolicy& policy = {},
                                     const SpectralConfig& scfg = {})
{
  SweepTable table;
  std::map<std::size_t, SweepRow> by_size;
  for (auto mask : ego_subsets(full.ne, policy)) {
    SweepRun run;
    for (std::size_t e = 0; e < full.ne; ++e)
      if (mask >> e & 1u) run.egos.push_back(e);
    const auto sub = restrict_ego(full, run.egos);
    run.ratio = static_cast<double>(run.egos.size()) / static_cast<double>(full.nt);
    std::vector<int> ranks;
    if (policy.method == SweepMethod::graph_matching) {
      const auto r = spectral_match(sub, scfg);
      run.accuracy = assignment_accuracy(r.hard, truth);
      ranks = viewer_ranks(r.soft, sub, truth);
    } else {
      const auto h = unary_hungarian(sub, UnaryTerm::descriptor_fov);
      run.accuracy = assignment_accuracy(h, truth);
      SoftAssignment scores{unary_profit(sub, UnaryTerm::descriptor_fov), std::vector<bool>(sub.ne, false)};
      ranks = viewer_ranks(scores, sub, truth);
    }
    run.mean_rank = std::accumulate(ranks.begin(), ranks.end(), 0.0) / static_cast<double>(ranks.size());
    auto& row = by_size[run.egos.size()];
    row.ratio = run.ratio;
    row.runs += 1;
    row.mean_accuracy += run.accuracy;
    row.mean_rank += run.mean_rank;
    table.runs.push_back(std::move(run));
  }
  for (auto& [size, row] : by_size) {
    row.mean_accuracy /= static_cast<double>(row.runs);
    row.mean_rank /= static_cast<double>(row.runs);
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace ego2top

#endif
