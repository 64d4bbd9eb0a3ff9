// ego2top: command-line front end.
//
//   ego2top simulate --config cfg.json --out DIR
//   ego2top assign   --top trajectories.csv --ego-dir DIR --out result.json
//   ego2top rank     --ego-dir DIR --candidates manifest.csv --out ranking.csv
//   ego2top evaluate --results DIR --truth truth.json... --out metrics.csv
//
// Exit codes: 0 success, 2 input or configuration error, 3 infeasible problem.
// EGO2TOP_LOG_LEVEL selects the stderr log level (trace .. off, default info).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "ego2top/io.hpp"
#include "ego2top/matching.hpp"
#include "ego2top/pipeline.hpp"
#include "ego2top/simulator.hpp"

namespace
{

namespace fs = std::filesystem;
namespace io = ego2top::io;
using ego2top::Error;
using ego2top::ErrorKind;

constexpr int exit_ok = 0;
constexpr int exit_input = 2;
constexpr int exit_infeasible = 3;

struct Overrides
{
  std::string config;
  std::optional<double> theta_d;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::optional<double> min_overlap;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

struct RunConfig
{
  ego2top::PipelineConfig pipeline;
  io::json root = io::json::object();
};

RunConfig load_config(const Overrides& o)
{
  RunConfig rc;
  if (!o.config.empty()) {
    rc.root = io::read_json(o.config);
    io::apply_pipeline_config(rc.root, rc.pipeline);
  }
  if (o.theta_d) rc.pipeline.geometry.theta_d = io::radians(*o.theta_d);
  if (o.alpha) rc.pipeline.xcorr.alpha = *o.alpha;
  if (o.gamma) rc.pipeline.xcorr.gamma = *o.gamma;
  if (o.min_overlap) rc.pipeline.xcorr.min_overlap_fraction = *o.min_overlap;
  if (o.jobs) {
    if (*o.jobs < 1) throw Error(ErrorKind::invalid_input, "--jobs must be >= 1");
    rc.pipeline.jobs = static_cast<unsigned>(*o.jobs);
  }
  rc.pipeline.validate();
  return rc;
}

int cmd_simulate(const Overrides& o, const fs::path& out)
{
  if (o.config.empty()) throw Error(ErrorKind::invalid_input, "simulate needs --config");
  const auto rc = load_config(o);
  auto sc = io::scenario_config_from_json(rc.root);
  sc.geometry = rc.pipeline.geometry;
  if (o.seed) sc.rng_seed = *o.seed;
  spdlog::info("simulating {} viewers, {} ego videos, {} frames, seed {}", sc.n_viewers, sc.n_ego, sc.frames,
               sc.rng_seed);
  const auto scenario = ego2top::generate_scenario(sc);
  io::write_scenario(out, scenario);
  spdlog::info("wrote scenario to {}", out.string());
  return exit_ok;
}

int cmd_assign(const Overrides& o, const fs::path& top, const fs::path& ego_dir, const fs::path& out,
               const std::string& dump)
{
  const auto rc = load_config(o);
  const auto trajectories = io::read_trajectories(top);
  const auto videos = io::read_ego_dir(ego_dir);
  spdlog::info("matching {} ego videos against {} viewers", videos.size(), trajectories.size());
  if (videos.size() > trajectories.size())
    throw Error(ErrorKind::invalid_problem, std::to_string(videos.size()) + " ego videos but only " +
                                                std::to_string(trajectories.size()) + " top-view viewers");
  auto cfg = rc.pipeline;
  cfg.geometry = ego2top::resolve_radius(cfg.geometry, trajectories);
  const auto m = ego2top::match_scene(trajectories, videos, cfg);
  if (!m.result.eigen.converged)
    spdlog::warn("power iteration stopped after {} iterations (residual {})", m.result.eigen.iterations,
                 m.result.eigen.residual);
  io::write_json(out, io::result_json(m, cfg));
  if (!dump.empty()) io::write_json(dump, io::affinity_dump_json(m.affinity));
  for (const auto& [e, t] : m.result.hard.pairs) spdlog::info("{} -> {}", e, t);
  return exit_ok;
}

int cmd_rank(const Overrides& o, const fs::path& ego_dir, const fs::path& manifest, const fs::path& out,
             bool unary_only)
{
  const auto rc = load_config(o);
  const auto videos = io::read_ego_dir(ego_dir);
  const auto entries = io::read_manifest(manifest);
  const auto ego = ego2top::ego_graph(videos, rc.pipeline);
  std::vector<ego2top::Candidate> candidates;
  for (const auto& e : entries) {
    const auto trajectories = io::read_trajectories(e.trajectories);
    candidates.push_back({e.id, ego2top::top_graph(trajectories, rc.pipeline)});
  }
  spdlog::info("ranking {} candidate top-view videos", candidates.size());
  ego2top::RankOptions opts;
  opts.unary_only = unary_only;
  opts.jobs = rc.pipeline.jobs;
  const auto ranked = ego2top::rank_top_videos(ego, candidates, rc.pipeline.xcorr, rc.pipeline.spectral, opts);
  io::write_rank_csv(out, ranked);
  return exit_ok;
}

// Truth for result "<stem>.json" is a truth file named "<stem>.truth.json" or
// "<stem>.json", or one named "truth.json" inside a directory called <stem>.
// A single truth file applies to every result.
std::string truth_key(const fs::path& p)
{
  const std::string name = p.filename().string();
  if (name == "truth.json") return p.parent_path().filename().string();
  const std::string suffix = ".truth.json";
  if (name.size() > suffix.size() && name.ends_with(suffix)) return name.substr(0, name.size() - suffix.size());
  return p.stem().string();
}

fs::path sibling(const fs::path& out, const std::string& tag)
{
  return out.parent_path() / (out.stem().string() + "_" + tag + out.extension().string());
}

int cmd_evaluate(const Overrides& o, const fs::path& results_dir, const std::vector<std::string>& truth_files,
                 const fs::path& out, std::string cmc_path, std::string sweep_path, std::size_t cap)
{
  if (!fs::is_directory(results_dir))
    throw Error(ErrorKind::invalid_input, "'" + results_dir.string() + "' is not a directory");
  std::map<std::string, ego2top::Truth> truths;
  for (const auto& t : truth_files) truths[truth_key(t)] = io::read_truth(t);

  std::vector<fs::path> results;
  for (const auto& entry : fs::directory_iterator(results_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") results.push_back(entry.path());
  std::sort(results.begin(), results.end());
  if (results.empty()) throw Error(ErrorKind::invalid_input, "no result files in '" + results_dir.string() + "'");

  const auto spectral = load_config(o).pipeline.spectral;
  ego2top::SubsetPolicy policy;
  policy.cap = cap;
  policy.seed = o.seed.value_or(0);
  std::string table = "result,pairs,correct,accuracy\n";
  std::size_t all_pairs = 0;
  std::size_t all_correct = 0;
  std::vector<int> ranks;
  std::size_t nt_max = 0;
  std::map<double, ego2top::SweepRow> sweep;
  for (const auto& path : results) {
    const auto stem = path.stem().string();
    const ego2top::Truth* truth = nullptr;
    if (auto it = truths.find(stem); it != truths.end())
      truth = &it->second;
    else if (truth_files.size() == 1)
      truth = &truths.begin()->second;
    else
      throw Error(ErrorKind::invalid_input, "no ground truth for result '" + path.string() + "'");

    const auto r = io::read_result(path);
    const double acc = ego2top::assignment_accuracy(r.hard, *truth);
    const auto correct = static_cast<std::size_t>(std::lround(acc * static_cast<double>(r.hard.pairs.size())));
    table += stem + "," + std::to_string(r.hard.pairs.size()) + "," + std::to_string(correct) + "," +
             io::format_number(acc) + "\n";
    all_pairs += r.hard.pairs.size();
    all_correct += correct;
    const auto rk = ego2top::viewer_ranks(r.soft, r.affinity, *truth);
    ranks.insert(ranks.end(), rk.begin(), rk.end());
    nt_max = std::max(nt_max, r.affinity.nt);

    // Completeness sweep needs only A; node diagnostics are not stored.
    auto a = r.affinity;
    a.nodes.assign(a.ne * a.nt, {});
    const auto s = ego2top::completeness_sweep(a, *truth, policy, spectral);
    for (const auto& run : s.runs) {
      auto& row = sweep[run.ratio];
      row.ratio = run.ratio;
      row.runs += 1;
      row.mean_accuracy += run.accuracy;
      row.mean_rank += run.mean_rank;
    }
  }
  const double mean = all_pairs ? static_cast<double>(all_correct) / static_cast<double>(all_pairs) : 0.0;
  table += "all," + std::to_string(all_pairs) + "," + std::to_string(all_correct) + "," + io::format_number(mean) + "\n";
  io::write_text(out, table);

  std::vector<ego2top::SweepRow> rows;
  for (auto& [ratio, row] : sweep) {
    row.mean_accuracy /= static_cast<double>(row.runs);
    row.mean_rank /= static_cast<double>(row.runs);
    rows.push_back(row);
  }
  io::write_cmc_csv(cmc_path.empty() ? sibling(out, "cmc") : fs::path(cmc_path),
                    ego2top::cmc_curve(ranks, static_cast<int>(nt_max)));
  io::write_sweep_csv(sweep_path.empty() ? sibling(out, "sweep") : fs::path(sweep_path), rows);
  spdlog::info("accuracy {} over {} pairs in {} results", mean, all_pairs, results.size());
  return exit_ok;
}

void setup_logging()
{
  auto logger = spdlog::stderr_color_mt("ego2top");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("EGO2TOP_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("unknown EGO2TOP_LOG_LEVEL '{}', keeping info", env);
    else
      spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv)
{
  setup_logging();

  CLI::App app{"Match egocentric videos to viewers in a top-view video"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--theta-d", o.theta_d, "Top-FOV half-angle in degrees");
  app.add_option("--alpha", o.alpha, "Weight of the descriptor term in the node affinity");
  app.add_option("--gamma", o.gamma, "Descriptor similarity decay");
  app.add_option("--min-overlap", o.min_overlap, "Minimum cross-correlation overlap fraction");
  app.add_option("--seed", o.seed, "Random seed (simulation, subset sampling)");
  app.add_option("--jobs", o.jobs, "Worker threads");

  std::string out, top, ego_dir, candidates, dump, results_dir, cmc, sweep;
  std::vector<std::string> truth;
  bool unary_only = false;
  std::size_t cap = 255;

  auto* sim = app.add_subcommand("simulate", "Write a synthetic scenario directory");
  sim->add_option("--out", out, "Output directory")->required();

  auto* assign = app.add_subcommand("assign", "Assign ego videos to top-view viewers");
  assign->add_option("--top", top, "Top-view trajectory CSV")->required();
  assign->add_option("--ego-dir", ego_dir, "Directory of ego videos")->required();
  assign->add_option("--out", out, "Result JSON")->required();
  assign->add_option("--dump-affinity", dump, "Also write A and all cross-correlation diagnostics here");

  auto* rank = app.add_subcommand("rank", "Rank candidate top-view videos for a set of ego videos");
  rank->add_option("--ego-dir", ego_dir, "Directory of ego videos")->required();
  rank->add_option("--candidates", candidates, "Manifest CSV: candidate_id,trajectories")->required();
  rank->add_option("--out", out, "Ranking CSV")->required();
  rank->add_flag("--unary-only", unary_only, "Score with node affinities only");

  auto* eval = app.add_subcommand("evaluate", "Accuracy, CMC and completeness sweep over result files");
  eval->add_option("--results", results_dir, "Directory of result JSON files")->required();
  eval->add_option("--truth", truth, "Ground-truth JSON files")->required();
  eval->add_option("--out", out, "Accuracy CSV")->required();
  eval->add_option("--cmc", cmc, "CMC CSV (default: <out>_cmc.csv)");
  eval->add_option("--sweep", sweep, "Completeness sweep CSV (default: <out>_sweep.csv)");
  eval->add_option("--subset-cap", cap, "Maximum number of ego subsets per result")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_input;
  }

  try {
    if (*sim) return cmd_simulate(o, out);
    if (*assign) return cmd_assign(o, top, ego_dir, out, dump);
    if (*rank) return cmd_rank(o, ego_dir, candidates, out, unary_only);
    if (*eval) return cmd_evaluate(o, results_dir, truth, out, cmc, sweep, cap);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    const bool infeasible = e.kind() == ErrorKind::invalid_problem || e.kind() == ErrorKind::degenerate_affinity;
    return infeasible ? exit_infeasible : exit_input;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return exit_input;
  }
  return exit_input;
}
