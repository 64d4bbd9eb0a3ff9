#ifndef EGO2TOP_IO_HPP_
#define EGO2TOP_IO_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "ego2top/core.hpp"
#include "ego2top/features.hpp"
#include "ego2top/geometry.hpp"
#include "ego2top/graph.hpp"
#include "ego2top/matching.hpp"
#include "ego2top/pipeline.hpp"
#include "ego2top/simulator.hpp"

namespace ego2top::io
{

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Text helpers

/// Shortest representation that parses back to the same double.
inline std::string format_number(double v)
{
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error(ErrorKind::invalid_input, "number formatting failed");
  return std::string(buf, end);
}

inline std::string read_text(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::invalid_input, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::invalid_input, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorKind::invalid_input, "write to '" + path.string() + "' failed");
}

inline json read_json(const fs::path& path)
{
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

namespace detail
{

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

inline CsvTable read_csv(const fs::path& path)
{
  const std::string text = read_text(path);
  CsvTable t;
  std::size_t pos = 0, line_no = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string_view line = trim(std::string_view(text).substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(line)) cells.emplace_back(c);
    if (!have_header) {
      t.header = std::move(cells);
      have_header = true;
    } else {
      if (cells.size() != t.header.size())
        throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                                  std::to_string(t.header.size()) + " fields");
      t.rows.push_back(std::move(cells));
      t.line_numbers.push_back(line_no);
    }
  }
  if (!have_header) throw Error(ErrorKind::invalid_input, "'" + path.string() + "' is empty");
  return t;
}

inline void expect_header(const CsvTable& t, const std::vector<std::string>& want, const fs::path& path)
{
  if (t.header != want) {
    std::string w;
    for (const auto& h : want) w += (w.empty() ? "" : ",") + h;
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "' must have header '" + w + "'");
  }
}

inline double parse_double(const std::string& s, const fs::path& path, std::size_t line)
{
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || !std::isfinite(v))
    throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

inline std::size_t parse_frame(const std::string& s, const fs::path& path, std::size_t line)
{
  std::size_t v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || s.empty())
    throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) + ": bad frame '" + s + "'");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectories: frame,viewer_id,x,y

/// Viewers come back in order of first appearance; each must cover frames
/// 0..T-1 exactly once with the same T.
inline std::vector<Trajectory> read_trajectories(const fs::path& path)
{
  const auto t = detail::read_csv(path);
  detail::expect_header(t, {"frame", "viewer_id", "x", "y"}, path);
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, Point>> by_viewer;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const auto line = t.line_numbers[r];
    const auto frame = detail::parse_frame(row[0], path, line);
    if (row[1].empty()) throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) + ": empty viewer id");
    if (!by_viewer.contains(row[1])) order.push_back(row[1]);
    const Point p{detail::parse_double(row[2], path, line), detail::parse_double(row[3], path, line)};
    if (!by_viewer[row[1]].emplace(frame, p).second)
      throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) + ": duplicate frame " +
                                                std::to_string(frame) + " for viewer '" + row[1] + "'");
  }
  if (order.empty()) throw Error(ErrorKind::invalid_input, "'" + path.string() + "' has no trajectory rows");
  std::vector<Trajectory> out;
  for (const auto& id : order) {
    const auto& frames = by_viewer[id];
    Trajectory traj;
    traj.viewer_id = id;
    std::size_t expect = 0;
    for (const auto& [f, p] : frames) {
      if (f != expect)
        throw Error(ErrorKind::invalid_input, "viewer '" + id + "' is missing frame " + std::to_string(expect));
      traj.positions.push_back(p);
      ++expect;
    }
    if (!out.empty() && traj.frames() != out.front().frames())
      throw Error(ErrorKind::invalid_input, "viewer '" + id + "' has a different frame count than '" +
                                                out.front().viewer_id + "'");
    validate_trajectory(traj);
    out.push_back(std::move(traj));
  }
  return out;
}

inline void write_trajectories(const fs::path& path, std::span<const Trajectory> trajectories)
{
  std::string s = "frame,viewer_id,x,y\n";
  std::size_t frames = 0;
  for (const auto& t : trajectories) frames = std::max(frames, t.frames());
  for (std::size_t f = 0; f < frames; ++f)
    for (const auto& t : trajectories) {
      if (f >= t.frames()) continue;
      s += std::to_string(f) + "," + t.viewer_id + "," + format_number(t.positions[f].x) + "," +
           format_number(t.positions[f].y) + "\n";
    }
  write_text(path, s);
}

// ---------------------------------------------------------------------------
// Descriptors: frame,f0,...,f{D-1}

inline FrameDescriptorSequence read_descriptors(const fs::path& path, const std::string& video_id)
{
  const auto t = detail::read_csv(path);
  if (t.header.size() < 2 || t.header[0] != "frame")
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "' must have header 'frame,f0,f1,...'");
  for (std::size_t d = 1; d < t.header.size(); ++d)
    if (t.header[d] != "f" + std::to_string(d - 1))
      throw Error(ErrorKind::invalid_input, "'" + path.string() + "': column " + std::to_string(d) + " must be 'f" +
                                                std::to_string(d - 1) + "'");
  FrameDescriptorSequence s;
  s.video_id = video_id;
  s.vectors = Matrix(t.rows.size(), t.header.size() - 1);
  std::vector<bool> seen(t.rows.size(), false);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto line = t.line_numbers[r];
    const auto f = detail::parse_frame(t.rows[r][0], path, line);
    if (f >= t.rows.size() || seen[f])
      throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) +
                                                ": frames must be 0..T-1, each once");
    seen[f] = true;
    for (std::size_t d = 1; d < t.header.size(); ++d) s.vectors(f, d - 1) = detail::parse_double(t.rows[r][d], path, line);
  }
  validate_descriptors(s);
  return s;
}

inline void write_descriptors(const fs::path& path, const FrameDescriptorSequence& s)
{
  std::string out = "frame";
  for (std::size_t d = 0; d < s.dim(); ++d) out += ",f" + std::to_string(d);
  out += "\n";
  for (std::size_t f = 0; f < s.frames(); ++f) {
    out += std::to_string(f);
    for (double v : s.vectors.row(f)) out += "," + format_number(v);
    out += "\n";
  }
  write_text(path, out);
}

// ---------------------------------------------------------------------------
// Detections: frame,score,box_height -- one row per detection; frames
// without detections have no rows.

inline DetectionSeries read_detections(const fs::path& path, const std::string& video_id, std::size_t frames)
{
  const auto t = detail::read_csv(path);
  detail::expect_header(t, {"frame", "score", "box_height"}, path);
  DetectionSeries d;
  d.video_id = video_id;
  d.frames.resize(frames);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto line = t.line_numbers[r];
    const auto f = detail::parse_frame(t.rows[r][0], path, line);
    if (f >= frames)
      throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(line) + ": frame " +
                                                std::to_string(f) + " beyond the video's " + std::to_string(frames) +
                                                " frames");
    d.frames[f].push_back({detail::parse_double(t.rows[r][1], path, line), detail::parse_double(t.rows[r][2], path, line)});
  }
  validate_detections(d);
  return d;
}

inline void write_detections(const fs::path& path, const DetectionSeries& d)
{
  std::string out = "frame,score,box_height\n";
  for (std::size_t f = 0; f < d.frames.size(); ++f)
    for (const auto& det : d.frames[f])
      out += std::to_string(f) + "," + format_number(det.score) + "," + format_number(det.box_height) + "\n";
  write_text(path, out);
}

// ---------------------------------------------------------------------------
// Ego directory: <dir>/<video_id>/{descriptors,detections}.csv

inline std::vector<EgoVideo> read_ego_dir(const fs::path& dir)
{
  if (!fs::is_directory(dir)) throw Error(ErrorKind::invalid_input, "'" + dir.string() + "' is not a directory");
  std::vector<fs::path> subdirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) subdirs.push_back(entry.path());
  std::sort(subdirs.begin(), subdirs.end());
  if (subdirs.empty()) throw Error(ErrorKind::invalid_input, "'" + dir.string() + "' contains no ego videos");
  std::vector<EgoVideo> out;
  for (const auto& sub : subdirs) {
    EgoVideo v;
    const std::string id = sub.filename().string();
    v.descriptors = read_descriptors(sub / "descriptors.csv", id);
    v.detections = read_detections(sub / "detections.csv", id, v.descriptors.frames());
    out.push_back(std::move(v));
  }
  return out;
}

inline void write_ego_dir(const fs::path& dir, std::span<const EgoVideo> videos)
{
  for (const auto& v : videos) {
    write_descriptors(dir / v.descriptors.video_id / "descriptors.csv", v.descriptors);
    write_detections(dir / v.descriptors.video_id / "detections.csv", v.detections);
  }
}

// ---------------------------------------------------------------------------
// Ground truth: {"ego_id": "viewer_id", ...}

inline Truth read_truth(const fs::path& path)
{
  const json j = read_json(path);
  if (!j.is_object()) throw Error(ErrorKind::invalid_input, "'" + path.string() + "' must hold a JSON object");
  Truth t;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string())
      throw Error(ErrorKind::invalid_input, "'" + path.string() + "': value for '" + k + "' must be a string");
    t[k] = v.get<std::string>();
  }
  return t;
}

inline void write_truth(const fs::path& path, const Truth& truth) { write_json(path, json(truth)); }

// ---------------------------------------------------------------------------
// Configuration. Angles are in degrees in JSON and on the command line.

namespace detail
{

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
  if (!j.is_object()) throw Error(ErrorKind::invalid_input, where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.contains(k)) throw Error(ErrorKind::invalid_input, "unknown key '" + k + "' in " + where);
}

template<typename T>
void take(const json& j, const char* key, T& out, const std::string& where)
{
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::invalid_input, "bad value for '" + std::string(key) + "' in " + where);
  }
}

inline XCorrNormalization parse_normalization(const std::string& s)
{
  if (s == "zncc") return XCorrNormalization::zncc;
  if (s == "mean_product") return XCorrNormalization::mean_product;
  throw Error(ErrorKind::invalid_input, "normalize must be 'zncc' or 'mean_product'");
}

inline const char* normalization_name(XCorrNormalization n)
{
  return n == XCorrNormalization::zncc ? "zncc" : "mean_product";
}

}  // namespace detail

inline double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

/// Overlays the "geometry", "features", "xcorr", "spectral" and "jobs"
/// entries of a config object onto `cfg`.
inline void apply_pipeline_config(const json& j, PipelineConfig& cfg)
{
  detail::check_keys(j, {"geometry", "features", "xcorr", "spectral", "jobs", "scenario", "evaluation"}, "config");
  if (j.contains("geometry")) {
    const auto& g = j["geometry"];
    detail::check_keys(g, {"theta_d", "radius", "smoothing_window", "speed_epsilon", "arc_samples"}, "geometry");
    if (g.contains("theta_d")) {
      double deg = 0.0;
      detail::take(g, "theta_d", deg, "geometry");
      cfg.geometry.theta_d = radians(deg);
    }
    if (g.contains("radius")) {
      if (g["radius"].is_null())
        cfg.geometry.radius.reset();
      else {
        double r = 0.0;
        detail::take(g, "radius", r, "geometry");
        cfg.geometry.radius = r;
      }
    }
    detail::take(g, "smoothing_window", cfg.geometry.smoothing_window, "geometry");
    detail::take(g, "speed_epsilon", cfg.geometry.speed_epsilon, "geometry");
    detail::take(g, "arc_samples", cfg.geometry.arc_samples, "geometry");
  }
  if (j.contains("features")) {
    const auto& f = j["features"];
    detail::check_keys(f, {"min_box_height", "frame_stride"}, "features");
    detail::take(f, "min_box_height", cfg.features.min_box_height, "features");
    detail::take(f, "frame_stride", cfg.features.frame_stride, "features");
  }
  if (j.contains("xcorr")) {
    const auto& x = j["xcorr"];
    detail::check_keys(x, {"min_overlap", "normalize", "alpha", "gamma"}, "xcorr");
    detail::take(x, "min_overlap", cfg.xcorr.min_overlap_fraction, "xcorr");
    detail::take(x, "alpha", cfg.xcorr.alpha, "xcorr");
    detail::take(x, "gamma", cfg.xcorr.gamma, "xcorr");
    if (x.contains("normalize")) {
      std::string n;
      detail::take(x, "normalize", n, "xcorr");
      cfg.xcorr.normalize = detail::parse_normalization(n);
    }
  }
  if (j.contains("spectral")) {
    const auto& s = j["spectral"];
    detail::check_keys(s, {"tolerance", "max_iterations"}, "spectral");
    detail::take(s, "tolerance", cfg.spectral.tolerance, "spectral");
    detail::take(s, "max_iterations", cfg.spectral.max_iterations, "spectral");
  }
  if (j.contains("jobs")) {
    int jobs = 1;
    detail::take(j, "jobs", jobs, "config");
    if (jobs < 1) throw Error(ErrorKind::invalid_input, "jobs must be >= 1");
    cfg.jobs = static_cast<unsigned>(jobs);
  }
}

inline json pipeline_config_json(const PipelineConfig& cfg)
{
  json j;
  j["geometry"] = {{"theta_d", degrees(cfg.geometry.theta_d)},
                   {"radius", cfg.geometry.radius ? json(*cfg.geometry.radius) : json(nullptr)},
                   {"smoothing_window", cfg.geometry.smoothing_window},
                   {"speed_epsilon", cfg.geometry.speed_epsilon},
                   {"arc_samples", cfg.geometry.arc_samples}};
  j["features"] = {{"min_box_height", cfg.features.min_box_height}, {"frame_stride", cfg.features.frame_stride}};
  j["xcorr"] = {{"min_overlap", cfg.xcorr.min_overlap_fraction},
                {"normalize", detail::normalization_name(cfg.xcorr.normalize)},
                {"alpha", cfg.xcorr.alpha},
                {"gamma", cfg.xcorr.gamma}};
  j["spectral"] = {{"tolerance", cfg.spectral.tolerance}, {"max_iterations", cfg.spectral.max_iterations}};
  j["jobs"] = cfg.jobs;
  return j;
}

/// Reads the "scenario" section. n_viewers, n_ego, frames and seed are
/// required; everything else falls back to the defaults.
inline ScenarioConfig scenario_config_from_json(const json& root)
{
  if (!root.is_object() || !root.contains("scenario"))
    throw Error(ErrorKind::invalid_input, "config has no 'scenario' section");
  const auto& s = root["scenario"];
  detail::check_keys(s,
                     {"arena_radius", "n_viewers", "n_ego", "frames", "descriptor_dim", "speed_min", "speed_max",
                      "descriptor_noise_sigma", "descriptor_noise_correlation", "detection_fp_rate",
                      "detection_fn_rate", "detection_reference_height", "seed"},
                     "scenario");
  for (const char* key : {"n_viewers", "n_ego", "frames", "seed"})
    if (!s.contains(key)) throw Error(ErrorKind::invalid_input, std::string("scenario is missing '") + key + "'");
  ScenarioConfig c;
  detail::take(s, "arena_radius", c.arena_radius, "scenario");
  detail::take(s, "n_viewers", c.n_viewers, "scenario");
  detail::take(s, "n_ego", c.n_ego, "scenario");
  detail::take(s, "frames", c.frames, "scenario");
  detail::take(s, "descriptor_dim", c.descriptor_dim, "scenario");
  detail::take(s, "speed_min", c.speed_min, "scenario");
  detail::take(s, "speed_max", c.speed_max, "scenario");
  detail::take(s, "descriptor_noise_sigma", c.descriptor_noise_sigma, "scenario");
  detail::take(s, "descriptor_noise_correlation", c.descriptor_noise_correlation, "scenario");
  detail::take(s, "detection_fp_rate", c.detection_fp_rate, "scenario");
  detail::take(s, "detection_fn_rate", c.detection_fn_rate, "scenario");
  detail::take(s, "detection_reference_height", c.detection_reference_height, "scenario");
  detail::take(s, "seed", c.rng_seed, "scenario");
  return c;
}

inline json scenario_config_json(const ScenarioConfig& c)
{
  return {{"arena_radius", c.arena_radius},
          {"n_viewers", c.n_viewers},
          {"n_ego", c.n_ego},
          {"frames", c.frames},
          {"descriptor_dim", c.descriptor_dim},
          {"speed_min", c.speed_min},
          {"speed_max", c.speed_max},
          {"descriptor_noise_sigma", c.descriptor_noise_sigma},
          {"descriptor_noise_correlation", c.descriptor_noise_correlation},
          {"detection_fp_rate", c.detection_fp_rate},
          {"detection_fn_rate", c.detection_fn_rate},
          {"detection_reference_height", c.detection_reference_height},
          {"seed", c.rng_seed}};
}

// ---------------------------------------------------------------------------
// Scenario directory:
//   top/trajectories.csv, ego/<id>/{descriptors,detections}.csv,
//   truth.json, scenario.json

inline void write_scenario(const fs::path& dir, const Scenario& s)
{
  write_trajectories(dir / "top" / "trajectories.csv", s.trajectories);
  write_ego_dir(dir / "ego", s.egos);
  write_truth(dir / "truth.json", s.truth);
  json echo;
  echo["scenario"] = scenario_config_json(s.config);
  echo["geometry"] = {{"theta_d", degrees(s.geometry.theta_d)}, {"radius", s.geometry.sector_radius()},
                      {"smoothing_window", s.geometry.smoothing_window},
                      {"speed_epsilon", s.geometry.speed_epsilon}, {"arc_samples", s.geometry.arc_samples}};
  write_json(dir / "scenario.json", echo);
}

// ---------------------------------------------------------------------------
// Results

inline json matrix_json(const Matrix& m)
{
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& what)
{
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::invalid_input, what + " must be a nonempty 2D array");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw Error(ErrorKind::invalid_input, what + " rows must share one length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw Error(ErrorKind::invalid_input, what + " must hold numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

inline json node_json(const AffinityMatrix& a, std::size_t i, std::size_t k)
{
  const auto& n = a.nodes[a.index(i, k)];
  return {{"ego", a.ego_ids[i]},
          {"top", a.top_ids[k]},
          {"affinity", n.value},
          {"unary", {{"value", n.unary.value}, {"dr", n.unary.dr}, {"dc", n.unary.dc},
                     {"insufficient", n.unary_insufficient}}},
          {"counts", {{"value", n.counts.value}, {"shift", n.counts.shift}, {"insufficient", n.counts_insufficient}}}};
}

/// Assignment result: P, hard pairs, score, per-pair shifts, solver stats,
/// the node affinities, the full affinity matrix (used by evaluation) and
/// the configuration.
inline json result_json(const SceneMatch& m, const PipelineConfig& cfg)
{
  const auto& a = m.affinity;
  const auto& r = m.result;
  json j;
  j["ego_ids"] = a.ego_ids;
  j["top_ids"] = a.top_ids;
  j["P"] = matrix_json(r.soft.P);
  json pairs = json::array();
  for (std::size_t i = 0; i < r.hard.pairs.size(); ++i) {
    const auto k = static_cast<std::size_t>(r.hard.top_of_ego[i]);
    pairs.push_back({{"ego", r.hard.pairs[i].first}, {"top", r.hard.pairs[i].second}, {"p", r.soft.P(i, k)}});
  }
  j["pairs"] = pairs;
  j["score"] = r.hard.score;
  j["normalized_score"] = r.normalized_score();
  j["profit"] = r.hard.profit;
  j["eigenvalue"] = r.eigen.value;
  j["residual"] = r.eigen.residual;
  j["iterations"] = r.eigen.iterations;
  j["converged"] = r.eigen.converged;
  json nodes = json::array();
  for (std::size_t i = 0; i < a.ne; ++i)
    for (std::size_t k = 0; k < a.nt; ++k) nodes.push_back(node_json(a, i, k));
  j["nodes"] = nodes;
  j["affinity"] = matrix_json(a.values);
  j["config"] = pipeline_config_json(cfg);
  return j;
}

/// Debug dump: A plus every node and edge cross-correlation diagnostic.
inline json affinity_dump_json(const AffinityMatrix& a)
{
  json j;
  j["ego_ids"] = a.ego_ids;
  j["top_ids"] = a.top_ids;
  j["index"] = "row = ego * nt + top";
  j["A"] = matrix_json(a.values);
  json nodes = json::array();
  for (std::size_t i = 0; i < a.ne; ++i)
    for (std::size_t k = 0; k < a.nt; ++k) nodes.push_back(node_json(a, i, k));
  j["nodes"] = nodes;
  json edges = json::array();
  for (const auto& e : a.edges)
    edges.push_back({{"ego_i", a.ego_ids[e.i]},
                     {"ego_j", a.ego_ids[e.j]},
                     {"top_k", a.top_ids[e.k]},
                     {"top_l", a.top_ids[e.l]},
                     {"value", e.xcorr.value},
                     {"dr", e.xcorr.dr},
                     {"dc", e.xcorr.dc},
                     {"insufficient", e.insufficient}});
  j["edges"] = edges;
  return j;
}

/// What evaluation needs back from a result file.
struct StoredResult
{
  AffinityMatrix affinity;  // values and ids only
  SoftAssignment soft;
  HardAssignment hard;
};

inline StoredResult read_result(const fs::path& path)
{
  const json j = read_json(path);
  StoredResult s;
  try {
    s.affinity.ego_ids = j.at("ego_ids").get<std::vector<std::string>>();
    s.affinity.top_ids = j.at("top_ids").get<std::vector<std::string>>();
    s.affinity.ne = s.affinity.ego_ids.size();
    s.affinity.nt = s.affinity.top_ids.size();
    s.affinity.values = matrix_from_json(j.at("affinity"), "affinity");
    s.soft.P = matrix_from_json(j.at("P"), "P");
    s.soft.zero_rows.assign(s.affinity.ne, false);
    for (const auto& p : j.at("pairs")) {
      const auto ego = p.at("ego").get<std::string>();
      const auto top = p.at("top").get<std::string>();
      auto k = std::find(s.affinity.top_ids.begin(), s.affinity.top_ids.end(), top);
      if (k == s.affinity.top_ids.end())
        throw Error(ErrorKind::invalid_input, "'" + path.string() + "' pairs an unknown viewer '" + top + "'");
      s.hard.pairs.emplace_back(ego, top);
      s.hard.top_of_ego.push_back(static_cast<int>(k - s.affinity.top_ids.begin()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "' is not an assignment result: " + e.what());
  }
  const auto n = s.affinity.ne * s.affinity.nt;
  if (n == 0 || s.affinity.values.rows() != n || s.affinity.values.cols() != n || s.soft.P.rows() != s.affinity.ne ||
      s.soft.P.cols() != s.affinity.nt)
    throw Error(ErrorKind::invalid_input, "'" + path.string() + "' has inconsistent matrix shapes");
  return s;
}

// ---------------------------------------------------------------------------
// Tables

inline void write_rank_csv(const fs::path& path, std::span<const RankedCandidate> ranked)
{
  std::string s = "rank,candidate_id,score,normalized_score,feasible\n";
  for (std::size_t r = 0; r < ranked.size(); ++r)
    s += std::to_string(r + 1) + "," + ranked[r].id + "," + format_number(ranked[r].score) + "," +
         format_number(ranked[r].normalized_score) + "," + (ranked[r].feasible ? "1" : "0") + "\n";
  write_text(path, s);
}

inline void write_cmc_csv(const fs::path& path, std::span<const double> curve)
{
  std::string s = "rank,fraction\n";
  for (std::size_t k = 0; k < curve.size(); ++k) s += std::to_string(k + 1) + "," + format_number(curve[k]) + "\n";
  write_text(path, s);
}

inline void write_sweep_csv(const fs::path& path, std::span<const SweepRow> rows)
{
  std::string s = "ratio,runs,mean_accuracy,mean_rank\n";
  for (const auto& r : rows)
    s += format_number(r.ratio) + "," + std::to_string(r.runs) + "," + format_number(r.mean_accuracy) + "," +
         format_number(r.mean_rank) + "\n";
  write_text(path, s);
}

/// Candidate manifest for ranking: header `candidate_id,trajectories`, paths
/// relative to the manifest's directory.
struct ManifestEntry
{
  std::string id;
  fs::path trajectories;
};

inline std::vector<ManifestEntry> read_manifest(const fs::path& path)
{
  const auto t = detail::read_csv(path);
  detail::expect_header(t, {"candidate_id", "trajectories"}, path);
  std::vector<ManifestEntry> out;
  std::set<std::string> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    ManifestEntry e{t.rows[r][0], fs::path(t.rows[r][1])};
    if (e.id.empty() || !ids.insert(e.id).second)
      throw Error(ErrorKind::invalid_input, path.string() + ":" + std::to_string(t.line_numbers[r]) +
                                                ": empty or duplicate candidate id");
    if (e.trajectories.is_relative()) e.trajectories = path.parent_path() / e.trajectories;
    if (!fs::is_regular_file(e.trajectories))
      throw Error(ErrorKind::invalid_input, "candidate '" + e.id + "': missing file '" + e.trajectories.string() + "'");
    out.push_back(std::move(e));
  }
  if (out.empty()) throw Error(ErrorKind::invalid_input, "'" + path.string() + "' lists no candidates");
  return out;
}

}  // namespace ego2top::io

#endif
