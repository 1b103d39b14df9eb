#pragma once

// Configuration schema ("v1" JSON, unknown keys rejected), trajectory CSV and
// metrics JSON persistence, and atomic file writes.

#include "attnflow/scenarios.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

namespace attnflow {

using Json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Fully resolved run configuration (scenario + output settings).
struct RunConfig {
  Scenario scenario;
  std::string out_dir = ".";
  std::string format = "csv";
  int threads = 1;
  bool store_points = true;
};

namespace detail {

inline void reject_unknown_keys(const Json& j, const std::set<std::string>& allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + it.key() + "' in " + where);
}

inline Mat parse_matrix(const Json& j, int d, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != d * d)
    throw ConfigError("config: " + name + " must be a row-major array of " + std::to_string(d * d) +
                      " numbers");
  Mat m(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) m(r, c) = j[r * d + c].get<double>();
  return m;
}

inline Json dump_matrix(const Mat& m) {
  Json j = Json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) j.push_back(m(r, c));
  return j;
}

inline std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::ProjectedEuler: return "projected-euler";
    case Scheme::ProjectedRk4: return "projected-rk4";
    case Scheme::DiscreteLayer: return "discrete-layer";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "projected-euler") return Scheme::ProjectedEuler;
  if (s == "projected-rk4") return Scheme::ProjectedRk4;
  if (s == "discrete-layer") return Scheme::DiscreteLayer;
  throw ConfigError("config: unknown scheme '" + s + "'");
}

inline std::string clock_name(Clock c) {
  switch (c) {
    case Clock::Plain: return "plain";
    case Clock::Heat: return "heat";
    case Clock::Pairing: return "pairing";
  }
  return "?";
}

inline Clock parse_clock(const std::string& s) {
  if (s == "plain") return Clock::Plain;
  if (s == "heat") return Clock::Heat;
  if (s == "pairing") return Clock::Pairing;
  throw ConfigError("config: unknown clock '" + s + "'");
}

inline std::string init_name(InitKind k) {
  switch (k) {
    case InitKind::Uniform: return "uniform";
    case InitKind::CircleMixture: return "circle_mixture";
    case InitKind::PlaneMixture: return "plane_mixture";
    case InitKind::SphereMixtureUniformElevation: return "sphere_mixture_uniform_elevation";
  }
  return "?";
}

inline InitKind parse_init_kind(const std::string& s) {
  if (s == "uniform") return InitKind::Uniform;
  if (s == "circle_mixture") return InitKind::CircleMixture;
  if (s == "plane_mixture") return InitKind::PlaneMixture;
  if (s == "sphere_mixture_uniform_elevation") return InitKind::SphereMixtureUniformElevation;
  throw ConfigError("config: unknown init kind '" + s + "'");
}

}  // namespace detail

/// Parses a "v1" run configuration. When "scenario" is present the registry
/// defaults are materialized first and explicit keys override them.
inline RunConfig parse_run_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown_keys(
      j,
      {"version", "scenario", "d", "N", "beta", "Q", "K", "V", "init", "integrator", "observables",
       "seed", "threads", "out_dir", "format", "store_points"},
      "top level");
  if (!j.contains("version") || j["version"] != "v1")
    throw ConfigError("config: missing or unsupported version (expected \"v1\")");

  RunConfig rc;
  if (j.contains("scenario")) {
    rc.scenario = scenario_defaults(j["scenario"].get<std::string>());
  } else {
    rc.scenario.id = "custom";
    if (!j.contains("d") || !j.contains("N") || !j.contains("beta"))
      throw ConfigError("config: custom runs require d, N, beta");
    const int d = j["d"].get<int>();
    rc.scenario.d = d;
    rc.scenario.params = ModelParams::identity(d, 1.0);
  }
  Scenario& sc = rc.scenario;
  if (j.contains("d")) sc.d = j["d"].get<int>();
  if (sc.d < 2) throw ConfigError("config: d must be >= 2");
  if (j.contains("N")) sc.N = j["N"].get<int>();
  if (sc.N < 1) throw ConfigError("config: N must be >= 1");
  if (j.contains("beta")) sc.params.beta = j["beta"].get<double>();
  if (!(sc.params.beta > 0)) throw ConfigError("config: beta must be > 0");
  if (sc.params.Q.rows() != sc.d) sc.params = ModelParams::identity(sc.d, sc.params.beta);
  if (j.contains("Q")) sc.params.Q = detail::parse_matrix(j["Q"], sc.d, "Q");
  if (j.contains("K")) sc.params.K = detail::parse_matrix(j["K"], sc.d, "K");
  if (j.contains("V")) sc.params.V = detail::parse_matrix(j["V"], sc.d, "V");

  if (j.contains("init")) {
    const Json& ji = j["init"];
    detail::reject_unknown_keys(ji, {"kind", "weights", "means", "var"}, "init");
    if (!ji.contains("kind")) throw ConfigError("config: init requires kind");
    sc.init = detail::parse_init_kind(ji["kind"].get<std::string>());
    if (sc.init != InitKind::Uniform) {
      if (ji.contains("weights") != ji.contains("means"))
        throw ConfigError("config: init weights and means must be given together");
      if (ji.contains("weights")) {
        const auto w = ji["weights"].get<std::vector<double>>();
        const auto m = ji["means"].get<std::vector<double>>();
        const double var = ji.contains("var") ? ji["var"].get<double>() : 0.04;
        if (w.size() != m.size() || w.empty())
          throw ConfigError("config: init weights/means size mismatch");
        if (!(var > 0)) throw ConfigError("config: init var must be > 0");
        sc.mixture.components.clear();
        sc.mixture.d = 2;
        for (std::size_t k = 0; k < w.size(); ++k) {
          HeatComponent c;
          c.center = (Vec(2) << std::cos(m[k]), std::sin(m[k])).finished();
          c.var = var;
          c.weight = w[k];
          sc.mixture.components.push_back(c);
        }
      } else if (sc.mixture.components.empty()) {
        throw ConfigError("config: mixture init requires weights/means (no scenario default)");
      }
    }
  }

  if (j.contains("integrator")) {
    const Json& jc = j["integrator"];
    detail::reject_unknown_keys(
        jc, {"scheme", "h", "clock", "max_steps", "snapshot_stride", "canonical_reduction"},
        "integrator");
    if (jc.contains("scheme")) sc.cfg.scheme = detail::parse_scheme(jc["scheme"].get<std::string>());
    if (jc.contains("h")) sc.cfg.h = jc["h"].get<double>();
    if (jc.contains("clock")) sc.cfg.clock = detail::parse_clock(jc["clock"].get<std::string>());
    if (jc.contains("max_steps")) sc.cfg.max_steps = jc["max_steps"].get<int>();
    if (jc.contains("snapshot_stride")) sc.cfg.snapshot_stride = jc["snapshot_stride"].get<int>();
    if (jc.contains("canonical_reduction"))
      sc.cfg.canonical_reduction = jc["canonical_reduction"].get<bool>();
    if (!(sc.cfg.h > 0) || sc.cfg.max_steps < 1 || sc.cfg.snapshot_stride < 1)
      throw ConfigError("config: integrator requires h > 0, max_steps >= 1, stride >= 1");
  }
  if (j.contains("observables")) sc.observables = j["observables"].get<std::vector<std::string>>();
  if (j.contains("seed")) sc.seed = j["seed"].get<unsigned long long>();
  if (j.contains("threads")) rc.threads = j["threads"].get<int>();
  if (rc.threads < 1) throw ConfigError("config: threads must be >= 1");
  if (j.contains("out_dir")) rc.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("format")) {
    rc.format = j["format"].get<std::string>();
    if (rc.format != "csv") throw ConfigError("config: unsupported format '" + rc.format + "'");
  }
  if (j.contains("store_points")) rc.store_points = j["store_points"].get<bool>();
  sc.cfg.threads = rc.threads;
  sc.cfg.store_points = rc.store_points;
  return rc;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_run_config(j);
}

/// Fully materialized config echo: parsing this back reproduces the run.
inline Json config_echo(const RunConfig& rc) {
  const Scenario& sc = rc.scenario;
  Json j;
  j["version"] = "v1";
  j["scenario"] = sc.id;
  j["d"] = sc.d;
  j["N"] = sc.N;
  j["beta"] = sc.params.beta;
  j["Q"] = detail::dump_matrix(sc.params.Q);
  j["K"] = detail::dump_matrix(sc.params.K);
  j["V"] = detail::dump_matrix(sc.params.V);
  Json ji;
  ji["kind"] = detail::init_name(sc.init);
  if (sc.init != InitKind::Uniform) {
    std::vector<double> w, m;
    double var = 0.0;
    for (const auto& c : sc.mixture.components) {
      w.push_back(c.weight);
      m.push_back(std::atan2(c.center[1], c.center[0]));
      var = c.var;
    }
    ji["weights"] = w;
    ji["means"] = m;
    ji["var"] = var;
  }
  j["init"] = ji;
  Json jc;
  jc["scheme"] = detail::scheme_name(sc.cfg.scheme);
  jc["h"] = sc.cfg.h;
  jc["clock"] = detail::clock_name(sc.cfg.clock);
  jc["max_steps"] = sc.cfg.max_steps;
  jc["snapshot_stride"] = sc.cfg.snapshot_stride;
  jc["canonical_reduction"] = sc.cfg.canonical_reduction;
  j["integrator"] = jc;
  j["observables"] = sc.observables;
  j["seed"] = sc.seed;
  j["threads"] = rc.threads;
  j["out_dir"] = rc.out_dir;
  j["format"] = rc.format;
  j["store_points"] = rc.store_points;
  return j;
}

inline std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Atomic write: temp file in the target directory, then rename.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.parent_path().empty() ? fs::path(".") : target.parent_path();
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = dir / (target.filename().string() + ".tmp." +
                              std::to_string(static_cast<unsigned long>(::getpid())));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open temp file for writing: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("rename failed for " + path + ": " + ec.message());
  }
}

/// Trajectory CSV: header comments (schema, config echo, seed, content hash)
/// followed by rows step,time,rescaled_time,particle,c0..c{d-1} at 17
/// significant digits.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const RunConfig& rc) {
  std::ostringstream rows;
  char buf[64];
  for (const auto& snap : traj.snapshots) {
    const int d = static_cast<int>(snap.points.rows());
    for (int i = 0; i < snap.points.cols(); ++i) {
      rows << snap.step << ',';
      std::snprintf(buf, sizeof buf, "%.17g", snap.time);
      rows << buf << ',';
      std::snprintf(buf, sizeof buf, "%.17g", snap.rescaled_time);
      rows << buf << ',' << i;
      for (int c = 0; c < d; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", snap.points(c, i));
        rows << ',' << buf;
      }
      rows << '\n';
    }
  }
  const std::string body = rows.str();
  std::ostringstream out;
  out << "# schema: v1\n";
  out << "# config: " << config_echo(rc).dump() << '\n';
  out << "# seed: " << rc.scenario.seed << '\n';
  out << "# hash: " << std::hex << fnv1a_hash(body) << std::dec << '\n';
  out << "step,time,rescaled_time,particle";
  for (int c = 0; c < rc.scenario.d; ++c) out << ",c" << c;
  out << '\n' << body;
  atomic_write(path, out.str());
}

/// Metrics JSON: {observable -> [{t, value}]}, plus run metadata.
inline void write_metrics_json(const std::string& path, const Trajectory& traj,
                               const RunConfig& rc) {
  Json j;
  j["schema"] = "v1";
  j["config"] = config_echo(rc);
  j["seed"] = rc.scenario.seed;
  Json series = Json::object();
  for (const auto& [name, pts] : traj.series) {
    Json arr = Json::array();
    for (const auto& p : pts) arr.push_back(Json{{"t", p.t}, {"value", p.value}});
    series[name] = arr;
  }
  j["series"] = series;
  atomic_write(path, j.dump(2) + "\n");
}

struct TrajectoryData {
  Json config;
  std::vector<Snapshot> snapshots;
};

/// Reads back a trajectory CSV written by write_trajectory_csv.
inline TrajectoryData read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trajectory file: " + path);
  TrajectoryData out;
  std::string line;
  int d = -1;
  struct Row {
    int step, particle;
    double time, rescaled;
    std::vector<double> coords;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("# config: ");
      if (pos == 0) out.config = Json::parse(line.substr(10));
      continue;
    }
    if (line.rfind("step,", 0) == 0) {
      d = static_cast<int>(std::count(line.begin(), line.end(), ',')) - 3;
      continue;
    }
    if (d < 2) throw IoError("trajectory file has no valid header: " + path);
    Row r;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    r.step = std::stoi(tok);
    std::getline(ls, tok, ',');
    r.time = std::stod(tok);
    std::getline(ls, tok, ',');
    r.rescaled = std::stod(tok);
    std::getline(ls, tok, ',');
    r.particle = std::stoi(tok);
    r.coords.resize(d);
    for (int c = 0; c < d; ++c) {
      if (!std::getline(ls, tok, ',')) throw IoError("short row in trajectory file: " + path);
      r.coords[c] = std::stod(tok);
    }
    rows.push_back(std::move(r));
  }
  // group rows into snapshots by step (rows are written in order)
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j].step == rows[i].step) ++j;
    Snapshot s;
    s.step = rows[i].step;
    s.time = rows[i].time;
    s.rescaled_time = rows[i].rescaled;
    s.points = Mat(d, static_cast<int>(j - i));
    for (std::size_t k = i; k < j; ++k)
      for (int c = 0; c < d; ++c) s.points(c, rows[k].particle) = rows[k].coords[c];
    out.snapshots.push_back(std::move(s));
    i = j;
  }
  return out;
}

}  // namespace attnflow
