#ifndef HMCF_CONFIG_HPP
#define HMCF_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hmcf/flow.hpp"

namespace hmcf {

struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class RunKind { flow, foliate, spectrum, center, check, plot_data };

inline RunKind run_kind_from_string(const std::string& s) {
  if (s == "flow") return RunKind::flow;
  if (s == "foliate") return RunKind::foliate;
  if (s == "spectrum") return RunKind::spectrum;
  if (s == "center") return RunKind::center;
  if (s == "check") return RunKind::check;
  if (s == "plot-data") return RunKind::plot_data;
  throw config_error("unknown experiment kind: " + s);
}

inline std::string to_string(RunKind k) {
  switch (k) {
    case RunKind::flow: return "flow";
    case RunKind::foliate: return "foliate";
    case RunKind::spectrum: return "spectrum";
    case RunKind::center: return "center";
    case RunKind::check: return "check";
    case RunKind::plot_data: return "plot-data";
  }
  return "?";
}

struct RunConfig {
  RunKind kind = RunKind::check;
  MetricParams metric;
  std::string metric_family = "flat";
  int n_lat = 24;
  FlowConfig flow;
  std::vector<double> sigmas = {20.0};
  std::vector<HarmonicMode> perturbation;
  std::vector<double> adm_radii = {50.0, 100.0, 200.0};
  int spectrum_count = 6;
  std::string output_dir = "hmcf_run";
  uint64_t seed = 1;

  nlohmann::json resolved;  // the fully resolved config embedded in outputs
};

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error("bad value for '" + key + "': " + e.what());
  }
}

inline vec3 get_vec3(const nlohmann::json& j, const std::string& key, const vec3& fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw config_error("'" + key + "' must have 3 components");
  return vec3(v[0], v[1], v[2]);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
  detail::require_keys(j,
                       {"kind", "metric", "grid", "flow", "sigma", "perturbation", "adm_radii",
                        "spectrum_count", "output_dir", "seed"},
                       "config root");
  RunConfig c;
  if (!j.contains("kind")) throw config_error("config must name an experiment 'kind'");
  c.kind = run_kind_from_string(j.at("kind").get<std::string>());

  if (j.contains("metric")) {
    const auto& m = j.at("metric");
    detail::require_keys(m, {"family", "mass", "dipole", "offset"}, "metric");
    c.metric_family = detail::get_or<std::string>(m, "family", "flat");
    const double mass = detail::get_or<double>(m, "mass", 0.0);
    if (c.metric_family == "flat") {
      c.metric = MetricParams::flat();
      if (mass != 0.0) throw config_error("flat metric cannot carry a mass");
    } else if (c.metric_family == "schwarzschild") {
      if (!(mass > 0.0)) throw config_error("schwarzschild metric requires mass > 0");
      c.metric = MetricParams::schwarzschild(mass);
    } else if (c.metric_family == "conformal-dipole") {
      if (!(mass > 0.0)) throw config_error("conformal-dipole metric requires mass > 0");
      c.metric = MetricParams::conformal_dipole(mass, detail::get_vec3(m, "dipole", vec3::Zero()));
    } else {
      throw config_error("unknown metric family: " + c.metric_family);
    }
    c.metric.offset = detail::get_vec3(m, "offset", vec3::Zero());
  }

  if (j.contains("grid")) {
    detail::require_keys(j.at("grid"), {"n_lat"}, "grid");
    c.n_lat = detail::get_or<int>(j.at("grid"), "n_lat", 24);
    if (c.n_lat < 4 || c.n_lat > 128) throw config_error("grid.n_lat out of the supported range");
  }

  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    detail::require_keys(f,
                         {"dt_policy", "dt", "cfl", "t_max", "stop_tol", "filter_strength",
                          "checkpoint_every", "imex", "imex_cap_factor", "vol_step_tol",
                          "grad_monitor_stride"},
                         "flow");
    const std::string pol = detail::get_or<std::string>(f, "dt_policy", "adaptive");
    if (pol == "fixed")
      c.flow.dt_policy = FlowConfig::DtPolicy::fixed;
    else if (pol == "adaptive")
      c.flow.dt_policy = FlowConfig::DtPolicy::adaptive;
    else
      throw config_error("flow.dt_policy must be 'fixed' or 'adaptive'");
    c.flow.dt_fixed = detail::get_or<double>(f, "dt", 0.0);
    if (c.flow.dt_policy == FlowConfig::DtPolicy::fixed && !(c.flow.dt_fixed > 0.0))
      throw config_error("fixed dt_policy requires flow.dt > 0");
    c.flow.cfl = detail::get_or<double>(f, "cfl", 0.25);
    if (!(c.flow.cfl > 0.0 && c.flow.cfl <= 1.0)) throw config_error("flow.cfl must lie in (0, 1]");
    c.flow.t_max = detail::get_or<double>(f, "t_max", 1e9);
    c.flow.stop_tol = detail::get_or<double>(f, "stop_tol", 1e-9);
    if (!(c.flow.stop_tol > 0.0)) throw config_error("flow.stop_tol must be positive");
    c.flow.filter_strength = detail::get_or<double>(f, "filter_strength", 36.0);
    c.flow.checkpoint_every = detail::get_or<long>(f, "checkpoint_every", 200);
    c.flow.imex = detail::get_or<bool>(f, "imex", true);
    c.flow.imex_cap_factor = detail::get_or<double>(f, "imex_cap_factor", 0.01);
    c.flow.vol_step_tol = detail::get_or<double>(f, "vol_step_tol", 1e-10);
    c.flow.grad_monitor_stride = detail::get_or<int>(f, "grad_monitor_stride", 5);
  }

  if (j.contains("sigma")) {
    if (j.at("sigma").is_array())
      c.sigmas = j.at("sigma").get<std::vector<double>>();
    else
      c.sigmas = {j.at("sigma").get<double>()};
  }
  for (double s : c.sigmas)
    if (!(s > 2.0)) throw config_error("sigma values must exceed the inner region");

  if (j.contains("perturbation")) {
    for (const auto& p : j.at("perturbation")) {
      detail::require_keys(p, {"l", "m", "amplitude"}, "perturbation entry");
      HarmonicMode mo;
      mo.l = p.at("l").get<int>();
      mo.m = detail::get_or<int>(p, "m", 0);
      mo.amplitude = p.at("amplitude").get<double>();
      if (mo.l < 0 || std::abs(mo.m) > mo.l) throw config_error("invalid harmonic mode in perturbation");
      c.perturbation.push_back(mo);
    }
  }

  if (j.contains("adm_radii")) c.adm_radii = j.at("adm_radii").get<std::vector<double>>();
  c.spectrum_count = detail::get_or<int>(j, "spectrum_count", 6);
  c.output_dir = detail::get_or<std::string>(j, "output_dir", "hmcf_run");
  c.seed = detail::get_or<uint64_t>(j, "seed", 1);

  // canonical resolved form, embedded in every output
  nlohmann::json r;
  r["kind"] = to_string(c.kind);
  r["metric"] = {{"family", c.metric_family},
                 {"mass", c.metric.mass},
                 {"dipole", {c.metric.dipole[0], c.metric.dipole[1], c.metric.dipole[2]}},
                 {"offset", {c.metric.offset[0], c.metric.offset[1], c.metric.offset[2]}}};
  r["grid"] = {{"n_lat", c.n_lat}};
  r["flow"] = {{"dt_policy", c.flow.dt_policy == FlowConfig::DtPolicy::fixed ? "fixed" : "adaptive"},
               {"dt", c.flow.dt_fixed},
               {"cfl", c.flow.cfl},
               {"t_max", c.flow.t_max},
               {"stop_tol", c.flow.stop_tol},
               {"filter_strength", c.flow.filter_strength},
               {"checkpoint_every", c.flow.checkpoint_every},
               {"imex", c.flow.imex},
               {"imex_cap_factor", c.flow.imex_cap_factor},
               {"vol_step_tol", c.flow.vol_step_tol},
               {"grad_monitor_stride", c.flow.grad_monitor_stride}};
  r["sigma"] = c.sigmas;
  {
    nlohmann::json parr = nlohmann::json::array();
    for (const auto& mo : c.perturbation)
      parr.push_back({{"l", mo.l}, {"m", mo.m}, {"amplitude", mo.amplitude}});
    r["perturbation"] = parr;
  }
  r["adm_radii"] = c.adm_radii;
  r["spectrum_count"] = c.spectrum_count;
  r["output_dir"] = c.output_dir;
  r["seed"] = c.seed;
  c.resolved = r;
  return c;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

inline uint64_t fnv1a_hash(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct RunManifest {
  std::string artifact_version = "1.0.0";
  uint64_t config_hash = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> files;
  nlohmann::json summary;
  nlohmann::json config;
};

inline nlohmann::json manifest_to_json(const RunManifest& m) {
  nlohmann::json j;
  j["artifact_version"] = m.artifact_version;
  j["config_hash"] = m.config_hash;
  j["wall_seconds"] = m.wall_seconds;
  j["files"] = m.files;
  j["summary"] = m.summary;
  j["config"] = m.config;
  return j;
}

// atomic write: temp file in the same directory, then rename
inline void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw usage_error("cannot open for writing: " + tmp);
    out << contents;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace hmcf

#endif
