#ifndef HMCF_SNAPSHOT_IO_HPP
#define HMCF_SNAPSHOT_IO_HPP

#include <fstream>
#include <optional>

#include <json.hpp>

#include "hmcf/radial_graph.hpp"

namespace hmcf {

// Versioned surface snapshot. rho is stored in spherical-harmonic space
// (index l^2 + l + m) so checkpoints are portable across grid revisions.
struct FlowCheckpointInfo {
  double t = 0.0;
  double vol0 = 0.0;
  long step_count = 0;
  double dt = 0.0;
};

struct SurfaceSnapshot {
  int n_lat = 0;
  double sigma_label = 0.0;
  std::vector<double> rho_coeffs;
  std::vector<double> rho_nodes;  // optional: bit-exact resume on the same grid
  std::optional<FlowCheckpointInfo> flow;

  static constexpr int format_version = 1;
};

inline nlohmann::json snapshot_to_json(const SurfaceSnapshot& s) {
  nlohmann::json j;
  j["format"] = "hmcf-surface-snapshot";
  j["version"] = SurfaceSnapshot::format_version;
  j["grid"] = {{"n_lat", s.n_lat}};
  j["sigma_label"] = s.sigma_label;
  j["rho_coeffs"] = s.rho_coeffs;
  if (!s.rho_nodes.empty()) j["rho_nodes"] = s.rho_nodes;
  if (s.flow) {
    j["flow"] = {{"t", s.flow->t},
                 {"vol0", s.flow->vol0},
                 {"step_count", s.flow->step_count},
                 {"dt", s.flow->dt}};
  }
  return j;
}

inline SurfaceSnapshot snapshot_from_json(const nlohmann::json& j) {
  if (!j.contains("format") || j.at("format") != "hmcf-surface-snapshot")
    throw usage_error("snapshot: unrecognized container format");
  if (j.at("version").get<int>() != SurfaceSnapshot::format_version)
    throw usage_error("snapshot: unsupported format version");
  SurfaceSnapshot s;
  s.n_lat = j.at("grid").at("n_lat").get<int>();
  s.sigma_label = j.at("sigma_label").get<double>();
  s.rho_coeffs = j.at("rho_coeffs").get<std::vector<double>>();
  if (j.contains("rho_nodes")) s.rho_nodes = j.at("rho_nodes").get<std::vector<double>>();
  if (j.contains("flow")) {
    FlowCheckpointInfo f;
    f.t = j.at("flow").at("t").get<double>();
    f.vol0 = j.at("flow").at("vol0").get<double>();
    f.step_count = j.at("flow").at("step_count").get<long>();
    f.dt = j.at("flow").at("dt").get<double>();
    s.flow = f;
  }
  return s;
}

inline SurfaceSnapshot make_snapshot(const RadialGraph& gr) {
  SurfaceSnapshot s;
  s.n_lat = gr.grid().n_lat;
  s.sigma_label = gr.sigma_label;
  s.rho_coeffs = gr.coeffs();
  s.rho_nodes = gr.rho;
  return s;
}

inline RadialGraph graph_from_snapshot(const SurfaceSnapshot& s, ContextPtr ctx = nullptr) {
  if (!ctx) ctx = make_context(s.n_lat);
  if (ctx->grid.n_lat != s.n_lat) throw usage_error("snapshot: grid mismatch with supplied context");
  if (!s.rho_nodes.empty() && s.rho_nodes.size() == ctx->grid.size())
    return RadialGraph(ctx, s.rho_nodes, s.sigma_label);
  if (int(s.rho_coeffs.size()) != ctx->sht.n_modes()) throw usage_error("snapshot: coefficient count mismatch");
  return RadialGraph(ctx, ctx->sht.synthesize(s.rho_coeffs), s.sigma_label);
}

inline void write_snapshot_file(const std::string& path, const SurfaceSnapshot& s) {
  std::ofstream out(path);
  if (!out) throw usage_error("cannot open snapshot file for writing: " + path);
  out << snapshot_to_json(s).dump(2) << "\n";
}

inline SurfaceSnapshot read_snapshot_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open snapshot file: " + path);
  nlohmann::json j;
  in >> j;
  return snapshot_from_json(j);
}

}  // namespace hmcf

#endif
