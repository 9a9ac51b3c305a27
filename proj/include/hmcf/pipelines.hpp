#ifndef HMCF_PIPELINES_HPP
#define HMCF_PIPELINES_HPP

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "hmcf/centers.hpp"
#include "hmcf/config.hpp"
#include "hmcf/identities.hpp"
#include "hmcf/stability.hpp"

namespace hmcf {

inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string resolve_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("HMCF_LAB_OUTPUT_ROOT")) p = std::filesystem::path(root) / p;
  }
  std::filesystem::create_directories(p);
  return p.string();
}

inline void write_json_atomic(const std::string& path, const nlohmann::json& j) {
  atomic_write(path, j.dump(2) + "\n");
}

inline void write_monitors_csv(const std::string& path, const std::vector<MonitorSample>& mon) {
  std::string out = "t,deficit2,max_aring,max_grad_aring,max_fdef,area,volume,f_mean,dt,step\n";
  for (const auto& m : mon) {
    out += fmt17(m.t) + "," + fmt17(m.deficit2) + "," + fmt17(m.max_aring) + "," +
           fmt17(m.max_grad_aring) + "," + fmt17(m.max_fdef) + "," + fmt17(m.area) + "," +
           fmt17(m.volume) + "," + fmt17(m.f_mean) + "," + fmt17(m.dt) + "," +
           std::to_string(m.step) + "\n";
  }
  atomic_write(path, out);
}

// per-node curvature diagnostics behind the --dump-extrinsic flag
inline void write_extrinsic_csv(const std::string& path, const ExtrinsicField& E,
                                const FDerivatives& D) {
  std::string out = "node,lambda1,lambda2,H,F,aring,grad_aring\n";
  for (size_t k = 0; k < E.size(); ++k) {
    out += std::to_string(k) + "," + fmt17(E.lambda[k][0]) + "," + fmt17(E.lambda[k][1]) + "," +
           fmt17(E.H[k]) + "," + fmt17(E.F[k]) + "," + fmt17(std::sqrt(E.Aring_norm2[k])) + "," +
           fmt17(D.grad_Aring_norm[k]) + "\n";
  }
  atomic_write(path, out);
}

namespace detail {

inline RadialGraph initial_surface(const RunConfig& cfg, ContextPtr ctx, double sigma) {
  return cfg.perturbation.empty() ? RadialGraph::coordinate_sphere(ctx, sigma)
                                  : perturbed_sphere(ctx, sigma, cfg.perturbation);
}

inline nlohmann::json vec3_json(const vec3& v) { return {v[0], v[1], v[2]}; }

struct ManifestWriter {
  std::string dir;
  RunManifest manifest;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  ManifestWriter(const std::string& d, const RunConfig& cfg) : dir(d) {
    manifest.config = cfg.resolved;
    manifest.config_hash = fnv1a_hash(cfg.resolved.dump());
    write_json_atomic(dir + "/config.json", cfg.resolved);
    manifest.files.push_back("config.json");
  }
  void add(const std::string& name) { manifest.files.push_back(name); }
  void finish(const nlohmann::json& summary) {
    manifest.summary = summary;
    manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest.files.push_back("manifest.json");
    write_json_atomic(dir + "/manifest.json", manifest_to_json(manifest));
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// identity / residual suite (the "check" experiment)
// ---------------------------------------------------------------------------

struct IdentitySuiteReport {
  double riemann_symmetry = 0.0;
  double riemann_reconstruction = 0.0;
  double bianchi = 0.0;
  double f_contraction = 0.0;   // max |F^{kl}h_kl - F|
  double f_square = 0.0;        // max |F^{kl}(h^2)_kl - 2F^2|
  double gauss = 0.0, codazzi = 0.0, simons = 0.0;
  double gauss_coarse = 0.0, codazzi_coarse = 0.0, simons_coarse = 0.0;
  bool kato_ok = false;
  EvolutionResiduals evo_coarse, evo_fine;
  bool pass = false;
  nlohmann::json to_json() const {
    nlohmann::json j;
    j["riemann_symmetry"] = riemann_symmetry;
    j["riemann_reconstruction"] = riemann_reconstruction;
    j["bianchi"] = bianchi;
    j["f_contraction"] = f_contraction;
    j["f_square"] = f_square;
    j["gauss"] = gauss;
    j["codazzi"] = codazzi;
    j["simons"] = simons;
    j["gauss_coarse"] = gauss_coarse;
    j["codazzi_coarse"] = codazzi_coarse;
    j["simons_coarse"] = simons_coarse;
    j["kato_ok"] = kato_ok;
    j["evolution_H_rel"] = {evo_coarse.H_rel, evo_fine.H_rel};
    j["evolution_F_rel"] = {evo_coarse.F_rel, evo_fine.F_rel};
    j["evolution_g_rel"] = {evo_coarse.g_rel, evo_fine.g_rel};
    j["evolution_dmu_rel"] = {evo_coarse.dmu_rel, evo_fine.dmu_rel};
    j["pass"] = pass;
    return j;
  }
};

inline IdentitySuiteReport run_identity_suite(const MetricParams& params, double sigma,
                                              const std::vector<HarmonicMode>& modes, int n_lat) {
  IdentitySuiteReport rep;

  // ambient checks at probe points on and around the surface radius
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 6; ++t) {
    vec3 dir(nd(rng), nd(rng), nd(rng));
    dir.normalize();
    const MetricJet J = eval_jet(params, (sigma * (0.8 + 0.1 * t)) * dir);
    rep.riemann_symmetry = std::max(rep.riemann_symmetry, riemann_symmetry_residual(J));
    rep.riemann_reconstruction = std::max(rep.riemann_reconstruction, riemann_reconstruction_residual(J));
    if (J.dricci_analytic) rep.bianchi = std::max(rep.bianchi, bianchi_residual(J));
  }

  auto surface_residuals = [&](int nl, double& ga, double& co, double& si) {
    auto ctx = make_context(nl);
    const RadialGraph gr = modes.empty() ? RadialGraph::coordinate_sphere(ctx, sigma)
                                         : perturbed_sphere(ctx, sigma, modes);
    const ExtrinsicField E = compute_extrinsic(gr, params, JetDepth::curvature_derivative);
    const FDerivatives D = compute_F_derivatives(E);
    ga = gauss_residual(E);
    co = codazzi_residual(E, D);
    si = simons_residual(E, D);
    for (size_t k = 0; k < E.size(); ++k) {
      double c1 = 0.0, c2 = 0.0;
      const mat2 hsq = E.h[k] * E.ginv[k] * E.h[k];
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          c1 += D.F_up[k](a, b) * E.h[k](a, b);
          c2 += D.F_up[k](a, b) * hsq(a, b);
        }
      rep.f_contraction = std::max(rep.f_contraction, std::abs(c1 - E.F[k]));
      rep.f_square = std::max(rep.f_square, std::abs(c2 - 2.0 * sqr(E.F[k])));
    }
    if (nl == n_lat) {
      bool ok = true;
      for (const auto& kr : kato_inequality_check(E, D)) ok = ok && kr.ok;
      rep.kato_ok = ok;
    }
  };
  const int n_coarse = std::max(8, (2 * n_lat) / 3);
  surface_residuals(n_coarse, rep.gauss_coarse, rep.codazzi_coarse, rep.simons_coarse);
  surface_residuals(n_lat, rep.gauss, rep.codazzi, rep.simons);

  {
    auto ctx = make_context(n_lat);
    const RadialGraph gr = modes.empty() ? RadialGraph::coordinate_sphere(ctx, sigma)
                                         : perturbed_sphere(ctx, sigma, modes);
    const double dtp = 0.005 * sigma * sigma;
    rep.evo_coarse = evolution_residuals(gr, params, dtp);
    rep.evo_fine = evolution_residuals(gr, params, 0.5 * dtp);
  }

  // halving must improve the residual unless it already sits on the spatial
  // discretization floor
  auto refines = [](double coarse, double fine) { return fine <= 0.75 * coarse || coarse <= 5e-5; };
  const double refine_ok = 5e-13;  // roundoff floor for the refinement ratio
  rep.pass = rep.riemann_symmetry < 1e-12 && rep.riemann_reconstruction < 1e-8 &&
             rep.bianchi < 1e-8 && rep.f_contraction < 1e-10 && rep.f_square < 1e-10 &&
             rep.gauss < 1e-6 && rep.codazzi < 1e-6 && rep.simons < 1e-6 &&
             rep.gauss < std::max(rep.gauss_coarse, refine_ok) &&
             rep.codazzi < std::max(rep.codazzi_coarse, refine_ok) &&
             rep.simons < std::max(rep.simons_coarse, refine_ok) && rep.kato_ok &&
             rep.evo_coarse.H_rel < 5e-3 && refines(rep.evo_coarse.H_rel, rep.evo_fine.H_rel) &&
             rep.evo_coarse.g_rel < 5e-3 && rep.evo_coarse.dmu_rel < 5e-3 &&
             rep.evo_coarse.F_rel < 5e-3 && refines(rep.evo_coarse.F_rel, rep.evo_fine.F_rel);
  return rep;
}

// ---------------------------------------------------------------------------
// experiment pipelines
// ---------------------------------------------------------------------------

struct PipelineResult {
  int exit_code = 0;
  std::string message;
  nlohmann::json summary;
};

inline PipelineResult run_flow_pipeline(const RunConfig& cfg, const std::string& dir,
                                        const std::string& resume_checkpoint = "") {
  detail::ManifestWriter mw(dir, cfg);
  auto ctx = make_context(cfg.n_lat);
  const double sigma = cfg.sigmas.front();

  FlowState st;
  if (resume_checkpoint.empty()) {
    st = init_flow_state(detail::initial_surface(cfg, ctx, sigma), cfg.metric);
  } else {
    const SurfaceSnapshot snap = read_snapshot_file(resume_checkpoint);
    if (!snap.flow) throw usage_error("resume: snapshot carries no flow state");
    st.graph = graph_from_snapshot(snap, ctx);
    st.t = snap.flow->t;
    st.vol0 = snap.flow->vol0;
    st.step_count = snap.flow->step_count;
    st.dt = snap.flow->dt;
  }

  auto checkpoint_writer = [&](const FlowState& s) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_%08ld.json", s.step_count);
    SurfaceSnapshot snap = make_snapshot(s.graph);
    snap.flow = FlowCheckpointInfo{s.t, s.vol0, s.step_count, s.dt};
    write_snapshot_file(dir + "/" + name, snap);
    mw.add(name);
    // stream the monitor series alongside the checkpoint (atomic rewrite)
    write_monitors_csv(dir + "/monitors.csv", s.monitors);
  };

  const LeafResult lr = run_to_leaf(std::move(st), cfg.flow, cfg.metric, checkpoint_writer);

  write_monitors_csv(dir + "/monitors.csv", lr.monitors);
  mw.add("monitors.csv");
  write_snapshot_file(dir + "/leaf.json", make_snapshot(lr.leaf));
  mw.add("leaf.json");

  double vol_drift = 0.0;
  const double v0 = lr.monitors.front().volume;
  for (const auto& m : lr.monitors) vol_drift = std::max(vol_drift, std::abs(m.volume - v0) / v0);

  nlohmann::json result;
  result["converged"] = lr.converged;
  result["f_sigma"] = lr.f_sigma;
  result["rate_fit"] = lr.rate_fit;
  result["rate_fit_r2"] = lr.rate_fit_r2;
  result["steps"] = lr.monitors.back().step;
  result["t_end"] = lr.monitors.back().t;
  result["vol_drift"] = vol_drift;
  result["max_aring_end"] = lr.monitors.back().max_aring;
  result["message"] = lr.message;
  write_json_atomic(dir + "/result.json", result);
  mw.add("result.json");
  mw.finish(result);

  PipelineResult out;
  out.summary = result;
  out.exit_code = lr.converged ? 0 : 4;
  out.message = lr.message;
  return out;
}

inline PipelineResult run_foliate_pipeline(const RunConfig& cfg, const std::string& dir) {
  detail::ManifestWriter mw(dir, cfg);
  auto ctx = make_context(cfg.n_lat);

  // leaves always start from coordinate spheres; a perturbation block in the
  // config is simply unused here
  std::vector<LeafResult> results;
  std::vector<FoliationLeaf> leaves = build_foliation(cfg.metric, cfg.sigmas, cfg.flow, ctx, &results);
  bool all_converged = true;
  for (size_t i = 0; i < leaves.size(); ++i) {
    all_converged = all_converged && leaves[i].converged;
    char name[64];
    std::snprintf(name, sizeof(name), "monitors_sigma_%g.csv", leaves[i].sigma);
    write_monitors_csv(dir + "/" + name, results[i].monitors);
    mw.add(name);
    std::snprintf(name, sizeof(name), "leaf_sigma_%g.json", leaves[i].sigma);
    write_snapshot_file(dir + "/" + name, make_snapshot(leaves[i].graph));
    mw.add(name);
  }

  nlohmann::json rows = nlohmann::json::array();
  double min_lapse_all = std::numeric_limits<double>::infinity();
  double min_nesting_all = min_lapse_all;
  for (size_t i = 0; i < leaves.size(); ++i) {
    nlohmann::json row;
    row["sigma"] = leaves[i].sigma;
    row["converged"] = leaves[i].converged;
    row["f_sigma"] = leaves[i].f_sigma;
    row["r0"] = leaves[i].fit.r0;
    row["a_vec"] = detail::vec3_json(leaves[i].fit.center);
    row["fit_rms"] = leaves[i].fit.rms_residual;
    row["normal_alignment"] = leaves[i].fit.normal_alignment;
    row["centroid"] = detail::vec3_json(euclidean_centroid(leaves[i].graph));
    row["max_aring"] = leaves[i].max_aring;
    row["max_grad_aring"] = leaves[i].max_grad_aring;
    row["traj_max_aring"] = leaves[i].traj_max_aring;
    row["traj_max_grad_aring"] = leaves[i].traj_max_grad_aring;
    row["rate_fit"] = leaves[i].rate_fit;
    row["rate_fit_r2"] = leaves[i].rate_fit_r2;
    row["vol_drift"] = leaves[i].vol_drift;
    if (i + 1 < leaves.size()) {
      const LapseReport rep = lapse(leaves[i], leaves[i + 1], cfg.metric);
      row["min_lapse"] = rep.min_u;
      row["lapse_structure_ratio"] = rep.structure_ratio;
      row["min_nesting"] = rep.min_nesting;
      min_lapse_all = std::min(min_lapse_all, rep.min_u);
      min_nesting_all = std::min(min_nesting_all, rep.min_nesting);
    }
    rows.push_back(row);
  }
  nlohmann::json rep;
  rep["leaves"] = rows;
  rep["min_lapse"] = min_lapse_all;
  rep["min_nesting"] = min_nesting_all;
  write_json_atomic(dir + "/foliation.json", rep);
  mw.add("foliation.json");
  mw.finish(rep);

  PipelineResult out;
  out.summary = rep;
  out.exit_code = all_converged ? 0 : 4;
  out.message = all_converged ? "foliation complete" : "some leaves did not converge";
  return out;
}

inline PipelineResult run_spectrum_pipeline(const RunConfig& cfg, const std::string& dir) {
  detail::ManifestWriter mw(dir, cfg);
  auto ctx = make_context(cfg.n_lat);
  nlohmann::json rows = nlohmann::json::array();
  bool all_converged = true;
  for (double sigma : cfg.sigmas) {
    const RadialGraph init = detail::initial_surface(cfg, ctx, sigma);
    const LeafResult lr = run_to_leaf(init, cfg.flow, cfg.metric);
    all_converged = all_converged && lr.converged;
    const OperatorAssembly A = assemble(lr.leaf, cfg.metric, cfg.flow.filter_strength);
    const SpectrumResult un = low_spectrum(A, false, std::max(1, cfg.spectrum_count));
    const SpectrumResult con = low_spectrum(A, true, std::max(1, cfg.spectrum_count));
    const EigenfunctionStructure es = eigenfunction_structure_check(A, un.eigenvectors[0]);
    nlohmann::json row;
    row["sigma"] = sigma;
    row["m"] = cfg.metric.mass;
    row["converged"] = lr.converged;
    row["eta0"] = un.eigenvalues[0];
    row["mu0"] = con.eigenvalues[0];
    row["next_eigs"] = std::vector<double>(con.eigenvalues.begin() + 1, con.eigenvalues.end());
    row["h0_structure_ratio"] = es.ratio;
    row["h0_mean_nonzero"] = es.mean_nonzero;
    rows.push_back(row);
  }
  nlohmann::json rep;
  rep["spectra"] = rows;
  write_json_atomic(dir + "/spectrum.json", rep);
  mw.add("spectrum.json");
  mw.finish(rep);
  PipelineResult out;
  out.summary = rep;
  out.exit_code = all_converged ? 0 : 4;
  out.message = "spectrum report written";
  return out;
}

inline PipelineResult run_center_pipeline(const RunConfig& cfg, const std::string& dir) {
  detail::ManifestWriter mw(dir, cfg);
  auto ctx = make_context(cfg.n_lat);
  std::vector<FoliationLeaf> leaves;
  bool all_converged = true;
  for (double sigma : cfg.sigmas) {
    const RadialGraph init = detail::initial_surface(cfg, ctx, sigma);
    const LeafResult lr = run_to_leaf(init, cfg.flow, cfg.metric);
    all_converged = all_converged && lr.converged;
    leaves.push_back(leaf_from_result(sigma, lr));
  }
  const CenterReport rep = compare_centers(leaves, cfg.metric, cfg.adm_radii, ctx);

  nlohmann::json j;
  j["c_hm"] = {{"value", detail::vec3_json(rep.hm.value)}, {"fit_residual", rep.hm.fit_residual}};
  {
    nlohmann::json series = nlohmann::json::array();
    for (size_t i = 0; i < rep.hm.sigmas.size(); ++i)
      series.push_back({{"sigma", rep.hm.sigmas[i]}, {"centroid", detail::vec3_json(rep.hm.samples[i])}});
    j["c_hm"]["per_leaf"] = series;
  }
  j["c_adm"] = {{"value", detail::vec3_json(rep.adm.value)}, {"fit_residual", rep.adm.fit_residual}};
  {
    nlohmann::json series = nlohmann::json::array();
    for (size_t i = 0; i < rep.adm.sigmas.size(); ++i)
      series.push_back({{"radius", rep.adm.sigmas[i]}, {"flux", detail::vec3_json(rep.adm.samples[i])}});
    j["c_adm"]["per_radius"] = series;
  }
  j["difference"] = rep.difference;
  write_json_atomic(dir + "/center_report.json", j);
  mw.add("center_report.json");
  mw.finish(j);
  PipelineResult out;
  out.summary = j;
  out.exit_code = all_converged ? 0 : 4;
  out.message = "center report written";
  return out;
}

inline PipelineResult run_check_pipeline(const RunConfig& cfg, const std::string& dir) {
  detail::ManifestWriter mw(dir, cfg);
  const std::vector<HarmonicMode> modes =
      cfg.perturbation.empty() ? std::vector<HarmonicMode>{{2, 0, 0.03}, {3, 1, 0.015}}
                               : cfg.perturbation;
  const IdentitySuiteReport rep =
      run_identity_suite(cfg.metric, cfg.sigmas.front(), modes, cfg.n_lat);
  write_json_atomic(dir + "/checks.json", rep.to_json());
  mw.add("checks.json");
  mw.finish(rep.to_json());
  PipelineResult out;
  out.summary = rep.to_json();
  out.exit_code = rep.pass ? 0 : 3;
  out.message = rep.pass ? "identity suite passed" : "identity suite failed";
  return out;
}

inline PipelineResult run_plot_data_pipeline(const RunConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  PipelineResult out;
  bool produced = false;

  if (fs::exists(dir + "/monitors.csv")) {
    std::ifstream in(dir + "/monitors.csv");
    std::string line, outcsv = "t,log_F_deficit\n";
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const auto c1 = line.find(',');
      const auto c2 = line.find(',', c1 + 1);
      const double t = std::stod(line.substr(0, c1));
      const double d2 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      if (d2 > 0.0) outcsv += fmt17(t) + "," + fmt17(std::log(d2)) + "\n";
    }
    atomic_write(dir + "/decay.csv", outcsv);
    produced = true;
  }

  if (fs::exists(dir + "/foliation.json")) {
    std::ifstream in(dir + "/foliation.json");
    nlohmann::json j;
    in >> j;
    std::string outcsv = "sigma,quantity,value\n";
    for (const auto& row : j.at("leaves")) {
      const double sigma = row.at("sigma").get<double>();
      for (const char* q :
           {"max_aring", "max_grad_aring", "traj_max_aring", "traj_max_grad_aring", "f_sigma", "r0"})
        if (row.contains(q)) outcsv += fmt17(sigma) + "," + q + "," + fmt17(row.at(q).get<double>()) + "\n";
    }
    atomic_write(dir + "/scaling.csv", outcsv);
    produced = true;
  }

  if (fs::exists(dir + "/spectrum.json")) {
    std::ifstream in(dir + "/spectrum.json");
    nlohmann::json j;
    in >> j;
    std::string outcsv = "sigma,eta0,mu0,h0_structure_ratio\n";
    for (const auto& row : j.at("spectra"))
      outcsv += fmt17(row.at("sigma").get<double>()) + "," + fmt17(row.at("eta0").get<double>()) +
                "," + fmt17(row.at("mu0").get<double>()) + "," +
                fmt17(row.at("h0_structure_ratio").get<double>()) + "\n";
    atomic_write(dir + "/spectrum_vs_sigma.csv", outcsv);
    produced = true;
  }

  if (!produced) throw usage_error("plot-data: no monitors.csv, foliation.json or spectrum.json in " + dir);
  out.message = "plot data written";
  return out;
}

// dispatch with the documented exit codes: 0 success, 2 config error,
// 3 numeric failure, 4 non-convergence
inline int run_pipeline(const RunConfig& cfg, std::string* message = nullptr,
                        const std::string& resume_checkpoint = "") {
  try {
    const std::string dir = resolve_output_dir(cfg.output_dir);
    PipelineResult res;
    switch (cfg.kind) {
      case RunKind::flow: res = run_flow_pipeline(cfg, dir, resume_checkpoint); break;
      case RunKind::foliate: res = run_foliate_pipeline(cfg, dir); break;
      case RunKind::spectrum: res = run_spectrum_pipeline(cfg, dir); break;
      case RunKind::center: res = run_center_pipeline(cfg, dir); break;
      case RunKind::check: res = run_check_pipeline(cfg, dir); break;
      case RunKind::plot_data: res = run_plot_data_pipeline(cfg, dir); break;
    }
    if (message) *message = res.message;
    return res.exit_code;
  } catch (const config_error& e) {
    if (message) *message = e.what();
    return 2;
  } catch (const usage_error& e) {
    // malformed inputs and missing files are configuration-level problems
    if (message) *message = e.what();
    return 2;
  } catch (const std::exception& e) {
    if (message) *message = e.what();
    return 3;
  }
}

}  // namespace hmcf

#endif
