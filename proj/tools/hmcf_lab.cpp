// Command-line driver for the harmonic mean curvature flow lab.
//
// Subcommands: flow, foliate, spectrum, center, check, plot-data, resume.
// Each takes a JSON config (--config); common flags override config keys.
// Exit codes: 0 success, 2 config error, 3 numeric failure, 4 non-convergence.

#include <CLI11.hpp>

#include <iostream>

#include "hmcf/pipelines.hpp"

using namespace hmcf;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_dir;
  std::vector<double> sigmas;
  int n_lat = 0;
  double mass = -1.0;
  double stop_tol = 0.0;
  double t_max = 0.0;
  long seed = -1;
  bool dump_extrinsic = false;
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config,-c", a.config_path, "JSON run configuration")->required();
  sub->add_option("--output-dir,-o", a.output_dir, "override output directory");
  sub->add_option("--sigma", a.sigmas, "override sigma value(s)");
  sub->add_option("--n-lat", a.n_lat, "override grid resolution");
  sub->add_option("--mass", a.mass, "override metric mass");
  sub->add_option("--stop-tol", a.stop_tol, "override flow stationarity threshold");
  sub->add_option("--t-max", a.t_max, "override flow time budget");
  sub->add_option("--seed", a.seed, "override RNG seed");
  sub->add_flag("--dump-extrinsic", a.dump_extrinsic,
                "write per-node curvature diagnostics for the final surface");
}

int execute(RunKind kind, const CommonArgs& a, const std::string& resume_checkpoint = "") {
  RunConfig cfg;
  try {
    cfg = load_config_file(a.config_path);
    // flags override config keys; re-parse the patched resolved form so the
    // embedded config and hash reflect what actually ran
    nlohmann::json r = cfg.resolved;
    r["kind"] = to_string(kind);
    if (!a.output_dir.empty()) r["output_dir"] = a.output_dir;
    if (!a.sigmas.empty()) r["sigma"] = a.sigmas;
    if (a.n_lat > 0) r["grid"]["n_lat"] = a.n_lat;
    if (a.mass >= 0.0) r["metric"]["mass"] = a.mass;
    if (a.stop_tol > 0.0) r["flow"]["stop_tol"] = a.stop_tol;
    if (a.t_max > 0.0) r["flow"]["t_max"] = a.t_max;
    if (a.seed >= 0) r["seed"] = a.seed;
    cfg = parse_config(r);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  std::string message;
  const int code = run_pipeline(cfg, &message, resume_checkpoint);
  if (code == 0) {
    std::cout << message << "\n";
    if (a.dump_extrinsic &&
        (kind == RunKind::flow || kind == RunKind::foliate || kind == RunKind::spectrum)) {
      try {
        const std::string dir = resolve_output_dir(cfg.output_dir);
        char sig[32];
        std::snprintf(sig, sizeof(sig), "%g", cfg.sigmas.front());
        const std::string leaf_file = kind == RunKind::flow
                                          ? dir + "/leaf.json"
                                          : dir + "/leaf_sigma_" + sig + ".json";
        const RadialGraph leaf = graph_from_snapshot(read_snapshot_file(leaf_file));
        const ExtrinsicField E = compute_extrinsic(leaf, cfg.metric, JetDepth::curvature);
        const FDerivatives D = compute_F_derivatives(E);
        write_extrinsic_csv(dir + "/extrinsic.csv", E, D);
        std::cout << "wrote extrinsic.csv\n";
      } catch (const std::exception& e) {
        std::cerr << "extrinsic dump failed: " << e.what() << "\n";
      }
    }
  } else {
    std::cerr << "error (exit " << code << "): " << message << "\n";
  }
  return code;
}

std::string find_latest_checkpoint(const std::string& run_dir) {
  namespace fs = std::filesystem;
  std::string best;
  long best_step = -1;
  if (!fs::is_directory(run_dir)) throw usage_error("resume: run directory not found: " + run_dir);
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    long step = -1;
    if (std::sscanf(name.c_str(), "checkpoint_%ld.json", &step) == 1 && step > best_step) {
      best_step = step;
      best = entry.path().string();
    }
  }
  if (best.empty()) throw usage_error("resume: no checkpoints in " + run_dir);
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"harmonic mean curvature flow laboratory"};
  app.require_subcommand(1);

  CommonArgs args_flow, args_fol, args_spec, args_cen, args_chk;
  add_common(app.add_subcommand("flow", "integrate one volume-preserving flow to its leaf"), args_flow);
  add_common(app.add_subcommand("foliate", "build leaves over a sigma range and check the foliation"),
             args_fol);
  add_common(app.add_subcommand("spectrum", "assemble the stability operator and report low spectra"),
             args_spec);
  add_common(app.add_subcommand("center", "compute and compare the geometric and ADM centers"), args_cen);
  add_common(app.add_subcommand("check", "run the identity and residual suite"), args_chk);

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot-data", "emit tidy CSVs from a completed run directory");
  plot->add_option("run_dir", plot_dir, "completed run directory")->required();

  std::string resume_dir, resume_file;
  auto* resume = app.add_subcommand("resume", "continue a flow run from its latest checkpoint");
  resume->add_option("run_dir", resume_dir, "flow run directory")->required();
  resume->add_option("--checkpoint", resume_file, "explicit checkpoint file");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand("flow")) return execute(RunKind::flow, args_flow);
  if (app.got_subcommand("foliate")) return execute(RunKind::foliate, args_fol);
  if (app.got_subcommand("spectrum")) return execute(RunKind::spectrum, args_spec);
  if (app.got_subcommand("center")) return execute(RunKind::center, args_cen);
  if (app.got_subcommand("check")) return execute(RunKind::check, args_chk);

  if (app.got_subcommand("plot-data")) {
    RunConfig cfg;
    cfg.kind = RunKind::plot_data;
    cfg.output_dir = plot_dir;
    cfg.resolved = {{"kind", "plot-data"}, {"output_dir", plot_dir}};
    std::string message;
    const int code = run_pipeline(cfg, &message);
    (code == 0 ? std::cout : std::cerr) << message << "\n";
    return code;
  }

  if (app.got_subcommand("resume")) {
    try {
      const std::string checkpoint = resume_file.empty() ? find_latest_checkpoint(resume_dir) : resume_file;
      RunConfig cfg = load_config_file(resume_dir + "/config.json");
      if (cfg.kind != RunKind::flow) throw usage_error("resume: only flow runs are resumable");
      std::string message;
      const int code = run_pipeline(cfg, &message, checkpoint);
      (code == 0 ? std::cout : std::cerr) << message << "\n";
      return code;
    } catch (const config_error& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  return 0;
}
