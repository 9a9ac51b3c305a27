#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "hmcf/pipelines.hpp"

using namespace hmcf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json base_config(const std::string& outdir) {
  nlohmann::json j;
  j["kind"] = "flow";
  j["metric"] = {{"family", "flat"}};
  j["grid"] = {{"n_lat", 12}};
  j["flow"] = {{"stop_tol", 1e-6}, {"checkpoint_every", 20}};
  j["sigma"] = {8.0};
  j["perturbation"] = {{{"l", 2}, {"m", 0}, {"amplitude", 0.05}}};
  j["output_dir"] = outdir;
  j["seed"] = 7;
  return j;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("config schema: unknown keys and invalid values are rejected") {
  auto good = base_config("x");
  CHECK_NOTHROW(parse_config(good));

  auto j = good;
  j["unknown_top"] = 1;
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["metric"]["colour"] = "blue";
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["metric"]["family"] = "kerr";
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["metric"]["mass"] = 1.0;  // flat metric cannot carry mass
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["flow"]["dt_policy"] = "fixed";  // fixed policy without dt
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["sigma"] = {1.0};  // inside the inner region
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["perturbation"] = {{{"l", 2}, {"m", 5}, {"amplitude", 0.1}}};
  CHECK_THROWS_AS(parse_config(j), config_error);

  j = good;
  j["kind"] = "warp";
  CHECK_THROWS_AS(parse_config(j), config_error);
}

TEST_CASE("flow pipeline: artifacts, increasing time column, manifest hash") {
  TempDir tmp("hmcf_cli_flow");
  RunConfig cfg = parse_config(base_config(tmp.str() + "/run"));
  std::string msg;
  const int code = run_pipeline(cfg, &msg);
  REQUIRE(code == 0);

  const std::string dir = tmp.str() + "/run";
  for (const char* f : {"monitors.csv", "leaf.json", "result.json", "manifest.json", "config.json"})
    CHECK(std::filesystem::exists(dir + "/" + f));

  // strictly increasing t column
  std::ifstream mon(dir + "/monitors.csv");
  std::string line;
  std::getline(mon, line);
  double prev_t = -1.0;
  int rows = 0;
  while (std::getline(mon, line)) {
    const double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t > prev_t);
    prev_t = t;
    ++rows;
  }
  CHECK(rows > 10);

  // manifest carries the config hash of the embedded config
  nlohmann::json manifest;
  std::ifstream(dir + "/manifest.json") >> manifest;
  CHECK(manifest.at("config_hash").get<uint64_t>() == fnv1a_hash(manifest.at("config").dump()));
  CHECK(manifest.at("summary").at("converged").get<bool>());

  // plot-data on the completed run
  RunConfig plot;
  plot.kind = RunKind::plot_data;
  plot.output_dir = dir;
  plot.resolved = {{"kind", "plot-data"}};
  CHECK(run_pipeline(plot, &msg) == 0);
  CHECK(std::filesystem::exists(dir + "/decay.csv"));
}

TEST_CASE("determinism: identical config and seed give byte-identical outputs") {
  TempDir tmp("hmcf_cli_det");
  RunConfig a = parse_config(base_config(tmp.str() + "/a"));
  RunConfig b = parse_config(base_config(tmp.str() + "/b"));
  std::string msg;
  REQUIRE(run_pipeline(a, &msg) == 0);
  REQUIRE(run_pipeline(b, &msg) == 0);
  CHECK(slurp(tmp.str() + "/a/monitors.csv") == slurp(tmp.str() + "/b/monitors.csv"));
  CHECK(slurp(tmp.str() + "/a/leaf.json") == slurp(tmp.str() + "/b/leaf.json"));
}

TEST_CASE("resume from a checkpoint reproduces the uninterrupted run") {
  TempDir tmp("hmcf_cli_resume");
  RunConfig full = parse_config(base_config(tmp.str() + "/full"));
  std::string msg;
  REQUIRE(run_pipeline(full, &msg) == 0);

  // pretend the run died right after the first checkpoint
  std::string first_checkpoint;
  for (const auto& e : std::filesystem::directory_iterator(tmp.str() + "/full")) {
    const std::string name = e.path().filename().string();
    if (name.rfind("checkpoint_", 0) == 0 && (first_checkpoint.empty() || name < first_checkpoint))
      first_checkpoint = name;
  }
  REQUIRE(!first_checkpoint.empty());

  RunConfig resumed = parse_config(base_config(tmp.str() + "/resumed"));
  REQUIRE(run_pipeline(resumed, &msg, tmp.str() + "/full/" + first_checkpoint) == 0);

  // identical final leaf, bit for bit
  CHECK(slurp(tmp.str() + "/full/leaf.json") == slurp(tmp.str() + "/resumed/leaf.json"));
}

TEST_CASE("exit codes: non-convergence is 4, missing plot inputs are 2") {
  TempDir tmp("hmcf_cli_codes");
  auto j = base_config(tmp.str() + "/short");
  j["flow"]["t_max"] = 0.5;  // not enough time to converge
  j["flow"]["stop_tol"] = 1e-12;
  RunConfig cfg = parse_config(j);
  std::string msg;
  CHECK(run_pipeline(cfg, &msg) == 4);
  nlohmann::json result;
  std::ifstream(tmp.str() + "/short/result.json") >> result;
  CHECK(!result.at("converged").get<bool>());

  RunConfig plot;
  plot.kind = RunKind::plot_data;
  plot.output_dir = tmp.str() + "/empty";
  plot.resolved = {{"kind", "plot-data"}};
  CHECK(run_pipeline(plot, &msg) == 2);
}

TEST_CASE("foliate, spectrum and center pipelines emit their reports") {
  TempDir tmp("hmcf_cli_pipes");
  // schwarzschild coordinate spheres are exact leaves: all runs converge instantly
  nlohmann::json j;
  j["kind"] = "foliate";
  j["metric"] = {{"family", "schwarzschild"}, {"mass", 1.0}};
  j["grid"] = {{"n_lat", 12}};
  j["sigma"] = {10.0, 12.0, 14.0, 16.0};
  j["output_dir"] = tmp.str() + "/fol";
  std::string msg;
  REQUIRE(run_pipeline(parse_config(j), &msg) == 0);
  nlohmann::json fol;
  std::ifstream(tmp.str() + "/fol/foliation.json") >> fol;
  CHECK(fol.at("min_lapse").get<double>() > 0.0);
  CHECK(fol.at("min_nesting").get<double>() > 0.0);

  RunConfig plot;
  plot.kind = RunKind::plot_data;
  plot.output_dir = tmp.str() + "/fol";
  plot.resolved = {{"kind", "plot-data"}};
  REQUIRE(run_pipeline(plot, &msg) == 0);
  CHECK(std::filesystem::exists(tmp.str() + "/fol/scaling.csv"));

  j["kind"] = "spectrum";
  j["sigma"] = {10.0};
  j["output_dir"] = tmp.str() + "/spec";
  REQUIRE(run_pipeline(parse_config(j), &msg) == 0);
  nlohmann::json spec;
  std::ifstream(tmp.str() + "/spec/spectrum.json") >> spec;
  const auto& row = spec.at("spectra").at(0);
  // eta0 = -1/(2 sigma^2) + 5m/(2 sigma^3) - (23/4) m^2 sigma^-4 + O(sigma^-5)
  const double eta0 = row.at("eta0").get<double>();
  const double asym3 = -1.0 / 200.0 + 5.0 / 2000.0 - 23.0 / 40000.0;
  CHECK(std::abs(eta0 - asym3) < 2e-4);  // O(sigma^-5) window at sigma = 10
  CHECK(row.at("mu0").get<double>() > 0.0);

  j["kind"] = "center";
  j["sigma"] = {10.0, 12.0, 14.0, 16.0};
  j["adm_radii"] = {50.0, 100.0, 200.0};
  j["output_dir"] = tmp.str() + "/cen";
  REQUIRE(run_pipeline(parse_config(j), &msg) == 0);
  nlohmann::json cen;
  std::ifstream(tmp.str() + "/cen/center_report.json") >> cen;
  // centered schwarzschild: both centers vanish
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(cen.at("c_adm").at("value").at(c).get<double>()) < 1e-9);
    CHECK(std::abs(cen.at("c_hm").at("value").at(c).get<double>()) < 1e-9);
  }
  CHECK(cen.at("difference").get<double>() < 1e-9);
}

TEST_CASE("check pipeline passes on a schwarzschild background") {
  TempDir tmp("hmcf_cli_check");
  nlohmann::json j;
  j["kind"] = "check";
  j["metric"] = {{"family", "schwarzschild"}, {"mass", 1.0}};
  j["grid"] = {{"n_lat", 16}};
  j["sigma"] = {12.0};
  j["output_dir"] = tmp.str() + "/chk";
  RunConfig cfg = parse_config(j);
  std::string msg;
  CHECK(run_pipeline(cfg, &msg) == 0);
  nlohmann::json rep;
  std::ifstream(tmp.str() + "/chk/checks.json") >> rep;
  CHECK(rep.at("pass").get<bool>());
  CHECK(rep.at("simons").get<double>() < 1e-6);
}
