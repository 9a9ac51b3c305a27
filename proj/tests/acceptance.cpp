// Acceptance suite: integration checks for the full laboratory, run at the
// documented tolerances. Prints one PASS/FAIL line per criterion; details are
// kept in the assertions. These runs take tens of minutes in total.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "hmcf/pipelines.hpp"

using namespace hmcf;

namespace {

struct CriterionLine {
  const char* name;
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    pass = false;
    detail += (detail.empty() ? "" : "; ") + why;
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
  ~CriterionLine() {
    std::printf("[acceptance] %-28s %s%s%s\n", name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
  }
};

std::string num(double v) {
  char b[32];
  std::snprintf(b, sizeof(b), "%.4g", v);
  return b;
}

double schw_H(double m, double r) {
  return (2.0 / r) * (1.0 - 0.5 * m / r) * std::pow(1.0 + 0.5 * m / r, -3.0);
}

double max_drift(const std::vector<MonitorSample>& mon) {
  const double v0 = mon.front().volume;
  double d = 0.0;
  for (const auto& m : mon) d = std::max(d, std::abs(m.volume - v0) / v0);
  return d;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("criterion 1: umbilic stationarity") {
  CriterionLine line{"1 umbilic stationarity"};
  auto ctx = make_context(24);
  const double m = 2.0, sigma = 10.0;
  const MetricParams mp = MetricParams::schwarzschild(m);
  const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, sigma);
  const ExtrinsicField E = compute_extrinsic(gr, mp, JetDepth::connection);

  const double Fref = 0.25 * schw_H(m, sigma);  // = 0.0338092 to the printed digits
  double worst_aring = 0.0, worst_F = 0.0;
  for (size_t k = 0; k < E.size(); ++k) {
    worst_aring = std::max(worst_aring, std::sqrt(E.Aring_norm2[k]) / E.H[k]);
    worst_F = std::max(worst_F, std::abs(E.F[k] - Fref) / Fref);
  }
  const FieldJet rj = field_jet(gr.sht(), gr.coeffs());
  const VelocityField V = velocity(gr, E, rj);
  double worst_vel = 0.0;
  for (double v : V.radial_speed) worst_vel = std::max(worst_vel, std::abs(v) / V.f);

  if (!(worst_aring <= 1e-9)) line.fail("max|Aring|/H = " + num(worst_aring));
  if (!(worst_F <= 1e-7)) line.fail("F vs closed form rel = " + num(worst_F));
  if (!(worst_vel <= 1e-9)) line.fail("velocity/f = " + num(worst_vel));
  line.note("|Aring|/H=" + num(worst_aring) + " dF=" + num(worst_F) + " vel/f=" + num(worst_vel));
  CHECK(worst_aring <= 1e-9);
  CHECK(worst_F <= 1e-7);
  CHECK(worst_vel <= 1e-9);
}

TEST_CASE("criterion 2: volume conservation") {
  CriterionLine line{"2 volume conservation"};
  auto ctx = make_context(24);
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;

  const LeafResult flat = run_to_leaf(
      perturbed_sphere(ctx, 10.0, {{2, 0, 0.05}}), cfg, MetricParams::flat());
  const double drift_flat = max_drift(flat.monitors);
  if (!flat.converged) line.fail("flat run did not converge");
  if (!(drift_flat <= 1e-6)) line.fail("flat drift = " + num(drift_flat));

  const LeafResult schw = run_to_leaf(perturbed_sphere(ctx, 20.0, {{2, 0, 0.05}, {3, 1, 0.02}}),
                                      cfg, MetricParams::schwarzschild(1.0));
  const double drift_schw = max_drift(schw.monitors);
  if (!schw.converged) line.fail("schwarzschild run did not converge");
  if (!(drift_schw <= 1e-6)) line.fail("schw drift = " + num(drift_schw));

  line.note("drift(flat)=" + num(drift_flat) + " drift(schw)=" + num(drift_schw));
  CHECK(flat.converged);
  CHECK(schw.converged);
  CHECK(drift_flat <= 1e-6);
  CHECK(drift_schw <= 1e-6);
}

TEST_CASE("criterion 3: exponential convergence rate") {
  CriterionLine line{"3 exponential convergence"};
  auto ctx = make_context(24);
  const double m = 1.0, sigma = 20.0;
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;
  const LeafResult lr = run_to_leaf(perturbed_sphere(ctx, sigma, {{2, 0, 0.05}, {3, 1, 0.05}}),
                                    cfg, MetricParams::schwarzschild(m));
  const double bound = 2.0 * m / (sigma * sigma * sigma);
  if (!lr.converged) line.fail("run did not converge: " + lr.message);
  if (!(lr.rate_fit >= bound)) line.fail("rate " + num(lr.rate_fit) + " < 2m/s^3 = " + num(bound));
  if (!(lr.rate_fit_r2 >= 0.999)) line.fail("R^2 = " + num(lr.rate_fit_r2));
  line.note("rate=" + num(lr.rate_fit) + " (>= " + num(bound) + ") R2=" + num(lr.rate_fit_r2) +
            " rate*s^3/m=" + num(lr.rate_fit * sigma * sigma * sigma / m));
  CHECK(lr.converged);
  CHECK(lr.rate_fit >= bound);
  CHECK(lr.rate_fit_r2 >= 0.999);
}

namespace {

// exponents of traj-max |Aring| and |grad Aring| vs sigma for a metric family
void scaling_exponents(const MetricParams& mp, const std::vector<double>& sigmas, int n_lat,
                       double stop_tol, double& expA, double& expGA, std::string& leaf_note,
                       bool& all_converged) {
  FlowConfig cfg;
  cfg.stop_tol = stop_tol;
  cfg.grad_monitor_stride = 3;
  auto ctx = make_context(n_lat);
  const auto leaves = build_foliation(mp, sigmas, cfg, ctx);
  std::vector<double> ls, lA, lGA;
  all_converged = true;
  for (const auto& leaf : leaves) {
    all_converged = all_converged && leaf.converged;
    ls.push_back(std::log(leaf.sigma));
    lA.push_back(std::log(leaf.traj_max_aring));
    lGA.push_back(std::log(leaf.traj_max_grad_aring));
    leaf_note += " " + num(leaf.max_aring);
  }
  expA = fit_slope(ls, lA);
  expGA = fit_slope(ls, lGA);
}

}  // namespace

TEST_CASE("criterion 4: decay-exponent scaling over the sigma sweep") {
  CriterionLine line{"4 decay-exponent scaling"};
  // NOTE: the conformal_dipole family cannot saturate the generic sigma^-3 /
  // sigma^-4 rates: conformally flat metrics have exactly umbilic coordinate
  // spheres, so the leading-order Aring vanishes and the measured exponents
  // come out near -4 / -5. Implemented as stated; the supplementary
  // anisotropic (non-conformally-flat) family below shows the generic rates.
  double expA, expGA;
  std::string leaf_note = "leaf-only:";
  bool conv = true;
  scaling_exponents(MetricParams::conformal_dipole(1.0, vec3(0.3, 0.0, 0.0)),
                    {10.0, 15.0, 20.0, 30.0}, 24, 1e-7, expA, expGA, leaf_note, conv);
  if (!conv) line.fail("a dipole leaf did not converge");
  if (!(expA >= -3.5 && expA <= -2.5)) line.fail("|Aring| exponent " + num(expA));
  if (!(expGA >= -4.5 && expGA <= -3.5)) line.fail("|grad Aring| exponent " + num(expGA));

  // supplementary control: anisotropic P_ab = kappa M_ab / r^2 (not conformally
  // flat) saturates the generic rates
  MetricParams aniso = MetricParams::schwarzschild(1.0);
  aniso.kind = MetricParams::Perturbation::custom_decaying;
  CustomPerturbation c;
  mat3 M;
  M << 1.0, 0.0, 0.0, 0.0, -0.5, 0.0, 0.0, 0.0, -0.5;
  const double kappa = 1.0;
  c.P = [=](const vec3& y) { return (kappa / y.squaredNorm() * M).eval(); };
  c.dP = [=](const vec3& y) {
    ten3 d{};
    const double r4 = sqr(y.squaredNorm());
    for (int a = 0; a < 3; ++a) d[a] = (-2.0 * kappa * y[a] / r4) * M;
    return d;
  };
  c.ddP = [=](const vec3& y) {
    ten4 dd{};
    const double r2 = y.squaredNorm(), r4 = r2 * r2, r6 = r4 * r2;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        dd[a][b] = kappa * (-2.0 * (a == b ? 1.0 : 0.0) / r4 + 8.0 * y[a] * y[b] / r6) * M;
    return dd;
  };
  c.bounds = {2.0, 5.0, 20.0, 100.0, 500.0, 2500.0};
  aniso.custom = c;
  double expA2, expGA2;
  std::string note2;
  bool conv2 = true;
  scaling_exponents(aniso, {10.0, 15.0, 20.0, 30.0}, 16, 1e-7, expA2, expGA2, note2, conv2);
  line.note("dipole exp(A)=" + num(expA) + " exp(gradA)=" + num(expGA) + " [" + leaf_note +
            "]; anisotropic control exp(A)=" + num(expA2) + " exp(gradA)=" + num(expGA2));
  CHECK(expA >= -3.5);
  CHECK(expA <= -2.5);
  CHECK(expGA >= -4.5);
  CHECK(expGA <= -3.5);
}

TEST_CASE("criterion 5: spectrum asymptotics") {
  CriterionLine line{"5 spectrum asymptotics"};
  const double m = 1.0, sigma = 20.0;
  auto ctx = make_context(24);
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;
  const LeafResult lr =
      run_to_leaf(RadialGraph::coordinate_sphere(ctx, sigma), cfg, MetricParams::schwarzschild(m));
  REQUIRE(lr.converged);
  const OperatorAssembly A = assemble(lr.leaf, MetricParams::schwarzschild(m));
  const double eta0 = low_spectrum(A, false, 1).eigenvalues[0];
  const double mu0 = low_spectrum(A, true, 1).eigenvalues[0];

  const double eta0_asym = -1.0 / (2 * sigma * sigma) + 2.5 * m / (sigma * sigma * sigma);
  const double eta_gap = std::abs(eta0 - eta0_asym);
  // NOTE: the exact eta0 carries a -(23/4) m^2 sigma^-4 correction = 3.59e-5,
  // which exceeds this window; measured and reported as-is.
  if (!(eta_gap <= 3e-5)) line.fail("eta0 = " + num(eta0) + " gap " + num(eta_gap) + " > 3e-5");
  if (!(mu0 > 1e-4)) line.fail("mu0 = " + num(mu0));

  auto flat_ctx = make_context(24);
  const OperatorAssembly Af =
      assemble(RadialGraph::coordinate_sphere(flat_ctx, sigma), MetricParams::flat());
  const double mu0_flat = low_spectrum(Af, true, 1).eigenvalues[0];
  if (!(std::abs(mu0_flat) <= 1e-9 / (sigma * sigma))) line.fail("flat mu0 = " + num(mu0_flat));

  line.note("eta0=" + num(eta0) + " (asym " + num(eta0_asym) + ", gap " + num(eta_gap) +
            "), mu0=" + num(mu0) + ", flat mu0=" + num(mu0_flat));
  CHECK(eta_gap <= 3e-5);
  CHECK(mu0 > 1e-4);
  CHECK(std::abs(mu0_flat) <= 1e-9 / (sigma * sigma));
}

TEST_CASE("criterion 6: first-variation oracle") {
  CriterionLine line{"6 first-variation oracle"};
  auto ctx = make_context(16);
  const std::vector<double> eps = {1e-2, 5e-3, 2.5e-3};
  bool all_first_order = true;
  double orders[2];
  int idx = 0;
  for (int variant = 0; variant < 2; ++variant) {
    const MetricParams mp = variant == 0 ? MetricParams::flat() : MetricParams::schwarzschild(1.0);
    const double sigma = variant == 0 ? 10.0 : 15.0;
    const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, sigma);
    std::mt19937_64 rng(42 + variant);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(ctx->sht.n_modes());
    u[0] = 1.0;
    for (int l = 1; l <= 4; ++l)
      for (int mm = -l; mm <= l; ++mm) u[ShTransform::idx(l, mm)] = 0.5 * nd(rng);
    const FirstVariationReport rep = first_variation_check(gr, mp, u, eps);
    orders[idx++] = rep.observed_order;
    const bool halves = rep.residual[1] <= 0.7 * rep.residual[0] + 1e-12 &&
                        rep.residual[2] <= 0.7 * rep.residual[1] + 1e-12;
    if (!halves || std::abs(rep.observed_order - 1.0) > 0.25) {
      all_first_order = false;
      line.fail(std::string(variant == 0 ? "flat" : "schw") + " order " + num(rep.observed_order));
    }
  }
  line.note("orders: flat=" + num(orders[0]) + " schw=" + num(orders[1]));
  CHECK(all_first_order);
}

TEST_CASE("criterion 7: foliation property") {
  CriterionLine line{"7 foliation property"};
  auto ctx = make_context(24);
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;
  const MetricParams mp = MetricParams::schwarzschild(1.0);
  const auto leaves = build_foliation(mp, {15.0, 16.0, 17.0, 18.0, 19.0, 20.0}, cfg, ctx);
  double min_lapse = std::numeric_limits<double>::infinity();
  double min_nesting = min_lapse;
  bool all_converged = true;
  for (size_t i = 0; i + 1 < leaves.size(); ++i) {
    all_converged = all_converged && leaves[i].converged && leaves[i + 1].converged;
    const LapseReport rep = lapse(leaves[i], leaves[i + 1], mp);
    min_lapse = std::min(min_lapse, rep.min_u);
    min_nesting = std::min(min_nesting, rep.min_nesting);
  }
  if (!all_converged) line.fail("a leaf did not converge");
  if (!(min_lapse > 0.0)) line.fail("min lapse = " + num(min_lapse));
  if (!(min_nesting > 0.0)) line.fail("min nesting = " + num(min_nesting));
  line.note("min lapse=" + num(min_lapse) + " min nesting=" + num(min_nesting));
  CHECK(all_converged);
  CHECK(min_lapse > 0.0);
  CHECK(min_nesting > 0.0);
}

TEST_CASE("criterion 8: center-of-mass agreement") {
  CriterionLine line{"8 center-of-mass agreement"};
  auto ctx = make_context(24);
  const std::vector<double> radii = {50.0, 100.0, 200.0};
  const std::vector<double> sigmas = {10.0, 15.0, 20.0, 30.0};
  FlowConfig cfg;
  cfg.stop_tol = 1e-7;

  // dipole family: ADM center = 2B/m = (1, 0, 0)
  const MetricParams dip = MetricParams::conformal_dipole(1.0, vec3(0.5, 0.0, 0.0));
  const CenterExtrapolation adm = adm_center(dip, radii, ctx);
  const vec3 expect(1.0, 0.0, 0.0);
  if (!((adm.value - expect).norm() <= 0.05 * expect.norm()))
    line.fail("ADM = (" + num(adm.value[0]) + "," + num(adm.value[1]) + "," + num(adm.value[2]) + ")");

  const auto leaves = build_foliation(dip, sigmas, cfg, ctx);
  bool conv = true;
  for (const auto& l : leaves) conv = conv && l.converged;
  if (!conv) line.fail("dipole foliation incomplete");
  const CenterExtrapolation hm = c_hm(leaves);
  const double hm_tol = std::max(0.05 * adm.value.norm(), 0.05);
  if (!((hm.value - adm.value).norm() <= hm_tol))
    line.fail("C_HM = (" + num(hm.value[0]) + "," + num(hm.value[1]) + "," + num(hm.value[2]) +
              ") vs ADM, diff " + num((hm.value - adm.value).norm()));

  // translated coordinates shift both centers by the translation vector
  MetricParams dip_shift = dip;
  dip_shift.offset = vec3(1.0, 0.0, 0.0);
  const CenterExtrapolation adm_s = adm_center(dip_shift, radii, ctx);
  const vec3 expect_s = expect + dip_shift.offset;
  if (!((adm_s.value - expect_s).norm() <= 0.05 * expect_s.norm()))
    line.fail("translated ADM off by " + num((adm_s.value - expect_s).norm()));
  const auto leaves_s = build_foliation(dip_shift, sigmas, cfg, ctx);
  bool conv_s = true;
  for (const auto& l : leaves_s) conv_s = conv_s && l.converged;
  if (!conv_s) line.fail("translated foliation incomplete");
  const CenterExtrapolation hm_s = c_hm(leaves_s);
  if (!((hm_s.value - adm_s.value).norm() <= std::max(0.05 * adm_s.value.norm(), 0.05)))
    line.fail("translated C_HM diff " + num((hm_s.value - adm_s.value).norm()));

  // centered schwarzschild: both centers vanish
  const MetricParams schw = MetricParams::schwarzschild(1.0);
  const CenterExtrapolation adm_c = adm_center(schw, radii, ctx);
  const auto leaves_c = build_foliation(schw, sigmas, cfg, ctx);
  const CenterExtrapolation hm_c = c_hm(leaves_c);
  if (!(adm_c.value.norm() <= 0.05)) line.fail("centered ADM norm " + num(adm_c.value.norm()));
  if (!(hm_c.value.norm() <= 0.05)) line.fail("centered C_HM norm " + num(hm_c.value.norm()));

  line.note("ADM=(" + num(adm.value[0]) + "," + num(adm.value[1]) + "," + num(adm.value[2]) +
            ") C_HM=(" + num(hm.value[0]) + "," + num(hm.value[1]) + "," + num(hm.value[2]) +
            ") |diff|=" + num((hm.value - adm.value).norm()) +
            "; shifted diff=" + num((hm_s.value - adm_s.value).norm()) +
            "; centered |C|=" + num(hm_c.value.norm()));
  CHECK((adm.value - expect).norm() <= 0.05 * expect.norm());
  CHECK((hm.value - adm.value).norm() <= hm_tol);
  CHECK((adm_s.value - expect_s).norm() <= 0.05 * expect_s.norm());
  CHECK((hm_s.value - adm_s.value).norm() <= std::max(0.05 * adm_s.value.norm(), 0.05));
  CHECK(adm_c.value.norm() <= 0.05);
  CHECK(hm_c.value.norm() <= 0.05);
}

TEST_CASE("criterion 9: identity suite") {
  CriterionLine line{"9 identity suite"};
  const IdentitySuiteReport flat =
      run_identity_suite(MetricParams::flat(), 10.0, {{2, 0, 0.03}}, 24);
  const IdentitySuiteReport schw = run_identity_suite(MetricParams::schwarzschild(1.0), 15.0,
                                                      {{2, 0, 0.02}, {3, 2, 0.01}}, 24);
  if (!flat.pass) line.fail("flat suite: " + flat.to_json().dump());
  if (!schw.pass) line.fail("schwarzschild suite failed");
  line.note("simons(schw)=" + num(schw.simons) + " codazzi=" + num(schw.codazzi) +
            " gauss=" + num(schw.gauss) + " bianchi=" + num(schw.bianchi));
  CHECK(flat.pass);
  CHECK(schw.pass);
}
