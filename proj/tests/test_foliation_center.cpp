#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmcf/centers.hpp"

using namespace hmcf;

namespace {

RadialGraph offset_sphere(ContextPtr ctx, const vec3& c, double radius, double sigma_label) {
  SphereField rho(ctx->grid.size());
  for (size_t k = 0; k < rho.size(); ++k) {
    const double cw = c.dot(ctx->grid.nhat[k]);
    rho[k] = cw + std::sqrt(radius * radius - c.squaredNorm() + cw * cw);
  }
  return RadialGraph(ctx, rho, sigma_label);
}

}  // namespace

TEST_CASE("best-fit sphere: exact offsets and first-order Y_1 translations") {
  auto ctx = make_context(16);
  {
    const vec3 c(1, 2, 3);
    const RadialGraph gr = offset_sphere(ctx, c, 10.0, 10.0);
    const SphereFit fit = best_fit_sphere(gr);
    CHECK(fit.r0 == doctest::Approx(10.0).epsilon(1e-10));
    CHECK((fit.center - c).norm() < 1e-10);
    CHECK(fit.rms_residual < 1e-10);
    CHECK(fit.normal_alignment < 1e-9);
  }
  {
    // rho = 10 + 0.01 Y_1^0 is an infinitesimal translation by
    // delta = 0.01 sqrt(3/4pi) along z
    const RadialGraph gr = perturbed_sphere(ctx, 10.0, {{1, 0, 0.001}});
    const SphereFit fit = best_fit_sphere(gr);
    const double delta = 10.0 * 0.001 * std::sqrt(3.0 / (4.0 * pi));
    CHECK(fit.center[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(fit.center[2] == doctest::Approx(delta).epsilon(1e-3));
    CHECK(fit.r0 == doctest::Approx(10.0).epsilon(1e-6));
  }
  {
    // strongly non-round input raises the not-round error
    const RadialGraph gr = perturbed_sphere(ctx, 10.0, {{2, 0, 0.45}});
    CHECK_THROWS_AS(best_fit_sphere(gr), geometry_error);
  }
}

TEST_CASE("flat foliation: round leaves with f = 1/(2 sigma) and unit lapse") {
  auto ctx = make_context(12);
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;
  const MetricParams mp = MetricParams::flat();
  const auto leaves = build_foliation(mp, {10.0, 12.0}, cfg, ctx);
  REQUIRE(leaves.size() == 2);
  for (const auto& leaf : leaves) {
    CHECK(leaf.converged);
    CHECK(leaf.f_sigma == doctest::Approx(1.0 / (2.0 * leaf.sigma)).epsilon(1e-9));
    CHECK(std::abs(leaf.fit.r0 - leaf.sigma) < 1e-8);
    CHECK(leaf.fit.center.norm() < 1e-9);
  }
  const LapseReport rep = lapse(leaves[0], leaves[1], mp);
  CHECK(rep.positive);
  CHECK(rep.min_u == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.max_u == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.min_nesting > 0.0);
}

TEST_CASE("schwarzschild leaves: f_sigma expansion, positive lapse, nesting") {
  auto ctx = make_context(12);
  FlowConfig cfg;
  cfg.stop_tol = 1e-9;
  const double m = 1.0;
  const MetricParams mp = MetricParams::schwarzschild(m);
  const auto leaves = build_foliation(mp, {15.0, 16.0, 20.0}, cfg, ctx);
  REQUIRE(leaves.size() == 3);
  double prev_f = 1.0;
  for (const auto& leaf : leaves) {
    CHECK(leaf.converged);
    // f_sigma = 1/(2 r0) - m/r0^2 + O(sigma^-3) with the exact remainder 9m^2/8r^3
    const double lead = 0.5 / leaf.fit.r0 - m / sqr(leaf.fit.r0);
    CHECK(std::abs(leaf.f_sigma - lead) < 2.0 * m * m / std::pow(leaf.fit.r0, 3));
    CHECK(leaf.f_sigma < prev_f);  // strictly decreasing in sigma
    prev_f = leaf.f_sigma;
    CHECK(std::abs(leaf.fit.r0 - leaf.sigma) < 0.5);
  }
  const LapseReport rep = lapse(leaves[0], leaves[1], mp);
  CHECK(rep.positive);
  CHECK(rep.min_nesting > 0.0);
  // coordinate spheres are exact leaves: u = psi^2 > 1, nearly constant
  CHECK(rep.mean_u > 1.0);
  CHECK(rep.structure_ratio < 1e-6);
}

TEST_CASE("centroid extrapolation recovers synthetic and translated families") {
  auto ctx = make_context(12);
  // translated spheres: centroid identically the translation
  {
    const vec3 a(0.7, -0.3, 0.2);
    std::vector<FoliationLeaf> leaves;
    for (double sigma : {10.0, 12.0, 14.0, 16.0}) {
      FoliationLeaf leaf;
      leaf.sigma = sigma;
      leaf.graph = offset_sphere(ctx, a, sigma, sigma);
      leaves.push_back(leaf);
    }
    const CenterExtrapolation ex = c_hm(leaves);
    CHECK((ex.value - a).norm() < 1e-8);
    CHECK(ex.fit_residual < 1e-8);
  }
  // synthetic series c(s) = c0 + c1/s + c2/s^2 is reproduced exactly
  {
    const vec3 c0(1.0, 0.5, -0.25), c1(3.0, -2.0, 1.0), c2(-5.0, 4.0, 2.0);
    std::vector<double> sig = {10, 15, 20, 30};
    std::vector<vec3> vals;
    for (double s : sig) vals.push_back(c0 + c1 / s + c2 / (s * s));
    const CenterExtrapolation ex = extrapolate_in_inverse(sig, vals);
    CHECK((ex.value - c0).norm() < 1e-10);
  }
}

TEST_CASE("ADM center: parity zero, dipole closed form, translation equivariance") {
  auto ctx = make_context(16);
  const std::vector<double> radii = {50.0, 100.0, 200.0};
  {
    const MetricParams mp = MetricParams::schwarzschild(1.0);
    const CenterExtrapolation ex = adm_center(mp, radii, ctx);
    CHECK(ex.value.norm() < 1e-10);
    for (const vec3& s : ex.samples) CHECK(s.norm() < 1e-10);
  }
  {
    // C^k = 2 B_k / m
    const MetricParams mp = MetricParams::conformal_dipole(1.0, vec3(0.5, 0, 0));
    const CenterExtrapolation ex = adm_center(mp, radii, ctx);
    CHECK(ex.value[0] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(std::abs(ex.value[1]) < 1e-8);
    CHECK(std::abs(ex.value[2]) < 1e-8);
  }
  {
    MetricParams mp = MetricParams::schwarzschild(1.5);
    mp.offset = vec3(0.0, 2.0, 0.0);
    const CenterExtrapolation ex = adm_center(mp, radii, ctx);
    CHECK((ex.value - vec3(0, 2, 0)).norm() < 0.05 * 2.0);
  }
  {
    MetricParams mp = MetricParams::conformal_dipole(2.0, vec3(0, 0, 0.8));
    mp.offset = vec3(1.0, 0.0, 0.0);
    const CenterExtrapolation ex = adm_center(mp, radii, ctx);
    const vec3 expect(1.0, 0.0, 0.8);  // offset + 2B/m
    CHECK((ex.value - expect).norm() < 0.05 * expect.norm());
  }
  CHECK_THROWS_AS(adm_center(MetricParams::flat(), radii, ctx), usage_error);
}

TEST_CASE("translation equivariance of per-leaf centroids") {
  auto ctx = make_context(12);
  MetricParams mp = MetricParams::schwarzschild(1.0);
  mp.offset = vec3(1.0, 0.0, 0.0);
  FlowConfig cfg;
  cfg.stop_tol = 1e-8;
  // initial data centered on the translated metric center converges in place
  const RadialGraph init = offset_sphere(ctx, mp.offset, 12.0, 12.0);
  const LeafResult lr = run_to_leaf(init, cfg, mp);
  REQUIRE(lr.converged);
  const vec3 cen = euclidean_centroid(lr.leaf);
  CHECK((cen - mp.offset).norm() < 1e-6 + 1e-4);
}
