#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "hmcf/extrinsic.hpp"

using namespace hmcf;

namespace {

// conformal closed form for centered coordinate spheres, worked out by hand
double schw_H(double m, double r) {
  return (2.0 / r) * (1.0 - 0.5 * m / r) * std::pow(1.0 + 0.5 * m / r, -3.0);
}

// F of a 2x2 pair (g fixed) through invariants, independent of F_kl_at
double F_of(const mat2& g, const mat2& h) {
  const mat2 shape = g.inverse() * h;
  const double H = shape.trace(), A2 = H * H - 2.0 * shape.determinant();
  return (H * H - A2) / (2.0 * H);
}

}  // namespace

TEST_CASE("flat round sphere: lambda = 1/r, H = 2/r, F = 1/(2r), umbilic") {
  auto ctx = make_context(16);
  const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, 4.0);
  const ExtrinsicField E = compute_extrinsic(gr, MetricParams::flat());
  for (size_t k = 0; k < E.size(); ++k) {
    CHECK(E.lambda[k][0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(E.lambda[k][1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(E.H[k] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(E.F[k] == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(std::sqrt(E.Aring_norm2[k]) < 1e-10 * E.H[k]);
  }
}

TEST_CASE("schwarzschild coordinate sphere matches the conformal closed form") {
  auto ctx = make_context(16);
  const double m = 2.0, r = 10.0;
  const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, r);
  const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(m));
  const double Href = schw_H(m, r);  // = 0.13523666416...
  CHECK(Href == doctest::Approx(0.1352367).epsilon(1e-6));
  for (size_t k = 0; k < E.size(); k += 7) {
    CHECK(E.H[k] == doctest::Approx(Href).epsilon(1e-12));
    CHECK(E.F[k] == doctest::Approx(0.25 * Href).epsilon(1e-12));
    CHECK(std::sqrt(E.Aring_norm2[k]) < 1e-10);
  }
}

TEST_CASE("umbilic exactness for any mass and centered sphere") {
  auto ctx = make_context(12);
  for (double m : {0.3, 1.0, 3.0}) {
    for (double r : {8.0, 25.0}) {
      const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, r);
      const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(m));
      for (size_t k = 0; k < E.size(); k += 11)
        CHECK(std::sqrt(E.Aring_norm2[k]) <= 1e-9 * E.H[k]);
    }
  }
}

TEST_CASE("mean curvature expansion H = 2/r - 4m/r^2 + O(sigma^-3) ") {
  auto ctx = make_context(16);
  const double m = 1.0, r = 20.0;
  const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, r);
  const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(m));
  // exact remainder is 9 m^2 / (2 r^3) + O(r^-4); allow 6 m^2 / r^3
  const double lead = 2.0 / r - 4.0 * m / (r * r);
  CHECK(std::abs(E.H[0] - lead) <= 6.0 * m * m / (r * r * r));
  CHECK(std::abs(E.H[0] - lead) >= 3.0 * m * m / (r * r * r));  // the sigma^-3 term is real
}

TEST_CASE("normal is gbar-unit and gbar-orthogonal to tangents") {
  auto ctx = make_context(16);
  const RadialGraph gr = perturbed_sphere(ctx, 12.0, {{2, 0, 0.08}, {3, 1, 0.04}});
  const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(1.0));
  for (size_t k = 0; k < E.size(); k += 5) {
    const mat3& g = E.jets[k].g;
    CHECK(E.nu[k].dot(g * E.nu[k]) == doctest::Approx(1.0).epsilon(1e-12));
    const double sc = std::sqrt(E.e1[k].dot(g * E.e1[k]));
    CHECK(std::abs(E.nu[k].dot(g * E.e1[k])) < 1e-10 * sc);
    const double sc2 = std::sqrt(E.e2[k].dot(g * E.e2[k]));
    CHECK(std::abs(E.nu[k].dot(g * E.e2[k])) < 1e-10 * std::max(sc2, 1e-30));
  }
}

TEST_CASE("F-derivative tensors: principal-frame values and umbilic limit") {
  // lambda = (1, 3) in an orthonormal frame
  mat2 g = mat2::Identity(), h;
  h << 1.0, 0.0, 0.0, 3.0;
  const double H = 4.0, F = 0.75;
  const mat2 Fk = F_kl_at(g.inverse(), h, H, F);
  CHECK(Fk(0, 0) == doctest::Approx(9.0 / 16.0).epsilon(1e-14));
  CHECK(Fk(1, 1) == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
  CHECK(std::abs(Fk(0, 1)) < 1e-15);
  // F^{kl} h_mk h_ml = 2 F^2
  const mat2 h2 = h * h;
  CHECK((Fk.cwiseProduct(h2)).sum() == doctest::Approx(2.0 * F * F).epsilon(1e-14));

  // umbilic: F^{kl} = g^{kl}/4, and F^{kl,pq} stays finite
  mat2 hu = 0.5 * mat2::Identity();
  const mat2 Fu = F_kl_at(g, hu, 1.0, 0.25);
  CHECK(Fu(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(Fu(1, 1) == doctest::Approx(0.25).epsilon(1e-14));
  const auto F2u = F_klpq_at(g, hu, 1.0, 0.25);
  for (double v : F2u) CHECK(std::isfinite(v));
}

TEST_CASE("directional-derivative oracle for F^{kl} and F^{kl,pq}") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  int done = 0;
  while (done < 12) {
    // random SPD g and mean-convex h
    mat2 a;
    a << nd(rng), nd(rng), nd(rng), nd(rng);
    mat2 g = a.transpose() * a + 0.5 * mat2::Identity();
    mat2 b;
    b << nd(rng), 0.3 * nd(rng), 0.0, nd(rng);
    b(1, 0) = b(0, 1);
    mat2 h = b + 1.5 * g;  // push toward mean convexity
    mat2 B;
    B << nd(rng), 0.4 * nd(rng), 0.0, nd(rng);
    B(1, 0) = B(0, 1);

    const mat2 shape = g.inverse() * h;
    const double H = shape.trace();
    if (!(H > 0.3) || !(shape.determinant() > 0.05)) continue;
    ++done;

    const double Fv = shape.determinant() / H;  // F = lambda1 lambda2 / H
    const mat2 Fk2 = F_kl_at(g.inverse(), h, H, Fv);

    const double s = 1e-6;
    const double dF_fd = (F_of(g, h + s * B) - F_of(g, h - s * B)) / (2 * s);
    double dF_an = 0.0;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) dF_an += Fk2(k, l) * B(k, l);
    CHECK(dF_an == doctest::Approx(dF_fd).epsilon(1e-7));

    // second derivative contracted twice with B
    auto Fkl_of = [&](const mat2& hh) {
      const mat2 sh = g.inverse() * hh;
      return F_kl_at(g.inverse(), hh, sh.trace(), sh.determinant() / sh.trace());
    };
    const mat2 dFk_fd = (Fkl_of(h + s * B) - Fkl_of(h - s * B)) / (2 * s);
    const auto F2 = F_klpq_at(g.inverse(), h, H, Fv);
    double lhs = 0.0, rhs = 0.0;
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l) {
        double c = 0.0;
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) c += F2[FDerivatives::fid(k, l, p, q)] * B(p, q);
        lhs += c * B(k, l);
        rhs += dFk_fd(k, l) * B(k, l);
      }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-5));
  }
}

TEST_CASE("algebraic identities F^{kl} h_kl = F and F^{kl}(h^2)_kl = 2F^2 nodewise") {
  auto ctx = make_context(16);
  const RadialGraph gr = perturbed_sphere(ctx, 15.0, {{2, 0, 0.1}, {3, 2, 0.05}});
  const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(1.0));
  const FDerivatives D = compute_F_derivatives(E);
  for (size_t k = 0; k < E.size(); ++k) {
    double c1 = 0.0, c2 = 0.0;
    const mat2 hsq = E.h[k] * E.ginv[k] * E.h[k];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        c1 += D.F_up[k](a, b) * E.h[k](a, b);
        c2 += D.F_up[k](a, b) * hsq(a, b);
      }
    CHECK(c1 == doctest::Approx(E.F[k]).epsilon(1e-10));
    CHECK(c2 == doctest::Approx(2.0 * E.F[k] * E.F[k]).epsilon(1e-10));
  }
}

TEST_CASE("frame independence: rotating the longitude origin permutes fields") {
  auto ctx = make_context(16);
  const auto& g = ctx->grid;
  const int shift = 3;
  auto rho_fun = [&](double theta, double phi) {
    return 10.0 * (1.0 + 0.06 * std::sin(theta) * std::sin(theta) * std::cos(2.0 * phi) +
                   0.04 * std::cos(theta));
  };
  SphereField r1(g.size()), r2(g.size());
  const double dphi = 2.0 * pi * shift / g.n_lon;
  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      r1[g.id(i, j)] = rho_fun(g.theta[i], g.phi[j]);
      r2[g.id(i, j)] = rho_fun(g.theta[i], g.phi[j] - dphi);
    }
  const MetricParams params = MetricParams::schwarzschild(1.0);
  const ExtrinsicField E1 = compute_extrinsic(RadialGraph(ctx, r1, 10.0), params);
  const ExtrinsicField E2 = compute_extrinsic(RadialGraph(ctx, r2, 10.0), params);
  double worst = 0.0;
  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const size_t k2 = g.id(i, j);
      const size_t k1 = g.id(i, (j - shift + g.n_lon) % g.n_lon);
      worst = std::max(worst, std::abs(E2.F[k2] - E1.F[k1]));
      worst = std::max(worst, std::abs(E2.H[k2] - E1.H[k1]));
      worst = std::max(worst,
                       std::abs(std::sqrt(E2.Aring_norm2[k2]) - std::sqrt(E1.Aring_norm2[k1])));
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("mean value f: umbilic spheres and high-resolution oracle") {
  auto ctx = make_context(24);
  // umbilic sphere: f = F exactly
  {
    const RadialGraph gr = RadialGraph::coordinate_sphere(ctx, 20.0);
    const ExtrinsicField E = compute_extrinsic(gr, MetricParams::schwarzschild(1.0));
    const double f = mean_value_f(E, gr);
    CHECK(f == doctest::Approx(0.25 * schw_H(1.0, 20.0)).epsilon(1e-12));
  }
  // flat metric, rho = sigma (1 + 0.1 cos(theta)): compare against n_lat = 64
  {
    auto rho_at = [&](ContextPtr c) {
      SphereField r(c->grid.size());
      for (int i = 0; i < c->grid.n_lat; ++i)
        for (int j = 0; j < c->grid.n_lon; ++j)
          r[c->grid.id(i, j)] = 10.0 * (1.0 + 0.1 * c->grid.cos_t[i]);
      return r;
    };
    const RadialGraph g24(ctx, rho_at(ctx), 10.0);
    const ExtrinsicField E24 = compute_extrinsic(g24, MetricParams::flat());
    auto ctx64 = make_context(64);
    const RadialGraph g64(ctx64, rho_at(ctx64), 10.0);
    const ExtrinsicField E64 = compute_extrinsic(g64, MetricParams::flat());
    CHECK(mean_value_f(E24, g24) ==
          doctest::Approx(mean_value_f(E64, g64)).epsilon(1e-8));
  }
}

TEST_CASE("mean-convexity violation raises a geometry error") {
  auto ctx = make_context(16);
  const RadialGraph gr = perturbed_sphere(ctx, 10.0, {{6, 0, 0.5}});
  CHECK_THROWS_AS(compute_extrinsic(gr, MetricParams::flat()), geometry_error);
}
