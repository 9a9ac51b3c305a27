#ifndef HMCF_INTEGRALS_HPP
#define HMCF_INTEGRALS_HPP

#include "hmcf/metric.hpp"
#include "hmcf/radial_graph.hpp"

namespace hmcf {

// sum of field * area_density * quadrature weight; area_density is the area
// element relative to dOmega (metric-induced or Euclidean)
inline double surface_integral(const RadialGraph& gr, const SphereField& field,
                               const SphereField& area_density) {
  const auto& g = gr.grid();
  if (field.size() != g.size() || area_density.size() != g.size())
    throw usage_error("surface_integral: field defined on a different grid");
  double s = 0.0;
  for (size_t k = 0; k < g.size(); ++k) s += field[k] * area_density[k] * g.weight[k];
  return s;
}

// Euclidean area element relative to dOmega, from the chart first forms
inline SphereField euclidean_area_density(const SurfaceChart& ch) {
  const auto& g = ch.ctx->grid;
  SphereField dens(g.size());
  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const size_t k = g.id(i, j);
      const double E = ch.Xt[k].squaredNorm();
      const double F = ch.Xt[k].dot(ch.Xp[k]);
      const double G = ch.Xp[k].squaredNorm();
      dens[k] = std::sqrt(std::max(0.0, E * G - F * F)) / g.sin_t[i];
    }
  return dens;
}

// the whole inner sphere must stay outside the (possibly translated) excluded ball
inline double default_inner_radius(const MetricParams& p) {
  return std::max(1.5, p.mass) + p.offset.norm();
}

// Metric volume of the region between the fixed inner coordinate sphere
// r = r_in and the surface, by per-direction Gauss-Legendre quadrature of the
// metric volume density. Only volume differences matter for the conservation
// monitors, so the inner boundary is an arbitrary fixed sphere.
inline double enclosed_volume(const RadialGraph& gr, const MetricParams& params,
                              double r_in = -1.0, int n_quad = 24) {
  if (r_in < 0.0) r_in = default_inner_radius(params);
  if (!(r_in > 1.0)) throw usage_error("enclosed_volume: inner radius must exceed the excluded ball");
  if (!(gr.min_rho() > r_in))
    throw domain_error("enclosed_volume: surface dips below the inner boundary r_in");

  std::vector<double> qx, qw;
  gauss_legendre(n_quad, qx, qw);

  const auto& g = gr.grid();
  double vol = 0.0;
  for (size_t k = 0; k < g.size(); ++k) {
    const vec3 dir = g.nhat[k];
    const double a = r_in, b = gr.rho[k];
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double colsum = 0.0;
    for (int q = 0; q < n_quad; ++q) {
      const double s = mid + half * qx[q];
      const mat3 gm = eval_metric_only(params, s * dir);
      colsum += qw[q] * std::sqrt(gm.determinant()) * s * s;
    }
    vol += g.weight[k] * half * colsum;
  }
  return vol;
}

}  // namespace hmcf

#endif
