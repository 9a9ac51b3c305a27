#ifndef HMCF_RADIAL_GRAPH_HPP
#define HMCF_RADIAL_GRAPH_HPP

#include "hmcf/sht.hpp"

namespace hmcf {

// Immutable grid + transform bundle, shared read-only between surfaces.
struct SphereContext {
  SphericalGrid grid;
  ShTransform sht;

  explicit SphereContext(int n_lat) : grid(n_lat), sht(grid) {}
  SphereContext(const SphereContext&) = delete;
  SphereContext& operator=(const SphereContext&) = delete;
};

using ContextPtr = std::shared_ptr<const SphereContext>;

inline ContextPtr make_context(int n_lat) { return std::make_shared<const SphereContext>(n_lat); }

// A surface encoded as a positive radial function over the grid directions.
struct RadialGraph {
  ContextPtr ctx;
  SphereField rho;
  double sigma_label = 0.0;

  RadialGraph() = default;
  RadialGraph(ContextPtr c, SphereField r, double sigma) : ctx(std::move(c)), rho(std::move(r)), sigma_label(sigma) {
    if (rho.size() != ctx->grid.size()) throw usage_error("RadialGraph: rho size does not match grid");
  }

  static RadialGraph coordinate_sphere(ContextPtr c, double sigma) {
    SphereField r(c->grid.size(), sigma);
    return RadialGraph(std::move(c), std::move(r), sigma);
  }

  const SphericalGrid& grid() const { return ctx->grid; }
  const ShTransform& sht() const { return ctx->sht; }

  double min_rho() const { return *std::min_element(rho.begin(), rho.end()); }
  double max_rho() const { return *std::max_element(rho.begin(), rho.end()); }

  void require_outside_unit_ball() const {
    if (!(min_rho() > 1.0)) throw domain_error("RadialGraph: surface dips inside the unit ball");
  }

  std::vector<double> coeffs() const { return sht().analyze(rho); }

  // spectral-energy fraction in the top third of modes
  double high_mode_fraction() const {
    return ShTransform::high_mode_energy_fraction(coeffs(), grid().L);
  }

  std::vector<vec3> embed() const {
    std::vector<vec3> pts(grid().size());
    for (size_t k = 0; k < pts.size(); ++k) pts[k] = rho[k] * grid().nhat[k];
    return pts;
  }
};

// builds a graph sigma * (1 + sum_i amp_i Y_{l_i, m_i}) from mode amplitudes
struct HarmonicMode {
  int l = 2;
  int m = 0;
  double amplitude = 0.0;  // relative to sigma
};

inline RadialGraph perturbed_sphere(ContextPtr c, double sigma, const std::vector<HarmonicMode>& modes) {
  const auto& T = c->sht;
  std::vector<double> a(T.n_modes(), 0.0);
  a[ShTransform::idx(0, 0)] = sigma * std::sqrt(4.0 * pi);
  for (const auto& mo : modes) {
    if (mo.l > c->grid.L || std::abs(mo.m) > mo.l) throw usage_error("perturbed_sphere: mode outside the band");
    a[ShTransform::idx(mo.l, mo.m)] += sigma * mo.amplitude;
  }
  return RadialGraph(c, T.synthesize(a), sigma);
}

// coordinate derivatives of rho at the nodes via the harmonic transform
inline FieldJet spectral_derivatives(const RadialGraph& gr) {
  return field_jet(gr.sht(), gr.coeffs());
}

// Parametrized surface patch data over the grid: positions and first/second
// coordinate derivatives at every node. Built either from a radial graph
// (exact product rule in rho and the direction field) or from arbitrary
// per-node points (componentwise spectral differentiation).
struct SurfaceChart {
  ContextPtr ctx;
  std::vector<vec3> X, Xt, Xp, Xtt, Xtp, Xpp;
};

inline SurfaceChart chart_from_graph(const RadialGraph& gr) {
  const auto& g = gr.grid();
  const auto jet = field_jet(gr.sht(), gr.coeffs());
  SurfaceChart ch;
  ch.ctx = gr.ctx;
  const size_t n = g.size();
  ch.X.resize(n);
  ch.Xt.resize(n);
  ch.Xp.resize(n);
  ch.Xtt.resize(n);
  ch.Xtp.resize(n);
  ch.Xpp.resize(n);
  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const size_t k = g.id(i, j);
      const vec3 n0 = g.nhat[k], nt = g.nhat_t(k), np = g.nhat_p(k, i);
      const double r = gr.rho[k];
      ch.X[k] = r * n0;
      ch.Xt[k] = jet.ft[k] * n0 + r * nt;
      ch.Xp[k] = jet.fp[k] * n0 + r * np;
      ch.Xtt[k] = jet.ftt[k] * n0 + 2.0 * jet.ft[k] * nt + r * g.nhat_tt(k);
      ch.Xtp[k] = jet.ftp[k] * n0 + jet.fp[k] * nt + jet.ft[k] * np + r * g.nhat_tp(k, i);
      ch.Xpp[k] = jet.fpp[k] * n0 + 2.0 * jet.fp[k] * np + r * g.nhat_pp(k, i);
    }
  return ch;
}

inline SurfaceChart chart_from_points(ContextPtr ctx, const std::vector<vec3>& pts) {
  const auto& g = ctx->grid;
  const auto& T = ctx->sht;
  if (pts.size() != g.size()) throw usage_error("chart_from_points: size mismatch");
  SurfaceChart ch;
  ch.ctx = ctx;
  const size_t n = g.size();
  ch.X = pts;
  ch.Xt.resize(n);
  ch.Xp.resize(n);
  ch.Xtt.resize(n);
  ch.Xtp.resize(n);
  ch.Xpp.resize(n);
  for (int axis = 0; axis < 3; ++axis) {
    SphereField comp(n);
    for (size_t k = 0; k < n; ++k) comp[k] = pts[k][axis];
    const auto jet = field_jet(T, T.analyze(comp));
    for (size_t k = 0; k < n; ++k) {
      ch.Xt[k][axis] = jet.ft[k];
      ch.Xp[k][axis] = jet.fp[k];
      ch.Xtt[k][axis] = jet.ftt[k];
      ch.Xtp[k][axis] = jet.ftp[k];
      ch.Xpp[k][axis] = jet.fpp[k];
    }
  }
  return ch;
}

}  // namespace hmcf

#endif
