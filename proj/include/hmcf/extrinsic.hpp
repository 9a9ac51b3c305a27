#ifndef HMCF_EXTRINSIC_HPP
#define HMCF_EXTRINSIC_HPP

#include "hmcf/integrals.hpp"
#include "hmcf/metric.hpp"
#include "hmcf/radial_graph.hpp"

namespace hmcf {

// Per-node extrinsic geometry of a surface in the ambient metric, together
// with the frames and ambient jets every downstream consumer needs.
//
// Index conventions: surface coordinate frame e_1 = X_theta, e_2 = X_phi;
// h_ij = <nabla_{e_i} nu, e_j> with nu the outward gbar-unit normal, so
// coordinate spheres in flat space have positive curvature.
struct ExtrinsicField {
  ContextPtr ctx;
  double sigma_label = 0.0;

  std::vector<MetricJet> jets;
  std::vector<vec3> e1, e2;        // tangent vectors
  std::vector<vec3> dual1, dual2;  // dual basis covectors e^i_alpha
  std::vector<vec3> nu;            // ambient unit normal (vector components)
  std::vector<mat2> g, ginv, h, Aring;
  std::vector<std::array<mat2, 2>> surf_gamma;  // Gamma^m_ij, index [m](i,j)
  std::vector<vec2> lambda;                     // principal curvatures, sorted
  SphereField H, A2, F, Aring_norm2, area_density;

  size_t size() const { return H.size(); }

  // Rbar(nu, e_i, nu, e_j) at a node
  mat2 R3i3j(size_t k) const {
    if (jets[k].depth < JetDepth::curvature)
      throw usage_error("R3i3j: extrinsic field was computed without curvature jets");
    const auto& R = jets[k].riemann;
    mat2 out;
    const vec3* ev[2] = {&e1[k], &e2[k]};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double s = 0.0;
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c)
              for (int d = 0; d < 3; ++d)
                s += R[a][b][c][d] * nu[k][a] * (*ev[i])[b] * nu[k][c] * (*ev[j])[d];
        out(i, j) = s;
      }
    return out;
  }
};

inline ExtrinsicField compute_extrinsic(const SurfaceChart& ch, const MetricParams& params,
                                        double sigma_label,
                                        JetDepth depth = JetDepth::curvature) {
  const auto& g = ch.ctx->grid;
  const size_t n = g.size();
  ExtrinsicField E;
  E.ctx = ch.ctx;
  E.sigma_label = sigma_label;
  E.jets.resize(n);
  E.e1 = ch.Xt;
  E.e2 = ch.Xp;
  E.dual1.resize(n);
  E.dual2.resize(n);
  E.nu.resize(n);
  E.g.resize(n);
  E.ginv.resize(n);
  E.h.resize(n);
  E.Aring.resize(n);
  E.surf_gamma.resize(n);
  E.lambda.resize(n);
  E.H.resize(n);
  E.A2.resize(n);
  E.F.resize(n);
  E.Aring_norm2.resize(n);
  E.area_density.resize(n);

  const double h_floor = 1e-6 / std::max(1.0, sigma_label);

  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const size_t k = g.id(i, j);
      const MetricJet& J = E.jets[k] = eval_jet(params, ch.X[k], depth);
      const vec3 t1 = ch.Xt[k], t2 = ch.Xp[k];

      mat2 gi;
      gi(0, 0) = t1.dot(J.g * t1);
      gi(0, 1) = gi(1, 0) = t1.dot(J.g * t2);
      gi(1, 1) = t2.dot(J.g * t2);
      E.g[k] = gi;
      const double detg = gi.determinant();
      if (!(detg > 0.0)) throw geometry_error("compute_extrinsic: degenerate induced metric");
      E.ginv[k] = gi.inverse();
      E.area_density[k] = std::sqrt(detg) / g.sin_t[i];

      // gbar-unit outward normal: raise the Euclidean conormal with ginv
      const vec3 ncov = t1.cross(t2);
      vec3 nv = J.ginv * ncov;
      nv /= std::sqrt(nv.dot(J.g * nv));
      if (nv.dot(ch.X[k]) < 0.0) nv = -nv;
      E.nu[k] = nv;

      // dual basis e^i = g^{ij} gbar e_j (covector components)
      const vec3 c1 = J.g * t1, c2 = J.g * t2;
      E.dual1[k] = E.ginv[k](0, 0) * c1 + E.ginv[k](0, 1) * c2;
      E.dual2[k] = E.ginv[k](1, 0) * c1 + E.ginv[k](1, 1) * c2;

      // h_ij = -gbar(nu, nabla_{e_i} e_j), second derivatives from the chart
      auto amb_gamma = [&](const vec3& u, const vec3& v) {
        vec3 out;
        for (int a = 0; a < 3; ++a) {
          double s = 0.0;
          for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) s += J.gamma[a](b, c) * u[b] * v[c];
          out[a] = s;
        }
        return out;
      };
      const vec3 cd11 = ch.Xtt[k] + amb_gamma(t1, t1);
      const vec3 cd12 = ch.Xtp[k] + amb_gamma(t1, t2);
      const vec3 cd22 = ch.Xpp[k] + amb_gamma(t2, t2);
      const vec3 nu_flat = J.g * nv;
      mat2 hi;
      hi(0, 0) = -nu_flat.dot(cd11);
      hi(0, 1) = hi(1, 0) = -nu_flat.dot(cd12);
      hi(1, 1) = -nu_flat.dot(cd22);
      E.h[k] = hi;

      // surface Christoffels via tangential projection
      auto proj = [&](const vec3& w, int m) {
        return (m == 0 ? E.dual1[k] : E.dual2[k]).dot(w);
      };
      for (int m = 0; m < 2; ++m) {
        E.surf_gamma[k][m](0, 0) = proj(cd11, m);
        E.surf_gamma[k][m](0, 1) = E.surf_gamma[k][m](1, 0) = proj(cd12, m);
        E.surf_gamma[k][m](1, 1) = proj(cd22, m);
      }

      const mat2 shape = E.ginv[k] * hi;
      const double Hk = shape.trace();
      if (!(Hk > h_floor))
        throw geometry_error("compute_extrinsic: mean convexity lost (H = " + std::to_string(Hk) + ")");
      E.H[k] = Hk;
      // traceless part first: |Aring|^2 from the tensor itself stays accurate
      // at umbilic points where the invariant route H^2 - 4 det cancels
      E.Aring[k] = hi - 0.5 * Hk * gi;
      const mat2 B = E.ginv[k] * E.Aring[k];
      E.Aring_norm2[k] = std::max(0.0, (B * B).trace());
      const double gap = std::sqrt(2.0 * E.Aring_norm2[k]);  // = |lambda2 - lambda1|
      E.lambda[k] = vec2(0.5 * (Hk - gap), 0.5 * (Hk + gap));
      E.A2[k] = 0.5 * Hk * Hk + E.Aring_norm2[k];
      E.F[k] = (Hk * Hk - E.A2[k]) / (2.0 * Hk);
    }
  return E;
}

inline ExtrinsicField compute_extrinsic(const RadialGraph& gr, const MetricParams& params,
                                        JetDepth depth = JetDepth::curvature) {
  gr.require_outside_unit_ball();
  return compute_extrinsic(chart_from_graph(gr), params, gr.sigma_label, depth);
}

// ---------------------------------------------------------------------------
// spectral covariant derivatives through the ambient projection
// ---------------------------------------------------------------------------

// first coordinate derivatives of a nodal scalar field (analysis + filter)
inline std::array<SphereField, 2> spectral_grad(const ExtrinsicField& E, const SphereField& f,
                                                double filter_strength = 36.0) {
  const auto& T = E.ctx->sht;
  auto a = T.analyze(f);
  T.filter(a, filter_strength);
  return {T.synthesize(a, ShTransform::Deriv::d_theta), T.synthesize(a, ShTransform::Deriv::d_phi)};
}

// covariant Hessian of a scalar: f_{;ij} = d_i d_j f - Gamma^m_ij d_m f
inline std::vector<mat2> covariant_hessian(const ExtrinsicField& E, const SphereField& f,
                                           double filter_strength = 36.0) {
  const auto& T = E.ctx->sht;
  auto a = T.analyze(f);
  T.filter(a, filter_strength);
  const auto jet = field_jet(T, a);
  std::vector<mat2> out(E.size());
  for (size_t k = 0; k < E.size(); ++k) {
    mat2 dd;
    dd(0, 0) = jet.ftt[k];
    dd(0, 1) = dd(1, 0) = jet.ftp[k];
    dd(1, 1) = jet.fpp[k];
    const vec2 df(jet.ft[k], jet.fp[k]);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int m = 0; m < 2; ++m) dd(i, j) -= E.surf_gamma[k][m](i, j) * df[m];
    out[k] = dd;
  }
  return out;
}

namespace detail {

// derivative synthesis (theta, phi) of a set of nodal fields, with filtering
inline void spectral_d1(const ShTransform& T, const SphereField& f, SphereField& ft, SphereField& fp,
                        double filter_strength) {
  auto a = T.analyze(f);
  T.filter(a, filter_strength);
  ft = T.synthesize(a, ShTransform::Deriv::d_theta);
  fp = T.synthesize(a, ShTransform::Deriv::d_phi);
}

}  // namespace detail

// covariant derivative of a surface one-form: out(i,j) = nabla_i omega_j
inline std::vector<mat2> covariant_derivative_one_form(const ExtrinsicField& E,
                                                       const std::vector<vec2>& omega,
                                                       double filter_strength = 36.0) {
  const auto& T = E.ctx->sht;
  const size_t n = E.size();
  std::array<SphereField, 3> W;
  for (auto& w : W) w.assign(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const vec3 wamb = omega[k][0] * E.dual1[k] + omega[k][1] * E.dual2[k];
    for (int a = 0; a < 3; ++a) W[a][k] = wamb[a];
  }
  std::array<SphereField, 3> Wt, Wp;
  for (int a = 0; a < 3; ++a) detail::spectral_d1(T, W[a], Wt[a], Wp[a], filter_strength);

  std::vector<mat2> out(n);
  for (size_t k = 0; k < n; ++k) {
    const MetricJet& J = E.jets[k];
    const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
    const vec3 wamb(W[0][k], W[1][k], W[2][k]);
    for (int i = 0; i < 2; ++i) {
      vec3 D;
      for (int a = 0; a < 3; ++a) {
        double v = (i == 0 ? Wt[a][k] : Wp[a][k]);
        for (int mu = 0; mu < 3; ++mu)
          for (int gi = 0; gi < 3; ++gi) v -= J.gamma[mu](gi, a) * (*ev[i])[gi] * wamb[mu];
        D[a] = v;
      }
      for (int j = 0; j < 2; ++j) out[k](i, j) = ev[j]->dot(D);
    }
  }
  return out;
}

// Covariant derivative of a symmetric surface 2-tensor P_ij. The tensor is
// pushed to ambient Cartesian components (globally smooth fields), spectrally
// differentiated there and pulled back, which is exact for the continuum
// operator and avoids pole-singular component fields.
inline std::vector<std::array<mat2, 2>> covariant_derivative_sym2(
    const ExtrinsicField& E, const std::vector<mat2>& P, double filter_strength = 36.0) {
  const auto& T = E.ctx->sht;
  const size_t n = E.size();

  // ambient components S_ab = P_ij e^i_a e^j_b
  std::array<SphereField, 6> S;  // packed upper triangle (00,01,02,11,12,22)
  for (auto& s : S) s.assign(n, 0.0);
  auto pack = [](int a, int b) {
    static const int tbl[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return tbl[a][b];
  };
  for (size_t k = 0; k < n; ++k) {
    const vec3* du[2] = {&E.dual1[k], &E.dual2[k]};
    mat3 Sk = mat3::Zero();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) Sk += P[k](i, j) * (*du[i]) * du[j]->transpose();
    for (int a = 0; a < 3; ++a)
      for (int b = a; b < 3; ++b) S[pack(a, b)][k] = Sk(a, b);
  }

  std::array<SphereField, 6> St, Sp;
  for (int c = 0; c < 6; ++c) detail::spectral_d1(T, S[c], St[c], Sp[c], filter_strength);

  std::vector<std::array<mat2, 2>> out(n);
  for (size_t k = 0; k < n; ++k) {
    const MetricJet& J = E.jets[k];
    const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
    mat3 Sk;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) Sk(a, b) = S[pack(a, b)][k];
    for (int kdir = 0; kdir < 2; ++kdir) {
      mat3 D;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) D(a, b) = (kdir == 0 ? St[pack(a, b)][k] : Sp[pack(a, b)][k]);
      // ambient connection corrections along e_k
      const vec3 ek = *ev[kdir];
      mat3 corr = mat3::Zero();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double s = 0.0;
          for (int mu = 0; mu < 3; ++mu)
            for (int gi = 0; gi < 3; ++gi)
              s += J.gamma[mu](gi, a) * ek[gi] * Sk(mu, b) + J.gamma[mu](gi, b) * ek[gi] * Sk(a, mu);
          corr(a, b) = s;
        }
      D -= corr;
      mat2 res;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) res(i, j) = ev[i]->dot(D * (*ev[j]));
      out[k][kdir] = res;
    }
  }
  return out;
}

// Covariant derivative of a rank-3 surface tensor T_{kij} (symmetric in ij),
// returning nabla_l T_{kij} as out[k4][l-first...]: out[node][l][k](i,j).
inline std::vector<std::array<std::array<mat2, 2>, 2>> covariant_derivative_rank3(
    const ExtrinsicField& E, const std::vector<std::array<mat2, 2>>& Tfield,
    double filter_strength = 36.0) {
  const auto& T = E.ctx->sht;
  const size_t n = E.size();

  // ambient components W_gab = T_kij e^k_g e^i_a e^j_b (symmetric in ab)
  std::array<SphereField, 18> W;  // g in 0..2, packed(ab) in 0..5
  for (auto& w : W) w.assign(n, 0.0);
  auto pack = [](int a, int b) {
    static const int tbl[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
    return tbl[a][b];
  };
  for (size_t k = 0; k < n; ++k) {
    const vec3* du[2] = {&E.dual1[k], &E.dual2[k]};
    for (int g3 = 0; g3 < 3; ++g3)
      for (int a = 0; a < 3; ++a)
        for (int b = a; b < 3; ++b) {
          double s = 0.0;
          for (int kk = 0; kk < 2; ++kk)
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j)
                s += Tfield[k][kk](i, j) * (*du[kk])[g3] * (*du[i])[a] * (*du[j])[b];
          W[g3 * 6 + pack(a, b)][k] = s;
        }
  }

  std::array<SphereField, 18> Wt, Wp;
  for (int c = 0; c < 18; ++c) detail::spectral_d1(T, W[c], Wt[c], Wp[c], filter_strength);

  std::vector<std::array<std::array<mat2, 2>, 2>> out(n);
  for (size_t k = 0; k < n; ++k) {
    const MetricJet& J = E.jets[k];
    const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
    double Wk[3][3][3];
    for (int g3 = 0; g3 < 3; ++g3)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) Wk[g3][a][b] = W[g3 * 6 + pack(a, b)][k];
    for (int ldir = 0; ldir < 2; ++ldir) {
      const vec3 el = *ev[ldir];
      double D[3][3][3];
      for (int g3 = 0; g3 < 3; ++g3)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            double v = (ldir == 0 ? Wt[g3 * 6 + pack(a, b)][k] : Wp[g3 * 6 + pack(a, b)][k]);
            for (int mu = 0; mu < 3; ++mu)
              for (int gi = 0; gi < 3; ++gi)
                v -= J.gamma[mu](gi, g3) * el[gi] * Wk[mu][a][b] +
                     J.gamma[mu](gi, a) * el[gi] * Wk[g3][mu][b] +
                     J.gamma[mu](gi, b) * el[gi] * Wk[g3][a][mu];
            D[g3][a][b] = v;
          }
      for (int kk = 0; kk < 2; ++kk) {
        mat2 res;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double s = 0.0;
            for (int g3 = 0; g3 < 3; ++g3)
              for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b)
                  s += (*ev[kk])[g3] * (*ev[i])[a] * (*ev[j])[b] * D[g3][a][b];
            res(i, j) = s;
          }
        out[k][ldir][kk] = res;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// derivative tensors of the harmonic mean curvature
// ---------------------------------------------------------------------------

// F^{kl} and F^{kl,pq} have closed forms in terms of metric invariants,
//   F^{kl} = (1 - F/H) g^{kl} - A^{kl}/H,
//   F^{kl,pq} = -(g^{kp}g^{lq} + g^{kq}g^{lp})/(2H) + (A^{kl}g^{pq} + A^{pq}g^{kl})/H^2
//             - g^{kl}g^{pq}/H + 2F g^{kl}g^{pq}/H^2,
// smooth through umbilic points (no eigenframe rotation or 0/0 limits).
struct FDerivatives {
  std::vector<mat2> F_up;                                  // F^{kl}
  std::vector<std::array<double, 16>> F2_up;               // F^{kl,pq}
  std::vector<vec2> grad_F, grad_H;                        // coordinate gradients
  std::vector<std::array<mat2, 2>> grad_h;                 // nabla_k h_ij
  std::vector<std::array<mat2, 2>> grad_Aring;             // nabla_k Aring_ij
  SphereField grad_Aring_norm;                             // |nabla Aring|
  SphereField grad_A_norm2;                                // |nabla A|^2
  SphereField grad_H_norm2;                                // |nabla H|^2
  std::vector<vec2> w;                                     // Rbar_{3lil} projection
  bool has_w = false;                                      // requires curvature jets

  static int fid(int k, int l, int p, int q) { return ((k * 2 + l) * 2 + p) * 2 + q; }
};

inline mat2 F_kl_at(const mat2& ginv, const mat2& h, double H, double F) {
  const mat2 Aup = ginv * h * ginv;
  return (1.0 - F / H) * ginv - Aup / H;
}

inline std::array<double, 16> F_klpq_at(const mat2& ginv, const mat2& h, double H, double F) {
  const mat2 Aup = ginv * h * ginv;
  std::array<double, 16> out{};
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) {
          double v = -0.5 * (ginv(k, p) * ginv(l, q) + ginv(k, q) * ginv(l, p)) / H;
          v += (Aup(k, l) * ginv(p, q) + Aup(p, q) * ginv(k, l)) / (H * H);
          v += (-1.0 / H + 2.0 * F / (H * H)) * ginv(k, l) * ginv(p, q);
          out[FDerivatives::fid(k, l, p, q)] = v;
        }
  return out;
}

inline FDerivatives compute_F_derivatives(const ExtrinsicField& E, double filter_strength = 36.0) {
  const size_t n = E.size();
  FDerivatives D;
  D.F_up.resize(n);
  D.F2_up.resize(n);
  D.grad_F.resize(n);
  D.grad_H.resize(n);
  D.grad_Aring.resize(n);
  D.grad_Aring_norm.resize(n);
  D.grad_A_norm2.resize(n);
  D.grad_H_norm2.resize(n);
  D.w.resize(n);

  for (size_t k = 0; k < n; ++k) {
    D.F_up[k] = F_kl_at(E.ginv[k], E.h[k], E.H[k], E.F[k]);
    D.F2_up[k] = F_klpq_at(E.ginv[k], E.h[k], E.H[k], E.F[k]);
  }

  const auto dF = spectral_grad(E, E.F, filter_strength);
  const auto dH = spectral_grad(E, E.H, filter_strength);
  D.grad_h = covariant_derivative_sym2(E, E.h, filter_strength);

  for (size_t k = 0; k < n; ++k) {
    D.grad_F[k] = vec2(dF[0][k], dF[1][k]);
    D.grad_H[k] = vec2(dH[0][k], dH[1][k]);
    for (int kk = 0; kk < 2; ++kk)
      D.grad_Aring[k][kk] = D.grad_h[k][kk] - 0.5 * dH[kk == 0 ? 0 : 1][k] * E.g[k];

    const mat2& gi = E.ginv[k];
    double na = 0.0, nring = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int p = 0; p < 2; ++p)
              for (int q = 0; q < 2; ++q) {
                const double meas = gi(a, b) * gi(i, p) * gi(j, q);
                na += meas * D.grad_h[k][a](i, j) * D.grad_h[k][b](p, q);
                nring += meas * D.grad_Aring[k][a](i, j) * D.grad_Aring[k][b](p, q);
              }
    D.grad_A_norm2[k] = na;
    D.grad_Aring_norm[k] = std::sqrt(std::max(0.0, nring));
    D.grad_H_norm2[k] = D.grad_H[k].dot(gi * D.grad_H[k]);

    // w_i = Rbar_{3lil} = g^{lp} Rbar(nu, e_l, e_i, e_p)
    if (E.jets[k].depth >= JetDepth::curvature) {
      D.has_w = true;
      const auto& R = E.jets[k].riemann;
      const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
      for (int i = 0; i < 2; ++i) {
        double s = 0.0;
        for (int l = 0; l < 2; ++l)
          for (int p = 0; p < 2; ++p) {
            double rc = 0.0;
            for (int a = 0; a < 3; ++a)
              for (int b = 0; b < 3; ++b)
                for (int c = 0; c < 3; ++c)
                  for (int d = 0; d < 3; ++d)
                    rc += R[a][b][c][d] * E.nu[k][a] * (*ev[l])[b] * (*ev[i])[c] * (*ev[p])[d];
            s += gi(l, p) * rc;
          }
        D.w[k][i] = s;
      }
    }
  }
  return D;
}

// area-weighted mean of the harmonic mean curvature, f = int F dmu / |Sigma|
inline double mean_value_f(const ExtrinsicField& E, const RadialGraph& gr) {
  SphereField one(E.size(), 1.0);
  const double area = surface_integral(gr, one, E.area_density);
  return surface_integral(gr, E.F, E.area_density) / area;
}

inline double surface_area(const ExtrinsicField& E, const RadialGraph& gr) {
  SphereField one(E.size(), 1.0);
  return surface_integral(gr, one, E.area_density);
}

}  // namespace hmcf

#endif
