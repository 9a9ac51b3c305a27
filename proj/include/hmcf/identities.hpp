#ifndef HMCF_IDENTITIES_HPP
#define HMCF_IDENTITIES_HPP

#include "hmcf/extrinsic.hpp"

namespace hmcf {

// Residual diagnostics coupling ambient curvature, its derivative and the
// surface derivatives of the second fundamental form. All residuals are
// g-invariant tensor norms, reported nodewise with max over the surface.

namespace detail {

// ambient covariant derivative of the Riemann tensor along direction `dir`,
// assembled from the covariant Ricci derivative through the 3D reconstruction
inline ten4full nabla_riemann(const MetricJet& J, const vec3& dir) {
  // covariant derivative of Ricci along dir: CR_ab = dir^e (d_e Ric_ab - corrections)
  mat3 CR = mat3::Zero();
  double CS = 0.0;
  for (int e = 0; e < 3; ++e) {
    CR += dir[e] * J.dricci[e];
    CS += dir[e] * J.dscalar[e];
  }
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double corr = 0.0;
      for (int mu = 0; mu < 3; ++mu)
        for (int e = 0; e < 3; ++e)
          corr += dir[e] * (J.gamma[mu](e, a) * J.ricci(mu, b) + J.gamma[mu](e, b) * J.ricci(a, mu));
      CR(a, b) -= corr;
    }
  // gbar is parallel, so differentiating the reconstruction only hits Ric and R
  ten4full D{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          D[a][b][c][d] = CR(a, d) * J.g(b, c) - CR(a, c) * J.g(b, d) - CR(b, d) * J.g(a, c) +
                          CR(b, c) * J.g(a, d) +
                          0.5 * CS * (J.g(a, c) * J.g(b, d) - J.g(a, d) * J.g(b, c));
  return D;
}

inline double contract4(const ten4full& R, const vec3& a, const vec3& b, const vec3& c, const vec3& d) {
  double s = 0.0;
  for (int p = 0; p < 3; ++p) {
    if (a[p] == 0.0) continue;
    for (int q = 0; q < 3; ++q) {
      if (b[q] == 0.0) continue;
      for (int r = 0; r < 3; ++r)
        for (int t = 0; t < 3; ++t) s += R[p][q][r][t] * a[p] * b[q] * c[r] * d[t];
    }
  }
  return s;
}

inline double tensor2_norm(const mat2& T, const mat2& ginv) {
  double s = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) s += ginv(i, p) * ginv(j, q) * T(i, j) * T(p, q);
  return std::sqrt(std::max(0.0, s));
}

}  // namespace detail

// Simons-type identity for the harmonic mean curvature: nodewise norm of
//   F^{kl} h_{ij;kl} - [ nabla_i nabla_j F + F^{kl}h_{im}h_{mj}h_{kl}
//     - F^{kl}h_{mk}h_{ml} h_ij - F h_ij ... curvature and gradient terms ]
// returning the max over nodes (and optionally the field).
inline double simons_residual(const ExtrinsicField& E, const FDerivatives& D,
                              SphereField* field_out = nullptr) {
  const size_t n = E.size();
  if (n > 0 && E.jets[0].depth < JetDepth::curvature_derivative)
    throw usage_error("simons_residual: needs curvature-derivative jets");
  const auto hessF = covariant_hessian(E, E.F);
  const auto hess_h = covariant_derivative_rank3(E, D.grad_h);

  SphereField res(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const mat2 &gi = E.ginv[k], &h = E.h[k];
    const mat2 mix = h * gi;  // h_i^m = h_{in} g^{nm}
    const mat2 hsq = h * gi * h;
    const double F = E.F[k];
    const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
    const vec3& nu = E.nu[k];
    const auto& R = E.jets[k].riemann;

    // lhs: F^{kl} h_{ij;kl}
    mat2 lhs = mat2::Zero();
    for (int kk = 0; kk < 2; ++kk)
      for (int ll = 0; ll < 2; ++ll)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) lhs(i, j) += D.F_up[k](kk, ll) * hess_h[k][ll][kk](i, j);

    const mat2 R3 = E.R3i3j(k);
    double FR3 = 0.0, Fh2 = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        FR3 += D.F_up[k](a, b) * R3(a, b);
        Fh2 += D.F_up[k](a, b) * hsq(a, b);
      }

    // surface-projected ambient curvature Rbar(e_a, e_b, e_c, e_d), plus the
    // mixed-slot pieces with one normal leg
    double Rs[2][2][2][2];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d)
            Rs[a][b][c][d] = detail::contract4(R, *ev[a], *ev[b], *ev[c], *ev[d]);

    mat2 rhs = hessF[k];
    rhs += F * hsq;                       // F^{kl}h_{kl} (h^2)_ij
    rhs -= Fh2 * h;                       // - F^{kl}(h^2)_{kl} h_ij  (= 2F^2 h_ij)
    rhs -= F * R3;                        // - F^{kl}h_{kl} Rbar_{3i3j}
    rhs += FR3 * h;                       // + h_ij F^{kl} Rbar_{3k3l}
    const ten4full DR[2] = {detail::nabla_riemann(E.jets[k], *ev[0]),
                            detail::nabla_riemann(E.jets[k], *ev[1])};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double t6 = 0.0, t7 = 0.0, t8 = 0.0;
        for (int kk = 0; kk < 2; ++kk)
          for (int ll = 0; ll < 2; ++ll) {
            const double Fkl = D.F_up[k](kk, ll);
            if (Fkl != 0.0) {
              double s = 0.0;
              for (int m = 0; m < 2; ++m)
                s += mix(j, m) * Rs[m][kk][ll][i] + mix(i, m) * Rs[m][kk][ll][j] -
                     2.0 * mix(kk, m) * Rs[m][j][i][ll];
              t6 += Fkl * s;
              t7 += Fkl * (detail::contract4(DR[ll], nu, *ev[j], *ev[kk], *ev[i]) +
                           detail::contract4(DR[i], nu, *ev[kk], *ev[ll], *ev[j]));
            }
            for (int p = 0; p < 2; ++p)
              for (int q = 0; q < 2; ++q)
                t8 += D.F2_up[k][FDerivatives::fid(kk, ll, p, q)] * D.grad_h[k][i](p, q) *
                      D.grad_h[k][j](kk, ll);
          }
        rhs(i, j) += t6 + t7 - t8;
      }
    res[k] = detail::tensor2_norm(lhs - rhs, gi);
  }
  if (field_out) *field_out = res;
  return *std::max_element(res.begin(), res.end());
}

// Codazzi residual: nabla_k h_ij - nabla_j h_ik + Rbar_{3ijk}, max norm
inline double codazzi_residual(const ExtrinsicField& E, const FDerivatives& D,
                               SphereField* field_out = nullptr) {
  const size_t n = E.size();
  SphereField res(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const vec3* ev[2] = {&E.e1[k], &E.e2[k]};
    const auto& R = E.jets[k].riemann;
    const mat2& gi = E.ginv[k];
    double C[2][2][2];
    for (int kk = 0; kk < 2; ++kk)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          C[kk][i][j] = D.grad_h[k][kk](i, j) - D.grad_h[k][j](i, kk) +
                        detail::contract4(R, E.nu[k], *ev[i], *ev[j], *ev[kk]);
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int a2 = 0; a2 < 2; ++a2)
            for (int b2 = 0; b2 < 2; ++b2)
              for (int c2 = 0; c2 < 2; ++c2)
                s += gi(a, a2) * gi(b, b2) * gi(c, c2) * C[a][b][c] * C[a2][b2][c2];
    res[k] = std::sqrt(std::max(0.0, s));
  }
  if (field_out) *field_out = res;
  return *std::max_element(res.begin(), res.end());
}

// Gauss residual: intrinsic curvature of the induced metric (via the
// commutator of discrete covariant derivatives on closed one-forms) vs the
// ambient sectional curvature plus lambda1 lambda2.
inline double gauss_residual(const ExtrinsicField& E, SphereField* field_out = nullptr,
                             SphereField* K_out = nullptr) {
  const size_t n = E.size();

  // closed test one-forms: differentials of the coordinate restrictions X^c
  std::vector<std::vector<std::array<mat2, 2>>> grads(3);
  for (int c = 0; c < 3; ++c) {
    SphereField u(n);
    for (size_t k = 0; k < n; ++k) u[k] = E.jets[k].point[c];
    const auto P = covariant_hessian(E, u);
    grads[c] = covariant_derivative_sym2(E, P);
  }

  SphereField res(n, 0.0), Kfield(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    // least-squares K from [nabla_0, nabla_1] omega_j = K (g_{0j} w_1 - g_{1j} w_0)
    double num = 0.0, den = 0.0;
    for (int c = 0; c < 3; ++c) {
      // omega = du: components are the coordinate derivatives of u
      // recover from the hessian input path: omega_i = d_i u; we can get them
      // from the chart tangents: d_i X^c = (e_i)^c
      const double w0 = E.e1[k][c], w1 = E.e2[k][c];
      for (int j = 0; j < 2; ++j) {
        const double C = grads[c][k][0](1, j) - grads[c][k][1](0, j);
        const double M = E.g[k](0, j) * w1 - E.g[k](1, j) * w0;
        num += C * M;
        den += M * M;
      }
    }
    const double K_int = den > 0.0 ? num / den : 0.0;
    Kfield[k] = K_int;

    const double detg = E.g[k].determinant();
    const double Ksec =
        detail::contract4(E.jets[k].riemann, E.e1[k], E.e2[k], E.e2[k], E.e1[k]) / detg;
    const double l1l2 = E.lambda[k][0] * E.lambda[k][1];
    res[k] = std::abs(K_int - (Ksec + l1l2));
  }
  if (field_out) *field_out = res;
  if (K_out) *K_out = Kfield;
  return *std::max_element(res.begin(), res.end());
}

// Kato-type inequality |nabla^k A|^2 >= (3/4 - eta)|nabla^k H|^2
//                                     - (1/4 eta^{-1} - 1)|nabla^{k-1} w|^2
struct KatoReport {
  bool ok = true;
  double worst_margin = 0.0;   // most negative margin found (0 if none)
  size_t worst_node = 0;
  double eta = 0.0;
  int order = 1;
};

inline std::vector<KatoReport> kato_inequality_check(const ExtrinsicField& E, const FDerivatives& D,
                                                     const std::vector<double>& etas = {0.1, 0.25, 0.5}) {
  const size_t n = E.size();
  if (!D.has_w) throw usage_error("kato_inequality_check: needs curvature jets (w projection)");

  // order 1 ingredients are in D; order 2 needs second derivatives
  const auto hess_h = covariant_derivative_rank3(E, D.grad_h);
  const auto hessH = covariant_hessian(E, E.H);
  const auto grad_w = covariant_derivative_one_form(E, D.w);

  SphereField n2A(n, 0.0), n2H(n, 0.0), nw(n, 0.0), w2(n, 0.0);
  for (size_t k = 0; k < n; ++k) {
    const mat2& gi = E.ginv[k];
    double a2 = 0.0;
    for (int l = 0; l < 2; ++l)
      for (int kk = 0; kk < 2; ++kk)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int l2 = 0; l2 < 2; ++l2)
              for (int kk2 = 0; kk2 < 2; ++kk2)
                for (int i2 = 0; i2 < 2; ++i2)
                  for (int j2 = 0; j2 < 2; ++j2)
                    a2 += gi(l, l2) * gi(kk, kk2) * gi(i, i2) * gi(j, j2) *
                          hess_h[k][l][kk](i, j) * hess_h[k][l2][kk2](i2, j2);
    n2A[k] = a2;
    n2H[k] = detail::tensor2_norm(hessH[k], gi);
    n2H[k] *= n2H[k];
    nw[k] = detail::tensor2_norm(grad_w[k], gi);
    nw[k] *= nw[k];
    w2[k] = D.w[k].dot(gi * D.w[k]);
  }

  std::vector<KatoReport> out;
  for (double eta : etas) {
    for (int order = 1; order <= 2; ++order) {
      KatoReport rep;
      rep.eta = eta;
      rep.order = order;
      for (size_t k = 0; k < n; ++k) {
        const double lhs = (order == 1) ? D.grad_A_norm2[k] : n2A[k];
        const double rhsH = (order == 1) ? D.grad_H_norm2[k] : n2H[k];
        const double rhsW = (order == 1) ? w2[k] : nw[k];
        // absolute floor at the curvature scale: on exactly round data all
        // three terms are pure roundoff and a relative margin is noise
        const double floor = 1e-14 * sqr(sqr(E.H[k]));
        const double combo = lhs - (0.75 - eta) * rhsH + (0.25 / eta - 1.0) * rhsW;
        const double tol = 1e-6 * (lhs + rhsH + rhsW) + floor;
        const double margin = combo / (lhs + rhsH + rhsW + floor);
        if (combo < -tol && margin < rep.worst_margin) {
          rep.ok = false;
          rep.worst_margin = margin;
          rep.worst_node = k;
        }
      }
      out.push_back(rep);
    }
  }
  return out;
}

}  // namespace hmcf

#endif
