#ifndef HMCF_STABILITY_HPP
#define HMCF_STABILITY_HPP

#include <Eigen/Eigenvalues>

#include "hmcf/flow.hpp"

namespace hmcf {

// Dense assembly of the linearized harmonic-mean-curvature operator
//   L u  = -( Lop u + F^{ij} h_jk h_ik u - F^{ij} Rbar_{3i3j} u ),
//   L* u = L u - 2 F^{ij}_{,i} u_j - F^{ij}_{,ij} u,
//   S     = (L + L*) / 2,
// in spherical-harmonic coefficient space with the metric-weighted L^2 inner
// product. Lop u = F^{kl} u_{;kl}.
struct OperatorAssembly {
  ContextPtr ctx;
  double sigma_label = 0.0;
  double area = 0.0;

  SphereField potential;   // 2F^2 - F^{ij}Rbar_{3i3j} (via exact contractions)
  SphereField FR3;         // F^{ij} Rbar_{3i3j}
  SphereField divdivF;     // F^{ij}_{,ij}
  std::vector<vec2> divF;  // F^{ij}_{,i} (contravariant components)
  SphereField mu_w;        // area_density * quadrature weight

  Eigen::MatrixXd M;       // Gram matrix <Y_a, Y_b>_mu
  Eigen::MatrixXd opL, opLstar, opS;

  int n_modes() const { return int(M.rows()); }

  Eigen::VectorXd constant_coeffs() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n_modes());
    c[0] = 1.0;
    return c;
  }

  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return a.dot(M * b);
  }
};

inline OperatorAssembly assemble(const RadialGraph& gr, const MetricParams& params,
                                 double filter_strength = 36.0) {
  const ExtrinsicField E = compute_extrinsic(gr, params, JetDepth::curvature);
  const FDerivatives D = compute_F_derivatives(E, filter_strength);
  const auto& T = gr.sht();
  const auto& g = gr.grid();
  const size_t n = E.size();

  OperatorAssembly A;
  A.ctx = gr.ctx;
  A.sigma_label = gr.sigma_label;
  A.potential.resize(n);
  A.FR3.resize(n);
  A.divdivF.resize(n);
  A.divF.resize(n);
  A.mu_w.resize(n);

  for (size_t k = 0; k < n; ++k) {
    const mat2 hsq = E.h[k] * E.ginv[k] * E.h[k];
    const mat2 R3 = E.R3i3j(k);
    double Fh2 = 0.0, FR3 = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        Fh2 += D.F_up[k](a, b) * hsq(a, b);
        FR3 += D.F_up[k](a, b) * R3(a, b);
      }
    A.FR3[k] = FR3;
    A.potential[k] = Fh2 - FR3;
    A.mu_w[k] = E.area_density[k] * g.weight[k];

    // F^{ij}_{,i} from the closed form F^{ij} = (1 - F/H) g^{ij} - A^{ij}/H
    const double H = E.H[k], F = E.F[k];
    const vec2 dF = D.grad_F[k], dH = D.grad_H[k];
    for (int j = 0; j < 2; ++j) {
      double w = 0.0;
      for (int i = 0; i < 2; ++i) {
        w += E.ginv[k](i, j) * (F * dH[i] - H * dF[i]) / (H * H);
        // -(1/H) g^{ia} g^{jb} nabla_i h_ab
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            w -= E.ginv[k](i, a) * E.ginv[k](j, b) * D.grad_h[k][i](a, b) / H;
        // + A^{ij} dH_i / H^2
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            w += E.ginv[k](i, a) * E.ginv[k](j, b) * E.h[k](a, b) * dH[i] / (H * H);
      }
      A.divF[k][j] = w;
    }
  }
  A.area = surface_area(E, gr);

  // divdivF = nabla_j W^j with W = divF, through the one-form route
  {
    std::vector<vec2> Wform(n);
    for (size_t k = 0; k < n; ++k) Wform[k] = E.g[k] * A.divF[k];
    const auto gradW = covariant_derivative_one_form(E, Wform, filter_strength);
    for (size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) s += E.ginv[k](i, j) * gradW[k](i, j);
      A.divdivF[k] = s;
    }
  }

  // dense operators: nodal coefficients c0, ct, cp, ctt, ctp, cpp acting on
  // (u, u_t, u_p, u_tt, u_tp, u_pp)
  const Eigen::MatrixXd Y0 = T.synthesis_matrix(ShTransform::Deriv::none);
  const Eigen::MatrixXd Yt = T.synthesis_matrix(ShTransform::Deriv::d_theta);
  const Eigen::MatrixXd Yp = T.synthesis_matrix(ShTransform::Deriv::d_phi);
  const Eigen::MatrixXd Ytt = T.synthesis_matrix(ShTransform::Deriv::d_theta2);
  const Eigen::MatrixXd Ytp = T.synthesis_matrix(ShTransform::Deriv::d_theta_phi);
  const Eigen::MatrixXd Ypp = T.synthesis_matrix(ShTransform::Deriv::d_phi2);

  Eigen::VectorXd c0(n), ct(n), cp(n), ctt(n), ctp(n), cpp(n);
  Eigen::VectorXd st_ct(n), st_cp(n), st_c0(n);  // L* extras
  for (size_t k = 0; k < n; ++k) {
    const mat2& Fk = D.F_up[k];
    // Lop u = F^{kl}(d2 u - Gamma^m_{kl} d_m u)
    ctt[k] = Fk(0, 0);
    ctp[k] = 2.0 * Fk(0, 1);
    cpp[k] = Fk(1, 1);
    double gt = 0.0, gp = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        gt += Fk(a, b) * E.surf_gamma[k][0](a, b);
        gp += Fk(a, b) * E.surf_gamma[k][1](a, b);
      }
    ct[k] = -gt;
    cp[k] = -gp;
    c0[k] = A.potential[k];
    // L = -(Lop + potential); L* = L - 2 W^j d_j - divdivF
    st_ct[k] = -2.0 * A.divF[k][0];
    st_cp[k] = -2.0 * A.divF[k][1];
    st_c0[k] = -A.divdivF[k];
  }

  const Eigen::VectorXd wq = Eigen::Map<const Eigen::VectorXd>(g.weight.data(), n);
  const Eigen::VectorXd muw = Eigen::Map<const Eigen::VectorXd>(A.mu_w.data(), n);

  Eigen::MatrixXd Bl = ctt.asDiagonal() * Ytt;
  Bl += ctp.asDiagonal() * Ytp;
  Bl += cpp.asDiagonal() * Ypp;
  Bl += ct.asDiagonal() * Yt;
  Bl += cp.asDiagonal() * Yp;
  Bl += c0.asDiagonal() * Y0;
  Bl = -Bl;  // L = -(Lop + potential)

  Eigen::MatrixXd Bstar = Bl;
  Bstar += st_ct.asDiagonal() * Yt;
  Bstar += st_cp.asDiagonal() * Yp;
  Bstar += st_c0.asDiagonal() * Y0;

  const Eigen::MatrixXd At = Y0.transpose() * wq.asDiagonal();  // analysis
  A.M = Y0.transpose() * muw.asDiagonal() * Y0;
  A.M = 0.5 * (A.M + A.M.transpose()).eval();
  A.opL = At * Bl;
  A.opLstar = At * Bstar;
  A.opS = 0.5 * (A.opL + A.opLstar);
  return A;
}

// nodal application of an assembled operator to a coefficient vector
inline SphereField apply_operator(const OperatorAssembly& A, const Eigen::MatrixXd& op,
                                  const Eigen::VectorXd& u) {
  const Eigen::VectorXd v = op * u;
  std::vector<double> coeffs(v.data(), v.data() + v.size());
  return A.ctx->sht.synthesize(coeffs);
}

struct SpectrumResult {
  std::vector<double> eigenvalues;            // ascending
  std::vector<Eigen::VectorXd> eigenvectors;  // coefficient space
};

// k lowest eigenvalues of S in the metric-weighted L^2 space; if constrained,
// the constant direction is deflated (projector applied symmetrically) so the
// spectrum is that of PSP on mean-zero fields.
inline SpectrumResult low_spectrum(const OperatorAssembly& A, bool constrained, int k_count) {
  const int N = A.n_modes();
  Eigen::MatrixXd K = 0.5 * (A.M * A.opS + A.opS.transpose() * A.M);

  if (constrained) {
    const Eigen::VectorXd c = A.constant_coeffs();
    const Eigen::VectorXd Mc = A.M * c;
    const double cMc = c.dot(Mc);
    const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(N, N) - (c * Mc.transpose()) / cMc;
    K = (P.transpose() * K * P).eval();
    // push the deflated constant far up so it cannot shadow the low spectrum
    const double shift = 1e3 * (K.cwiseAbs().maxCoeff() / A.M.norm() + 1.0);
    K += shift * (Mc * Mc.transpose()) / cMc;
    K = 0.5 * (K + K.transpose()).eval();
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(K, A.M);
  if (es.info() != Eigen::Success) throw validity_error("low_spectrum: eigensolver failed");
  SpectrumResult out;
  for (int i = 0; i < std::min(k_count, N); ++i) {
    out.eigenvalues.push_back(es.eigenvalues()[i]);
    out.eigenvectors.push_back(es.eigenvectors().col(i));
  }
  return out;
}

// max relative asymmetry of S and adjoint mismatch of (L, L*) on random
// band-limited pairs; both should sit at the discretization floor
struct AdjointCheck {
  double s_symmetry = 0.0;
  double adjoint_mismatch = 0.0;
};

inline AdjointCheck adjoint_identity_check(const OperatorAssembly& A, int trials, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const int N = A.n_modes();
  const int lmax = A.ctx->grid.L / 3;  // band-limited test fields
  AdjointCheck out;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(N), v = Eigen::VectorXd::Zero(N);
    for (int l = 0; l <= lmax; ++l)
      for (int m = -l; m <= l; ++m) {
        u[ShTransform::idx(l, m)] = nd(rng);
        v[ShTransform::idx(l, m)] = nd(rng);
      }
    const double uSv = u.dot(A.M * (A.opS * v));
    const double vSu = v.dot(A.M * (A.opS * u));
    const double uLv = u.dot(A.M * (A.opL * v));
    const double vLsu = v.dot(A.M * (A.opLstar * u));
    const double scale = std::abs(uSv) + std::abs(vSu) + 1e-300;
    out.s_symmetry = std::max(out.s_symmetry, std::abs(uSv - vSu) / scale);
    out.adjoint_mismatch = std::max(out.adjoint_mismatch, std::abs(uLv - vLsu) / scale);
  }
  return out;
}

// int F^{ij} u_i u_j dmu / int u^2 dmu for a coefficient vector
inline double quadratic_form_ratio(const OperatorAssembly& A, const RadialGraph& gr,
                                   const MetricParams& params, const Eigen::VectorXd& u) {
  const ExtrinsicField E = compute_extrinsic(gr, params, JetDepth::connection);
  const FDerivatives D = compute_F_derivatives(E);
  std::vector<double> coeffs(u.data(), u.data() + u.size());
  const auto jet = field_jet(gr.sht(), coeffs);
  double num = 0.0, den = 0.0;
  for (size_t k = 0; k < E.size(); ++k) {
    const vec2 du(jet.ft[k], jet.fp[k]);
    num += du.dot(D.F_up[k] * du) * A.mu_w[k];
    den += sqr(jet.f[k]) * A.mu_w[k];
  }
  return num / den;
}

// finite-difference first variation of F under normal perturbations vs the
// assembled linearization: residual(eps) = || [F(phi + eps u nu) - F(phi)]/eps
// - L u ||_mu / ||L u||_mu, expected first order in eps
struct FirstVariationReport {
  std::vector<double> eps;
  std::vector<double> residual;
  double observed_order = 0.0;
};

inline FirstVariationReport first_variation_check(const RadialGraph& gr, const MetricParams& params,
                                                  const Eigen::VectorXd& u_coeffs,
                                                  std::vector<double> eps_list) {
  const OperatorAssembly A = assemble(gr, params);
  const ExtrinsicField E0 = compute_extrinsic(gr, params, JetDepth::connection);
  const SphereField Lu = apply_operator(A, A.opL, u_coeffs);
  std::vector<double> uc(u_coeffs.data(), u_coeffs.data() + u_coeffs.size());
  const SphereField u = gr.sht().synthesize(uc);

  double Lu_norm = 0.0;
  for (size_t k = 0; k < Lu.size(); ++k) Lu_norm += sqr(Lu[k]) * A.mu_w[k];
  Lu_norm = std::sqrt(Lu_norm);

  FirstVariationReport rep;
  for (double eps : eps_list) {
    for (;;) {
      try {
        std::vector<vec3> pts(E0.size());
        for (size_t k = 0; k < pts.size(); ++k)
          pts[k] = gr.rho[k] * gr.grid().nhat[k] + eps * u[k] * E0.nu[k];
        const SurfaceChart ch = chart_from_points(gr.ctx, pts);
        const ExtrinsicField Ee = compute_extrinsic(ch, params, gr.sigma_label, JetDepth::connection);
        double num = 0.0;
        for (size_t k = 0; k < Lu.size(); ++k)
          num += sqr((Ee.F[k] - E0.F[k]) / eps - Lu[k]) * A.mu_w[k];
        rep.eps.push_back(eps);
        rep.residual.push_back(std::sqrt(num) / Lu_norm);
        break;
      } catch (const geometry_error&) {
        eps *= 0.5;  // perturbation too large for this surface, retry smaller
      }
    }
  }
  if (rep.residual.size() >= 2) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < rep.residual.size(); ++i)
      acc += std::log2(rep.residual[i] / rep.residual[i + 1]) /
             std::log2(rep.eps[i] / rep.eps[i + 1]);
    rep.observed_order = acc / (rep.residual.size() - 1);
  }
  return rep;
}

// structure of the lowest unconstrained eigenfield: ||h0 - mean||_{L2} scaled
// by |mean| sqrt(|Sigma|); the paper's expansion gives an O(sigma^-2) ratio
struct EigenfunctionStructure {
  double ratio = 0.0;
  double mean = 0.0;
  bool mean_nonzero = false;
};

inline EigenfunctionStructure eigenfunction_structure_check(const OperatorAssembly& A,
                                                            const Eigen::VectorXd& h0) {
  const Eigen::VectorXd c = A.constant_coeffs();
  const double area = A.inner(c, c);
  const double mean = A.inner(h0, c) / area;
  Eigen::VectorXd dev = h0 - mean * c;
  EigenfunctionStructure out;
  out.mean = mean;
  out.ratio = std::sqrt(std::max(0.0, A.inner(dev, dev))) / (std::abs(mean) * std::sqrt(area) + 1e-300);
  out.mean_nonzero = std::abs(mean) * std::sqrt(area) >
                     1e-8 * std::sqrt(std::max(0.0, A.inner(h0, h0)));
  return out;
}

}  // namespace hmcf

#endif
