#ifndef HMCF_METRIC_HPP
#define HMCF_METRIC_HPP

#include <functional>
#include <optional>
#include <random>

#include "hmcf/core.hpp"
#include "hmcf/jets.hpp"

namespace hmcf {

// ambient rank-4 tensor with all indices down
using ten4full = std::array<std::array<std::array<std::array<double, 3>, 3>, 3>, 3>;

// User-supplied decaying perturbation P_{ab}(x). Derivatives may be supplied
// analytically; otherwise they are approximated by fourth-order central
// differences with step 1e-4*r.
struct CustomPerturbation {
  std::function<mat3(const vec3&)> P;
  std::function<ten3(const vec3&)> dP;    // optional, dP[c](a,b) = d_c P_ab
  std::function<ten4(const vec3&)> ddP;   // optional
  std::array<double, 6> bounds{};         // C_1..C_6 in |d^l P| <= C_{l+1} r^{-l-2}
};

struct MetricParams {
  enum class Perturbation { none, conformal_dipole, custom_decaying };

  double mass = 0.0;
  Perturbation kind = Perturbation::none;
  vec3 dipole = vec3::Zero();   // B, length^2 units
  std::optional<CustomPerturbation> custom;
  double C0 = 1.0;              // aggregate bound constant, >= max(1, m)
  vec3 offset = vec3::Zero();   // coordinate translation: g(x) = g0(x - offset)

  static MetricParams flat() { return MetricParams{}; }
  static MetricParams schwarzschild(double m) {
    MetricParams p;
    p.mass = m;
    p.C0 = std::max(1.0, m);
    return p;
  }
  static MetricParams conformal_dipole(double m, const vec3& B) {
    MetricParams p;
    p.mass = m;
    p.kind = Perturbation::conformal_dipole;
    p.dipole = B;
    p.C0 = std::max({1.0, m, B.norm()});
    return p;
  }
};

// how much of the jet a consumer needs; connection level is enough for the
// flow right-hand side and is several times cheaper than full curvature
enum class JetDepth { connection, curvature, curvature_derivative };

struct MetricJet {
  JetDepth depth = JetDepth::curvature_derivative;
  vec3 point = vec3::Zero();
  mat3 g = mat3::Identity();
  mat3 ginv = mat3::Identity();
  ten3 dg{};        // dg[c](a,b) = d_c g_ab
  ten4 ddg{};       // ddg[c][d](a,b)
  ten3 gamma{};     // gamma[c](a,b) = Gamma^c_ab
  ten4 dgamma{};    // dgamma[e][c](a,b) = d_e Gamma^c_ab
  ten4full riemann{};  // paper convention: R(e_a,e_b,e_c,e_d)
  mat3 ricci = mat3::Zero();
  double scalar = 0.0;
  ten3 dricci{};    // dricci[c](a,b) = d_c Ric_ab
  vec3 dscalar = vec3::Zero();
  bool dricci_analytic = true;

  double sqrt_det_g() const { return std::sqrt(g.determinant()); }
};

namespace detail {

// conformal factor psi(x) = 1 + m/(2r) [+ B.x / r^3], as a third-order jet
inline Jet3 conformal_factor_jet(const MetricParams& p, const vec3& y) {
  const Jet3 r = radius_jet(y);
  Jet3 psi = Jet3::constant(1.0) + (0.5 * p.mass) * inv(r);
  if (p.kind == MetricParams::Perturbation::conformal_dipole) {
    Jet3 bx(0.0);
    for (int a = 0; a < 3; ++a) bx = bx + p.dipole[a] * Jet3::coordinate(y, a);
    psi = psi + bx * pow(r, -3.0);
  }
  return psi;
}

inline void custom_P_fd(const CustomPerturbation& c, const vec3& y, ten3& dP, ten4& ddP) {
  const double h = 1e-4 * y.norm();
  auto sample = [&](int axis, int k) {
    vec3 q = y;
    q[axis] += k * h;
    return c.P(q);
  };
  // 4th-order central first derivatives
  for (int a = 0; a < 3; ++a)
    dP[a] = (8.0 * (sample(a, 1) - sample(a, -1)) - (sample(a, 2) - sample(a, -2))) / (12.0 * h);
  // second derivatives: 4th-order diagonal, cross terms from first-derivative stencil
  for (int a = 0; a < 3; ++a) {
    const mat3 P0 = c.P(y);
    ddP[a][a] = (-(sample(a, 2) + sample(a, -2)) + 16.0 * (sample(a, 1) + sample(a, -1)) - 30.0 * P0) /
                (12.0 * h * h);
    for (int b = a + 1; b < 3; ++b) {
      auto s2 = [&](int ka, int kb) {
        vec3 q = y;
        q[a] += ka * h;
        q[b] += kb * h;
        return c.P(q);
      };
      const mat3 cross = (s2(1, 1) - s2(1, -1) - s2(-1, 1) + s2(-1, -1)) / (4.0 * h * h);
      ddP[a][b] = cross;
      ddP[b][a] = cross;
    }
  }
}

}  // namespace detail

namespace detail {
inline MetricJet eval_jet_impl(const MetricParams& params, const vec3& point, JetDepth depth);
}

// Evaluates the metric, connection and curvature at a point. Curvature sign
// convention: R(e_a,e_b,e_c,e_d) = <R(e_a,e_b)e_c, e_d> with
// R(X,Y) = \nabla_X \nabla_Y - \nabla_Y \nabla_X - \nabla_{[X,Y]}, so round
// spheres have positive sectional curvature R_1221 and the Gauss equation
// reads R_ijkl = Rbar_ijkl + h_il h_jk - h_ik h_jl.
inline MetricJet eval_jet(const MetricParams& params, const vec3& point,
                          JetDepth depth = JetDepth::curvature_derivative) {
  return detail::eval_jet_impl(params, point, depth);
}

namespace detail {

// closed-form psi, d psi, dd psi for the conformal families (hot path for the
// flow right-hand side; equals the jet evaluation to roundoff)
inline void conformal_factor_closed(const MetricParams& p, const vec3& y, double& psi, vec3& dpsi,
                                    mat3& ddpsi) {
  const double r2 = y.squaredNorm();
  const double r = std::sqrt(r2);
  const double r3 = r * r2, r5 = r3 * r2, r7 = r5 * r2;
  psi = 1.0 + 0.5 * p.mass / r;
  dpsi = (-0.5 * p.mass / r3) * y;
  ddpsi = (-0.5 * p.mass) * (mat3::Identity() / r3 - 3.0 / r5 * y * y.transpose());
  if (p.kind == MetricParams::Perturbation::conformal_dipole) {
    const double by = p.dipole.dot(y);
    psi += by / r3;
    dpsi += p.dipole / r3 - (3.0 * by / r5) * y;
    ddpsi += -3.0 / r5 *
                 (p.dipole * y.transpose() + y * p.dipole.transpose() + by * mat3::Identity()) +
             (15.0 * by / r7) * y * y.transpose();
  }
}

// metric, inverse, connection only — no curvature, no jets
inline MetricJet eval_jet_connection_fast(const MetricParams& params, const vec3& point) {
  const vec3 y = point - params.offset;
  const double r = y.norm();
  if (!(r > 1.0))
    throw domain_error("eval_jet: point inside the excluded unit ball (r = " + std::to_string(r) + ")");
  MetricJet J;
  J.depth = JetDepth::connection;
  J.point = point;

  double psi;
  vec3 dpsi;
  mat3 ddpsi;
  conformal_factor_closed(params, y, psi, dpsi, ddpsi);
  const double p2 = psi * psi, p3 = p2 * psi, p4 = p3 * psi;
  J.g = p4 * mat3::Identity();
  J.ginv = (1.0 / p4) * mat3::Identity();
  for (int c = 0; c < 3; ++c) J.dg[c] = 4.0 * p3 * dpsi[c] * mat3::Identity();
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d)
      J.ddg[c][d] = (12.0 * p2 * dpsi[c] * dpsi[d] + 4.0 * p3 * ddpsi(c, d)) * mat3::Identity();
  // conformal Christoffels: Gamma^c_ab = 2/psi (d_a psi delta_cb + d_b psi delta_ca
  //                                             - d_c psi delta_ab)
  const vec3 q = (2.0 / psi) * dpsi;
  for (int c = 0; c < 3; ++c)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        J.gamma[c](a, b) = q[a] * (c == b) + q[b] * (c == a) - q[c] * (a == b);
  return J;
}

inline MetricJet eval_jet_impl(const MetricParams& params, const vec3& point, JetDepth depth) {
  if (depth == JetDepth::connection && params.kind != MetricParams::Perturbation::custom_decaying)
    return eval_jet_connection_fast(params, point);
  const vec3 y = point - params.offset;
  const double r = y.norm();
  if (!(r > 1.0))
    throw domain_error("eval_jet: point inside the excluded unit ball (r = " + std::to_string(r) + ")");

  MetricJet J;
  J.depth = depth;
  J.point = point;

  // g_ab = psi^4 delta_ab + P_ab with jets to third order
  const Jet3 psi = detail::conformal_factor_jet(params, y);
  const Jet3 w = pow(psi, 4.0);

  std::array<std::array<Jet3, 3>, 3> gj;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) gj[a][b] = (a == b) ? w : Jet3(0.0);

  bool third_order_ok = true;
  if (params.kind == MetricParams::Perturbation::custom_decaying) {
    const auto& c = *params.custom;
    const mat3 P = c.P(y);
    ten3 dP{};
    ten4 ddP{};
    if (c.dP && c.ddP) {
      dP = c.dP(y);
      ddP = c.ddP(y);
    } else {
      detail::custom_P_fd(c, y, dP, ddP);
    }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        gj[a][b].v += P(a, b);
        for (int cix = 0; cix < 3; ++cix) {
          gj[a][b].d[cix] += dP[cix](a, b);
          for (int d = 0; d < 3; ++d) gj[a][b].dd[cix][d] += ddP[cix][d](a, b);
        }
      }
    third_order_ok = false;  // no analytic third derivatives of P
  }

  std::array<ten4, 3> dddg{};  // dddg[e][c][d](a,b) = d_e d_c d_d g_ab
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      J.g(a, b) = gj[a][b].v;
      for (int c = 0; c < 3; ++c) {
        J.dg[c](a, b) = gj[a][b].d[c];
        for (int d = 0; d < 3; ++d) {
          J.ddg[c][d](a, b) = gj[a][b].dd[c][d];
          for (int e = 0; e < 3; ++e) dddg[e][c][d](a, b) = gj[a][b].d3[e][c][d];
        }
      }
    }

  {
    Eigen::SelfAdjointEigenSolver<mat3> es(J.g);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw validity_error("eval_jet: metric is not positive definite at the probe point");
  }
  J.ginv = J.g.inverse();

  // inverse-metric derivatives: dG = -G dg G, ddG from differentiating again
  ten3 dG{};
  ten4 ddG{};
  for (int c = 0; c < 3; ++c) dG[c] = -J.ginv * J.dg[c] * J.ginv;
  if (depth >= JetDepth::curvature)
    for (int c = 0; c < 3; ++c)
      for (int d = 0; d < 3; ++d)
        ddG[c][d] = -(dG[d] * J.dg[c] * J.ginv + J.ginv * J.ddg[c][d] * J.ginv + J.ginv * J.dg[c] * dG[d]);

  // Christoffel symbols and their first two derivatives
  auto christoffel_core = [&](const mat3& Ginv, const ten3& dg_) {
    ten3 G{};
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double s = 0.0;
          for (int d = 0; d < 3; ++d)
            s += Ginv(c, d) * (dg_[a](d, b) + dg_[b](d, a) - dg_[d](a, b));
          G[c](a, b) = 0.5 * s;
        }
    return G;
  };
  J.gamma = christoffel_core(J.ginv, J.dg);
  if (depth == JetDepth::connection) return J;

  for (int e = 0; e < 3; ++e)
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          double s = 0.0;
          for (int d = 0; d < 3; ++d) {
            s += dG[e](c, d) * (J.dg[a](d, b) + J.dg[b](d, a) - J.dg[d](a, b));
            s += J.ginv(c, d) * (J.ddg[e][a](d, b) + J.ddg[e][b](d, a) - J.ddg[e][d](a, b));
          }
          J.dgamma[e][c](a, b) = 0.5 * s;
        }

  // ddgamma[f][e][c](a,b) = d_f d_e Gamma^c_ab, needed for d(Ricci)
  const bool want_dricci = depth >= JetDepth::curvature_derivative;
  std::array<ten4, 3> ddgamma{};
  if (third_order_ok && want_dricci) {
    for (int f = 0; f < 3; ++f)
      for (int e = 0; e < 3; ++e)
        for (int c = 0; c < 3; ++c)
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
              double s = 0.0;
              for (int d = 0; d < 3; ++d) {
                s += ddG[f][e](c, d) * (J.dg[a](d, b) + J.dg[b](d, a) - J.dg[d](a, b));
                s += dG[e](c, d) * (J.ddg[f][a](d, b) + J.ddg[f][b](d, a) - J.ddg[f][d](a, b));
                s += dG[f](c, d) * (J.ddg[e][a](d, b) + J.ddg[e][b](d, a) - J.ddg[e][d](a, b));
                s += J.ginv(c, d) * (dddg[f][e][a](d, b) + dddg[f][e][b](d, a) - dddg[f][e][d](a, b));
              }
              ddgamma[f][e][c](a, b) = 0.5 * s;
            }
  }

  // mixed Riemann R^p_{s m n} = d_m Gamma^p_ns - d_n Gamma^p_ms
  //                           + Gamma^p_ml Gamma^l_ns - Gamma^p_nl Gamma^l_ms
  auto riem_mixed = [&](int p, int s, int m, int n) {
    double v = J.dgamma[m][p](n, s) - J.dgamma[n][p](m, s);
    for (int l = 0; l < 3; ++l)
      v += J.gamma[p](m, l) * J.gamma[l](n, s) - J.gamma[p](n, l) * J.gamma[l](m, s);
    return v;
  };

  // paper-convention components: riemann(a,b,c,d) = g_{d p} R^p_{c a b}
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          double v = 0.0;
          for (int p = 0; p < 3; ++p) v += J.g(d, p) * riem_mixed(p, c, a, b);
          J.riemann[a][b][c][d] = v;
        }

  for (int s = 0; s < 3; ++s)
    for (int n = 0; n < 3; ++n) {
      double v = 0.0;
      for (int m = 0; m < 3; ++m) v += riem_mixed(m, s, m, n);
      J.ricci(s, n) = v;
    }
  J.ricci = 0.5 * (J.ricci + J.ricci.transpose()).eval();
  J.scalar = (J.ginv * J.ricci).trace();

  if (third_order_ok && want_dricci) {
    for (int e = 0; e < 3; ++e) {
      mat3 dR = mat3::Zero();
      for (int s = 0; s < 3; ++s)
        for (int n = 0; n < 3; ++n) {
          double v = 0.0;
          for (int m = 0; m < 3; ++m) {
            v += ddgamma[e][m][m](n, s) - ddgamma[e][n][m](m, s);
            for (int l = 0; l < 3; ++l) {
              v += J.dgamma[e][m](m, l) * J.gamma[l](n, s) + J.gamma[m](m, l) * J.dgamma[e][l](n, s);
              v -= J.dgamma[e][m](n, l) * J.gamma[l](m, s) + J.gamma[m](n, l) * J.dgamma[e][l](m, s);
            }
          }
          dR(s, n) = v;
        }
      J.dricci[e] = 0.5 * (dR + dR.transpose()).eval();
      J.dscalar[e] = (dG[e] * J.ricci).trace() + (J.ginv * J.dricci[e]).trace();
    }
    J.dricci_analytic = true;
  } else if (want_dricci) {
    // fall back to second-order central differences of the assembled Ricci
    const double h = 1e-4 * r;
    for (int e = 0; e < 3; ++e) {
      vec3 qp = point, qm = point;
      qp[e] += h;
      qm[e] -= h;
      const MetricJet jp = eval_jet_impl(params, qp, JetDepth::curvature);
      const MetricJet jm = eval_jet_impl(params, qm, JetDepth::curvature);
      J.dricci[e] = (jp.ricci - jm.ricci) / (2.0 * h);
      J.dscalar[e] = (jp.scalar - jm.scalar) / (2.0 * h);
    }
    J.dricci_analytic = false;
  } else {
    J.dricci_analytic = false;
  }

  return J;
}
}  // namespace detail

// metric components only, no derivatives (cheap path for volume quadrature)
inline mat3 eval_metric_only(const MetricParams& params, const vec3& point) {
  const vec3 y = point - params.offset;
  const double r = y.norm();
  if (!(r > 1.0)) throw domain_error("eval_metric_only: point inside the excluded unit ball");
  double psi = 1.0 + 0.5 * params.mass / r;
  if (params.kind == MetricParams::Perturbation::conformal_dipole)
    psi += params.dipole.dot(y) / (r * r * r);
  mat3 g = std::pow(psi, 4.0) * mat3::Identity();
  if (params.kind == MetricParams::Perturbation::custom_decaying) g += params.custom->P(y);
  return g;
}

// 3D reconstruction of the Riemann tensor from Ricci (exact in dimension 3):
// Rbar_abcd = Ric_ad g_bc - Ric_ac g_bd - Ric_bd g_ac + Ric_bc g_ad
//           + R/2 (g_ac g_bd - g_ad g_bc)
inline ten4full riemann_from_ricci(const MetricJet& J) {
  ten4full R{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d)
          R[a][b][c][d] = J.ricci(a, d) * J.g(b, c) - J.ricci(a, c) * J.g(b, d) -
                          J.ricci(b, d) * J.g(a, c) + J.ricci(b, c) * J.g(a, d) +
                          0.5 * J.scalar * (J.g(a, c) * J.g(b, d) - J.g(a, d) * J.g(b, c));
  return R;
}

inline double riemann_reconstruction_residual(const MetricJet& J) {
  const ten4full R = riemann_from_ricci(J);
  double num = 0.0, den = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          num = std::max(num, std::abs(R[a][b][c][d] - J.riemann[a][b][c][d]));
          den = std::max(den, std::abs(J.riemann[a][b][c][d]));
        }
  return num / (1.0 + den);
}

// antisymmetry, pair exchange and first Bianchi, worst absolute residual
inline double riemann_symmetry_residual(const MetricJet& J) {
  double worst = 0.0;
  const auto& R = J.riemann;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
          worst = std::max(worst, std::abs(R[a][b][c][d] + R[b][a][c][d]));
          worst = std::max(worst, std::abs(R[a][b][c][d] + R[a][b][d][c]));
          worst = std::max(worst, std::abs(R[a][b][c][d] - R[c][d][a][b]));
          worst = std::max(worst, std::abs(R[a][b][c][d] + R[b][c][a][d] + R[c][a][b][d]));
        }
  return worst;
}

// contracted second Bianchi identity: div Ric - dR/2 = 0
inline double bianchi_residual(const MetricJet& J) {
  vec3 res = vec3::Zero();
  for (int b = 0; b < 3; ++b) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c)
      for (int a = 0; a < 3; ++a) {
        double covd = J.dricci[c](a, b);
        for (int m = 0; m < 3; ++m)
          covd -= J.gamma[m](c, a) * J.ricci(m, b) + J.gamma[m](c, b) * J.ricci(a, m);
        s += J.ginv(c, a) * covd;
      }
    res[b] = s - 0.5 * J.dscalar[b];
  }
  return res.cwiseAbs().maxCoeff();
}

// g-invariant norm of the Ricci tensor
inline double ricci_norm(const MetricJet& J) {
  const mat3 up = J.ginv * J.ricci * J.ginv;  // indices raised
  double s = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) s += up(a, b) * J.ricci(a, b);
  return std::sqrt(std::max(0.0, s));
}

// Samples |d^l P| <= C_{l+1} r^{-l-2}, l <= 2, at randomized probe points.
// Orders beyond 2 are never consumed by the lab, so they are not sampled.
inline bool validate_custom_decay(const MetricParams& params, int n_probes, unsigned seed,
                                  std::string* report = nullptr) {
  if (params.kind != MetricParams::Perturbation::custom_decaying) return true;
  const auto& c = *params.custom;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(2.0, 200.0), us(-1.0, 1.0);
  bool ok = true;
  for (int k = 0; k < n_probes; ++k) {
    vec3 dir(us(rng), us(rng), us(rng));
    if (dir.norm() < 1e-3) dir = vec3(1, 0, 0);
    dir.normalize();
    const double r = ur(rng);
    const vec3 y = r * dir;
    ten3 dP{};
    ten4 ddP{};
    if (c.dP && c.ddP) {
      dP = c.dP(y);
      ddP = c.ddP(y);
    } else {
      detail::custom_P_fd(c, y, dP, ddP);
    }
    auto chk = [&](double v, int l) {
      const double bound = c.bounds[l] * std::pow(r, -double(l) - 2.0);
      if (std::abs(v) > bound * (1.0 + 1e-6)) {
        ok = false;
        if (report)
          *report += "decay bound violated at r=" + std::to_string(r) + " order " + std::to_string(l) + "\n";
      }
    };
    chk(c.P(y).cwiseAbs().maxCoeff(), 0);
    for (int a = 0; a < 3; ++a) chk(dP[a].cwiseAbs().maxCoeff(), 1);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) chk(ddP[a][b].cwiseAbs().maxCoeff(), 2);
  }
  return ok;
}

}  // namespace hmcf

#endif
