#ifndef HMCF_SHT_HPP
#define HMCF_SHT_HPP

#include "hmcf/grid.hpp"

namespace hmcf {

// Real spherical-harmonic transforms on a SphericalGrid.
//
// Basis: Y_{l,0} = lam_l^0(theta),  Y_{l,m>0} = sqrt(2) lam_l^m cos(m phi),
// Y_{l,-m} = sqrt(2) lam_l^m sin(m phi), with lam the fully normalized
// associated Legendre functions (no Condon-Shortley phase), so the basis is
// orthonormal in L^2(S^2). Coefficients are stored at idx(l,m) = l^2 + l + m.
class ShTransform {
 public:
  explicit ShTransform(const SphericalGrid& grid) : g_(grid), L_(grid.L) {
    build_tables();
  }

  int L() const { return L_; }
  int n_modes() const { return (L_ + 1) * (L_ + 1); }
  static int idx(int l, int m) { return l * l + l + m; }

  std::vector<double> analyze(const SphereField& f) const {
    const int nlat = g_.n_lat, nlon = g_.n_lon;
    // longitude sums: C[i][m], S[i][m] including the dphi measure
    std::vector<double> C(size_t(nlat) * (L_ + 1), 0.0), S(size_t(nlat) * (L_ + 1), 0.0);
    const double dphi = 2.0 * pi / nlon;
    for (int i = 0; i < nlat; ++i)
      for (int j = 0; j < nlon; ++j) {
        const double v = f[g_.id(i, j)] * dphi;
        for (int m = 0; m <= L_; ++m) {
          C[i * (L_ + 1) + m] += v * cosmphi_[j * (L_ + 1) + m];
          S[i * (L_ + 1) + m] += v * sinmphi_[j * (L_ + 1) + m];
        }
      }
    std::vector<double> a(n_modes(), 0.0);
    for (int m = 0; m <= L_; ++m) {
      const double norm = (m == 0) ? 1.0 : std::sqrt(2.0);
      for (int l = m; l <= L_; ++l) {
        double ac = 0.0, as = 0.0;
        for (int i = 0; i < nlat; ++i) {
          const double lw = lam_[tab(i, l, m)] * g_.wgl[i];
          ac += lw * C[i * (L_ + 1) + m];
          if (m > 0) as += lw * S[i * (L_ + 1) + m];
        }
        a[idx(l, m)] = norm * ac;
        if (m > 0) a[idx(l, -m)] = norm * as;
      }
    }
    return a;
  }

  enum class Deriv { none, d_theta, d_phi, d_theta2, d_theta_phi, d_phi2 };

  SphereField synthesize(const std::vector<double>& a, Deriv d = Deriv::none) const {
    const int nlat = g_.n_lat, nlon = g_.n_lon;
    const std::vector<double>& tblA = (d == Deriv::d_theta || d == Deriv::d_theta_phi) ? dlam_
                                      : (d == Deriv::d_theta2)                         ? ddlam_
                                                                                       : lam_;
    const bool phi_once = (d == Deriv::d_phi || d == Deriv::d_theta_phi);
    const bool phi_twice = (d == Deriv::d_phi2);

    std::vector<double> Gc(size_t(nlat) * (L_ + 1), 0.0), Gs(size_t(nlat) * (L_ + 1), 0.0);
    for (int m = 0; m <= L_; ++m) {
      const double norm = (m == 0) ? 1.0 : std::sqrt(2.0);
      for (int l = m; l <= L_; ++l) {
        const double ac = norm * a[idx(l, m)];
        const double as = (m > 0) ? norm * a[idx(l, -m)] : 0.0;
        if (ac == 0.0 && as == 0.0) continue;
        for (int i = 0; i < nlat; ++i) {
          const double lv = tblA[tab(i, l, m)];
          Gc[i * (L_ + 1) + m] += lv * ac;
          if (m > 0) Gs[i * (L_ + 1) + m] += lv * as;
        }
      }
    }
    SphereField f(g_.size(), 0.0);
    for (int i = 0; i < nlat; ++i)
      for (int j = 0; j < nlon; ++j) {
        double v = 0.0;
        for (int m = 0; m <= L_; ++m) {
          const double gc = Gc[i * (L_ + 1) + m], gs = Gs[i * (L_ + 1) + m];
          const double cm = cosmphi_[j * (L_ + 1) + m], sm = sinmphi_[j * (L_ + 1) + m];
          if (phi_once)
            v += m * (-gc * sm + gs * cm);
          else if (phi_twice)
            v += -double(m) * m * (gc * cm + gs * sm);
          else
            v += gc * cm + gs * sm;
        }
        f[g_.id(i, j)] = v;
      }
    return f;
  }

  // dense node x mode synthesis matrix for a derivative flavor (direct basis
  // evaluation; used by the dense operator assembly in the stability module)
  Eigen::MatrixXd synthesis_matrix(Deriv d = Deriv::none) const {
    const int nlat = g_.n_lat, nlon = g_.n_lon;
    Eigen::MatrixXd Y(size_t(nlat) * nlon, n_modes());
    const std::vector<double>& tblA = (d == Deriv::d_theta || d == Deriv::d_theta_phi) ? dlam_
                                      : (d == Deriv::d_theta2)                         ? ddlam_
                                                                                       : lam_;
    const bool phi_once = (d == Deriv::d_phi || d == Deriv::d_theta_phi);
    const bool phi_twice = (d == Deriv::d_phi2);
    for (int l = 0; l <= L_; ++l)
      for (int m = -l; m <= l; ++m) {
        const int col = idx(l, m);
        const int ma = std::abs(m);
        const double norm = (m == 0) ? 1.0 : std::sqrt(2.0);
        for (int i = 0; i < nlat; ++i) {
          const double lv = norm * tblA[tab(i, l, ma)];
          for (int j = 0; j < nlon; ++j) {
            const double cm = cosmphi_[j * (L_ + 1) + ma], sm = sinmphi_[j * (L_ + 1) + ma];
            double trig;
            if (phi_once)
              trig = (m >= 0) ? -ma * sm : ma * cm;
            else if (phi_twice)
              trig = -double(ma) * ma * ((m >= 0) ? cm : sm);
            else
              trig = (m >= 0) ? cm : sm;
            Y(g_.id(i, j), col) = lv * trig;
          }
        }
      }
    return Y;
  }

  // exponential anti-alias filter killing the top third of the spectrum
  void filter(std::vector<double>& a, double strength = 36.0, int order = 8) const {
    const int l0 = (2 * L_) / 3;
    for (int l = l0 + 1; l <= L_; ++l) {
      const double s = double(l - l0) / double(L_ - l0);
      const double fac = std::exp(-strength * std::pow(s, order));
      for (int m = -l; m <= l; ++m) a[idx(l, m)] *= fac;
    }
  }

  SphereField filtered(const SphereField& f, double strength = 36.0) const {
    auto a = analyze(f);
    filter(a, strength);
    return synthesize(a);
  }

  // multiply coefficients by the unit-sphere Laplace-Beltrami eigenvalues -l(l+1)
  void apply_laplacian(std::vector<double>& a) const {
    for (int l = 0; l <= L_; ++l)
      for (int m = -l; m <= l; ++m) a[idx(l, m)] *= -double(l) * (l + 1);
  }

  // fraction of coefficient energy above l > 2L/3 (smoothness diagnostic)
  static double high_mode_energy_fraction(const std::vector<double>& a, int L) {
    const int l0 = (2 * L) / 3;
    double tot = 0.0, high = 0.0;
    for (int l = 0; l <= L; ++l)
      for (int m = -l; m <= l; ++m) {
        const double e = sqr(a[idx(l, m)]);
        tot += e;
        if (l > l0) high += e;
      }
    return tot > 0.0 ? high / tot : 0.0;
  }

 private:
  const SphericalGrid& g_;
  int L_;
  // packed (l, m>=0) tables per latitude: lam, d lam / d theta, d^2 lam / d theta^2
  std::vector<double> lam_, dlam_, ddlam_;
  std::vector<double> cosmphi_, sinmphi_;

  size_t pm(int l, int m) const { return size_t(l) * (l + 1) / 2 + m; }
  size_t tab(int i, int l, int m) const { return size_t(i) * n_pm_ + pm(l, m); }
  size_t n_pm_ = 0;

  void build_tables() {
    const int nlat = g_.n_lat, nlon = g_.n_lon;
    n_pm_ = size_t(L_ + 1) * (L_ + 2) / 2;
    lam_.assign(size_t(nlat) * n_pm_, 0.0);
    dlam_.assign(lam_.size(), 0.0);
    ddlam_.assign(lam_.size(), 0.0);

    for (int i = 0; i < nlat; ++i) {
      const double x = g_.xgl[i], st = g_.sin_t[i];
      // diagonal lam_m^m, then upward recurrence in l
      std::vector<double> lm(n_pm_, 0.0);
      lm[pm(0, 0)] = std::sqrt(1.0 / (4.0 * pi));
      for (int m = 1; m <= L_; ++m)
        lm[pm(m, m)] = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * lm[pm(m - 1, m - 1)];
      for (int m = 0; m <= L_; ++m) {
        if (m + 1 <= L_) lm[pm(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * lm[pm(m, m)];
        for (int l = m + 2; l <= L_; ++l) {
          const double al = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
          const double bl = std::sqrt((sqr(l - 1.0) - double(m) * m) / (4.0 * sqr(l - 1.0) - 1.0));
          lm[pm(l, m)] = al * (x * lm[pm(l - 1, m)] - bl * lm[pm(l - 2, m)]);
        }
      }
      for (int m = 0; m <= L_; ++m)
        for (int l = m; l <= L_; ++l) {
          const double v = lm[pm(l, m)];
          lam_[tab(i, l, m)] = v;
          double dv;
          if (l == m) {
            dv = l * x * v / st;  // c_{l,m} = 0 when l == m
          } else {
            const double c = std::sqrt((double(l) * l - double(m) * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0));
            dv = (l * x * v - c * lm[pm(l - 1, m)]) / st;
          }
          dlam_[tab(i, l, m)] = dv;
          // Legendre ODE: lam'' = -cot(theta) lam' - (l(l+1) - m^2/sin^2) lam
          ddlam_[tab(i, l, m)] = -x / st * dv - (double(l) * (l + 1) - double(m) * m / (st * st)) * v;
        }
    }

    cosmphi_.resize(size_t(nlon) * (L_ + 1));
    sinmphi_.resize(cosmphi_.size());
    for (int j = 0; j < nlon; ++j)
      for (int m = 0; m <= L_; ++m) {
        cosmphi_[j * (L_ + 1) + m] = std::cos(m * g_.phi[j]);
        sinmphi_[j * (L_ + 1) + m] = std::sin(m * g_.phi[j]);
      }
  }
};

// Scalar field bundle: nodal values plus coordinate derivatives synthesized
// from one analysis pass.
struct FieldJet {
  SphereField f, ft, fp, ftt, ftp, fpp;
};

inline FieldJet field_jet(const ShTransform& T, const std::vector<double>& a) {
  FieldJet r;
  r.f = T.synthesize(a);
  r.ft = T.synthesize(a, ShTransform::Deriv::d_theta);
  r.fp = T.synthesize(a, ShTransform::Deriv::d_phi);
  r.ftt = T.synthesize(a, ShTransform::Deriv::d_theta2);
  r.ftp = T.synthesize(a, ShTransform::Deriv::d_theta_phi);
  r.fpp = T.synthesize(a, ShTransform::Deriv::d_phi2);
  return r;
}

}  // namespace hmcf

#endif
