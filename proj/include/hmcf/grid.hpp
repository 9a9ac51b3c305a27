#ifndef HMCF_GRID_HPP
#define HMCF_GRID_HPP

#include <memory>

#include "hmcf/core.hpp"

namespace hmcf {

using SphereField = std::vector<double>;  // one value per grid node

// Gauss-Legendre nodes (descending in x = cos(theta)) and weights on [-1,1]
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double xi = std::cos(pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0, dpn = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = xi;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * xi * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      pn = p1;
      dpn = n * (xi * p1 - p0) / (xi * xi - 1.0);
      const double dx = -pn / dpn;
      xi += dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dpn * dpn);
  }
}

// Pseudospectral grid on S^2: Gauss-Legendre latitudes x uniform longitudes,
// n_lon = 2 n_lat, resolving spherical harmonics up to L = n_lat - 1.
// Quadrature weights integrate dOmega (sum = 4 pi).
struct SphericalGrid {
  int n_lat = 0;
  int n_lon = 0;
  int L = 0;

  std::vector<double> xgl, wgl;          // per latitude
  std::vector<double> theta, sin_t, cos_t;
  std::vector<double> phi;               // per longitude

  std::vector<double> weight;            // per node, dOmega weights
  std::vector<vec3> nhat, that, phat;    // unit radial + spherical frame

  explicit SphericalGrid(int n_lat_) : n_lat(n_lat_), n_lon(2 * n_lat_), L(n_lat_ - 1) {
    if (n_lat < 4) throw usage_error("SphericalGrid: n_lat must be at least 4");
    gauss_legendre(n_lat, xgl, wgl);
    theta.resize(n_lat);
    sin_t.resize(n_lat);
    cos_t.resize(n_lat);
    for (int i = 0; i < n_lat; ++i) {
      theta[i] = std::acos(xgl[i]);
      cos_t[i] = xgl[i];
      sin_t[i] = std::sin(theta[i]);
    }
    phi.resize(n_lon);
    for (int j = 0; j < n_lon; ++j) phi[j] = 2.0 * pi * j / n_lon;

    const double dphi = 2.0 * pi / n_lon;
    weight.resize(size_t(n_lat) * n_lon);
    nhat.resize(weight.size());
    that.resize(weight.size());
    phat.resize(weight.size());
    for (int i = 0; i < n_lat; ++i)
      for (int j = 0; j < n_lon; ++j) {
        const size_t k = id(i, j);
        weight[k] = wgl[i] * dphi;
        const double st = sin_t[i], ct = cos_t[i], cp = std::cos(phi[j]), sp = std::sin(phi[j]);
        nhat[k] = vec3(st * cp, st * sp, ct);
        that[k] = vec3(ct * cp, ct * sp, -st);
        phat[k] = vec3(-sp, cp, 0.0);
      }
  }

  size_t id(int i, int j) const { return size_t(i) * n_lon + j; }
  size_t size() const { return size_t(n_lat) * n_lon; }

  double integrate(const SphereField& f) const {
    double s = 0.0;
    for (size_t k = 0; k < size(); ++k) s += f[k] * weight[k];
    return s;
  }

  // second derivatives of the unit direction field, used by chart builders
  vec3 nhat_t(size_t k) const { return that[k]; }
  vec3 nhat_p(size_t k, int i) const { return sin_t[i] * phat[k]; }
  vec3 nhat_tt(size_t k) const { return -nhat[k]; }
  vec3 nhat_tp(size_t k, int i) const { return cos_t[i] * phat[k]; }
  vec3 nhat_pp(size_t k, int i) const { return -sin_t[i] * (sin_t[i] * nhat[k] + cos_t[i] * that[k]); }
};

}  // namespace hmcf

#endif
