#ifndef HMCF_JETS_HPP
#define HMCF_JETS_HPP

#include "hmcf/core.hpp"

namespace hmcf {

// Scalar jet carrying partial derivatives up to third order in the ambient
// Cartesian coordinates. Used to evaluate metric components and their
// derivatives analytically (third order feeds d(Ricci)).
struct Jet3 {
  double v = 0.0;
  std::array<double, 3> d{};                      // d[a]
  std::array<std::array<double, 3>, 3> dd{};      // dd[a][b], symmetric
  std::array<std::array<std::array<double, 3>, 3>, 3> d3{};  // symmetric

  Jet3() = default;
  explicit Jet3(double value) : v(value) {}

  static Jet3 constant(double c) { return Jet3(c); }
  static Jet3 coordinate(const vec3& x, int a) {
    Jet3 j(x[a]);
    j.d[a] = 1.0;
    return j;
  }
};

inline Jet3 operator+(const Jet3& f, const Jet3& g) {
  Jet3 r(f.v + g.v);
  for (int a = 0; a < 3; ++a) {
    r.d[a] = f.d[a] + g.d[a];
    for (int b = 0; b < 3; ++b) {
      r.dd[a][b] = f.dd[a][b] + g.dd[a][b];
      for (int c = 0; c < 3; ++c) r.d3[a][b][c] = f.d3[a][b][c] + g.d3[a][b][c];
    }
  }
  return r;
}

inline Jet3 operator-(const Jet3& f, const Jet3& g) {
  Jet3 r(f.v - g.v);
  for (int a = 0; a < 3; ++a) {
    r.d[a] = f.d[a] - g.d[a];
    for (int b = 0; b < 3; ++b) {
      r.dd[a][b] = f.dd[a][b] - g.dd[a][b];
      for (int c = 0; c < 3; ++c) r.d3[a][b][c] = f.d3[a][b][c] - g.d3[a][b][c];
    }
  }
  return r;
}

inline Jet3 operator-(const Jet3& f) { return Jet3(0.0) - f; }

inline Jet3 operator*(double s, const Jet3& f) {
  Jet3 r(s * f.v);
  for (int a = 0; a < 3; ++a) {
    r.d[a] = s * f.d[a];
    for (int b = 0; b < 3; ++b) {
      r.dd[a][b] = s * f.dd[a][b];
      for (int c = 0; c < 3; ++c) r.d3[a][b][c] = s * f.d3[a][b][c];
    }
  }
  return r;
}
inline Jet3 operator*(const Jet3& f, double s) { return s * f; }
inline Jet3 operator+(const Jet3& f, double s) { Jet3 r = f; r.v += s; return r; }
inline Jet3 operator+(double s, const Jet3& f) { return f + s; }
inline Jet3 operator-(const Jet3& f, double s) { return f + (-s); }

inline Jet3 operator*(const Jet3& f, const Jet3& g) {
  Jet3 r(f.v * g.v);
  for (int a = 0; a < 3; ++a) r.d[a] = f.d[a] * g.v + f.v * g.d[a];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      r.dd[a][b] = f.dd[a][b] * g.v + f.d[a] * g.d[b] + f.d[b] * g.d[a] + f.v * g.dd[a][b];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        r.d3[a][b][c] = f.d3[a][b][c] * g.v + f.dd[a][b] * g.d[c] + f.dd[a][c] * g.d[b] +
                        f.dd[b][c] * g.d[a] + f.d[a] * g.dd[b][c] + f.d[b] * g.dd[a][c] +
                        f.d[c] * g.dd[a][b] + f.v * g.d3[a][b][c];
  return r;
}

// u = h(f) given h and its first three derivatives at f.v
inline Jet3 chain(const Jet3& f, double h, double h1, double h2, double h3) {
  Jet3 r(h);
  for (int a = 0; a < 3; ++a) r.d[a] = h1 * f.d[a];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r.dd[a][b] = h2 * f.d[a] * f.d[b] + h1 * f.dd[a][b];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        r.d3[a][b][c] = h3 * f.d[a] * f.d[b] * f.d[c] +
                        h2 * (f.dd[a][b] * f.d[c] + f.dd[a][c] * f.d[b] + f.dd[b][c] * f.d[a]) +
                        h1 * f.d3[a][b][c];
  return r;
}

inline Jet3 inv(const Jet3& f) {
  const double u = f.v;
  return chain(f, 1.0 / u, -1.0 / (u * u), 2.0 / (u * u * u), -6.0 / (u * u * u * u));
}

inline Jet3 operator/(const Jet3& f, const Jet3& g) { return f * inv(g); }

inline Jet3 sqrt(const Jet3& f) {
  const double s = std::sqrt(f.v);
  return chain(f, s, 0.5 / s, -0.25 / (s * f.v), 0.375 / (s * f.v * f.v));
}

inline Jet3 pow(const Jet3& f, double p) {
  const double u = f.v;
  return chain(f, std::pow(u, p), p * std::pow(u, p - 1.0),
               p * (p - 1.0) * std::pow(u, p - 2.0),
               p * (p - 1.0) * (p - 2.0) * std::pow(u, p - 3.0));
}

// |x| as a jet at a point away from the origin
inline Jet3 radius_jet(const vec3& x) {
  Jet3 s(0.0);
  for (int a = 0; a < 3; ++a) {
    const Jet3 xa = Jet3::coordinate(x, a);
    s = s + xa * xa;
  }
  return sqrt(s);
}

}  // namespace hmcf

#endif
