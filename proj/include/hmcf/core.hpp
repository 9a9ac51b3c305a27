#ifndef HMCF_CORE_HPP
#define HMCF_CORE_HPP

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmcf {

using vec3 = Eigen::Vector3d;
using mat3 = Eigen::Matrix3d;
using vec2 = Eigen::Vector2d;
using mat2 = Eigen::Matrix2d;

// rank-3 / rank-4 ambient tensors, all indices 0..2
using ten3 = std::array<mat3, 3>;                  // T[c](a,b)
using ten4 = std::array<std::array<mat3, 3>, 3>;   // T[c][d](a,b)

inline constexpr double pi = 3.14159265358979323846;

struct domain_error : std::runtime_error {
  explicit domain_error(const std::string& msg) : std::runtime_error(msg) {}
};
struct validity_error : std::runtime_error {
  explicit validity_error(const std::string& msg) : std::runtime_error(msg) {}
};
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};
// surface stopped being mean-convex / graph-representable; the flow is
// undefined past this point, no surgery is attempted
struct geometry_error : std::runtime_error {
  explicit geometry_error(const std::string& msg) : std::runtime_error(msg) {}
};

inline double sqr(double x) { return x * x; }

}  // namespace hmcf

#endif
