#ifndef HMCF_CENTERS_HPP
#define HMCF_CENTERS_HPP

#include "hmcf/foliation.hpp"

namespace hmcf {

// Euclidean-measure centroid of a surface, int X dmu_e / int dmu_e
inline vec3 euclidean_centroid(const RadialGraph& gr) {
  const SurfaceChart ch = chart_from_graph(gr);
  const SphereField dens = euclidean_area_density(ch);
  const auto& g = gr.grid();
  vec3 num = vec3::Zero();
  double den = 0.0;
  for (size_t k = 0; k < g.size(); ++k) {
    num += ch.X[k] * dens[k] * g.weight[k];
    den += dens[k] * g.weight[k];
  }
  return num / den;
}

struct CenterExtrapolation {
  vec3 value = vec3::Zero();      // sigma -> infinity extrapolant
  double fit_residual = 0.0;      // rms of the per-component fits
  std::vector<double> sigmas;
  std::vector<vec3> samples;      // per-leaf centroids (or per-radius flux values)
};

// fit c0 + c1/s + c2/s^2 (3-term when >= 4 samples, 2-term when 3)
inline CenterExtrapolation extrapolate_in_inverse(const std::vector<double>& sigmas,
                                                  const std::vector<vec3>& values) {
  if (sigmas.size() < 3) throw usage_error("center extrapolation needs at least 3 samples");
  const int terms = sigmas.size() >= 4 ? 3 : 2;
  const int n = int(sigmas.size());
  Eigen::MatrixXd X(n, terms);
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < terms; ++t) X(i, t) = std::pow(1.0 / sigmas[i], t);
  CenterExtrapolation out;
  out.sigmas = sigmas;
  out.samples = values;
  double acc = 0.0;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = values[i][c];
    const Eigen::VectorXd beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
    out.value[c] = beta[0];
    acc += (y - X * beta).squaredNorm();
  }
  out.fit_residual = std::sqrt(acc / n);
  return out;
}

// geometric center of mass of the foliation: per-leaf Euclidean centroids
// extrapolated to sigma -> infinity
inline CenterExtrapolation c_hm(const std::vector<FoliationLeaf>& leaves) {
  if (leaves.size() < 3) throw usage_error("c_hm: need at least 3 leaves");
  if (!(leaves.back().sigma >= 1.5 * leaves.front().sigma))
    throw usage_error("c_hm: leaves must span a factor >= 1.5 in sigma");
  std::vector<double> sig;
  std::vector<vec3> cen;
  for (const auto& leaf : leaves) {
    sig.push_back(leaf.sigma);
    cen.push_back(euclidean_centroid(leaf.graph));
  }
  return extrapolate_in_inverse(sig, cen);
}

// ADM center of mass: the two-term flux integral over coordinate spheres,
//   C^k = 1/(16 pi m) lim_R [ int x^k (g_ij,i - g_ii,j) nu_e^j dmu_e
//                            - int (g_ik nu_e^i - g_ii nu_e^k) dmu_e ],
// evaluated at each radius and Richardson-extrapolated in 1/R.
inline CenterExtrapolation adm_center(const MetricParams& params,
                                      const std::vector<double>& radii, ContextPtr ctx) {
  if (!(params.mass > 0.0)) throw usage_error("adm_center: undefined for m = 0");
  if (radii.size() < 3) throw usage_error("adm_center: need at least 3 radii");
  for (double R : radii)
    if (!(R > 10.0 * std::max(1.0, params.mass)))
      throw usage_error("adm_center: radius " + std::to_string(R) + " is not in the asymptotic regime");
  const auto& g = ctx->grid;
  std::vector<vec3> flux;
  for (double R : radii) {
    vec3 acc = vec3::Zero();
    for (size_t n = 0; n < g.size(); ++n) {
      const vec3 nu_e = g.nhat[n];
      const vec3 x = R * nu_e;
      const MetricJet J = eval_jet(params, x, JetDepth::connection);
      const double dmu = R * R * g.weight[n];
      for (int k = 0; k < 3; ++k) {
        double term1 = 0.0;
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            term1 += x[k] * (J.dg[i](i, j) - J.dg[j](i, i)) * nu_e[j];
        double term2 = 0.0;
        for (int i = 0; i < 3; ++i) term2 += J.g(i, k) * nu_e[i] - J.g(i, i) * nu_e[k];
        acc[k] += (term1 - term2) * dmu;
      }
    }
    flux.push_back(acc / (16.0 * pi * params.mass));
  }
  std::vector<double> rr(radii.begin(), radii.end());
  return extrapolate_in_inverse(rr, flux);
}

struct CenterReport {
  CenterExtrapolation hm;
  CenterExtrapolation adm;
  double difference = 0.0;
};

inline CenterReport compare_centers(const std::vector<FoliationLeaf>& leaves,
                                    const MetricParams& params, const std::vector<double>& adm_radii,
                                    ContextPtr ctx) {
  CenterReport rep;
  rep.hm = c_hm(leaves);
  rep.adm = adm_center(params, adm_radii, ctx);
  rep.difference = (rep.hm.value - rep.adm.value).norm();
  return rep;
}

}  // namespace hmcf

#endif
