#ifndef HMCF_FOLIATION_HPP
#define HMCF_FOLIATION_HPP

#include <atomic>
#include <thread>

#include "hmcf/flow.hpp"

namespace hmcf {

struct SphereFit {
  double r0 = 0.0;
  vec3 center = vec3::Zero();
  double rms_residual = 0.0;        // sqrt(mean w (|y-a| - r0)^2), length units
  double normal_alignment = 0.0;    // max |nu_e - (y - a)/r0|
};

// least-squares Euclidean sphere fit minimizing sum w_i (|y_i - a| - r0)^2
inline SphereFit best_fit_sphere(const RadialGraph& gr) {
  const auto& g = gr.grid();
  const auto pts = gr.embed();
  const double wtot = 4.0 * pi;

  vec3 a = vec3::Zero();
  for (size_t k = 0; k < pts.size(); ++k) a += g.weight[k] * pts[k];
  a /= wtot;
  double r0 = 0.0;
  for (size_t k = 0; k < pts.size(); ++k) r0 += g.weight[k] * (pts[k] - a).norm();
  r0 /= wtot;

  for (int it = 0; it < 40; ++it) {
    Eigen::Matrix4d JtJ = Eigen::Matrix4d::Zero();
    Eigen::Vector4d Jtr = Eigen::Vector4d::Zero();
    for (size_t k = 0; k < pts.size(); ++k) {
      const vec3 d = pts[k] - a;
      const double dist = d.norm();
      const double res = dist - r0;
      Eigen::Vector4d Jrow;
      Jrow << -d[0] / dist, -d[1] / dist, -d[2] / dist, -1.0;
      JtJ += g.weight[k] * Jrow * Jrow.transpose();
      Jtr += g.weight[k] * Jrow * res;
    }
    const Eigen::Vector4d delta = JtJ.ldlt().solve(-Jtr);
    a += delta.head<3>();
    r0 += delta[3];
    if (delta.norm() < 1e-14 * r0) break;
  }

  SphereFit fit;
  fit.r0 = r0;
  fit.center = a;
  double acc = 0.0;
  for (size_t k = 0; k < pts.size(); ++k) acc += g.weight[k] * sqr((pts[k] - a).norm() - r0);
  fit.rms_residual = std::sqrt(acc / wtot);
  if (fit.rms_residual > 0.1 * r0)
    throw geometry_error("best_fit_sphere: surface is not close to round");

  // Euclidean outward normal from the chart
  const SurfaceChart ch = chart_from_graph(gr);
  for (size_t k = 0; k < pts.size(); ++k) {
    vec3 nu_e = ch.Xt[k].cross(ch.Xp[k]);
    nu_e.normalize();
    if (nu_e.dot(pts[k]) < 0) nu_e = -nu_e;
    fit.normal_alignment = std::max(fit.normal_alignment, (nu_e - (pts[k] - a) / r0).norm());
  }
  return fit;
}

struct FoliationLeaf {
  double sigma = 0.0;
  RadialGraph graph;
  double f_sigma = 0.0;
  SphereFit fit;
  bool converged = false;
  double rate_fit = 0.0;
  double rate_fit_r2 = 0.0;
  double max_aring = 0.0;        // on the converged leaf
  double max_grad_aring = 0.0;
  double traj_max_aring = 0.0;   // maxima along the whole flow, not just on the leaf
  double traj_max_grad_aring = 0.0;
  double vol_drift = 0.0;        // max relative drift over the run
  std::string message;
};

inline FoliationLeaf leaf_from_result(double sigma, const LeafResult& lr) {
  FoliationLeaf leaf;
  leaf.sigma = sigma;
  leaf.graph = lr.leaf;
  leaf.f_sigma = lr.f_sigma;
  leaf.converged = lr.converged;
  leaf.rate_fit = lr.rate_fit;
  leaf.rate_fit_r2 = lr.rate_fit_r2;
  leaf.message = lr.message;
  if (!lr.monitors.empty()) {
    leaf.max_aring = lr.monitors.back().max_aring;
    leaf.max_grad_aring = lr.monitors.back().max_grad_aring;
    const double v0 = lr.monitors.front().volume;
    for (const auto& m : lr.monitors) {
      leaf.vol_drift = std::max(leaf.vol_drift, std::abs(m.volume - v0) / v0);
      leaf.traj_max_aring = std::max(leaf.traj_max_aring, m.max_aring);
      leaf.traj_max_grad_aring = std::max(leaf.traj_max_grad_aring, m.max_grad_aring);
    }
  }
  leaf.fit = best_fit_sphere(lr.leaf);
  return leaf;
}

// Runs the flow from coordinate spheres at each sigma; non-convergent runs
// are returned flagged rather than thrown. Leaves are independent, so the
// sweep runs them on a small worker pool; results are deterministic.
inline std::vector<FoliationLeaf> build_foliation(const MetricParams& params,
                                                  const std::vector<double>& sigma_list,
                                                  const FlowConfig& cfg, ContextPtr ctx,
                                                  std::vector<LeafResult>* results = nullptr,
                                                  int workers = 0) {
  for (size_t i = 0; i + 1 < sigma_list.size(); ++i)
    if (!(sigma_list[i] < sigma_list[i + 1]))
      throw usage_error("build_foliation: sigma list must be increasing");
  if (workers <= 0)
    workers = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));

  std::vector<LeafResult> res(sigma_list.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= sigma_list.size()) return;
      const RadialGraph init = RadialGraph::coordinate_sphere(ctx, sigma_list[i]);
      res[i] = run_to_leaf(init, cfg, params);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers && w < int(sigma_list.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<FoliationLeaf> leaves;
  for (size_t i = 0; i < sigma_list.size(); ++i)
    leaves.push_back(leaf_from_result(sigma_list[i], res[i]));
  if (results) *results = std::move(res);
  return leaves;
}

// Lapse between adjacent leaves by radial correspondence: u = <X_b - X_a, nu>_gbar
// over (sigma_b - sigma_a), evaluated at matched grid directions.
struct LapseReport {
  SphereField u;
  double min_u = 0.0;
  double max_u = 0.0;
  double mean_u = 0.0;
  double structure_ratio = 0.0;  // max |u - mean| / |mean|
  double min_nesting = 0.0;      // min (rho_b - rho_a)
  bool positive = false;
};

inline LapseReport lapse(const FoliationLeaf& a, const FoliationLeaf& b, const MetricParams& params) {
  if (!(a.sigma < b.sigma)) throw usage_error("lapse: leaves must be ordered by sigma");
  const auto& g = a.graph.grid();
  if (&g != &b.graph.grid()) throw usage_error("lapse: leaves on different grids");
  const ExtrinsicField Ea = compute_extrinsic(a.graph, params, JetDepth::connection);
  const double dsig = b.sigma - a.sigma;
  LapseReport rep;
  rep.u.resize(g.size());
  rep.min_u = std::numeric_limits<double>::infinity();
  rep.max_u = -rep.min_u;
  rep.min_nesting = std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (size_t k = 0; k < g.size(); ++k) {
    const vec3 diff = (b.graph.rho[k] - a.graph.rho[k]) * g.nhat[k];
    const double u = diff.dot(Ea.jets[k].g * Ea.nu[k]) / dsig;
    rep.u[k] = u;
    rep.min_u = std::min(rep.min_u, u);
    rep.max_u = std::max(rep.max_u, u);
    acc += u * g.weight[k];
    rep.min_nesting = std::min(rep.min_nesting, b.graph.rho[k] - a.graph.rho[k]);
  }
  rep.mean_u = acc / (4.0 * pi);
  for (double u : rep.u)
    rep.structure_ratio = std::max(rep.structure_ratio, std::abs(u - rep.mean_u) / std::abs(rep.mean_u));
  rep.positive = rep.min_u > 0.0;
  return rep;
}

}  // namespace hmcf

#endif
