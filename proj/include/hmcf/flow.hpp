#ifndef HMCF_FLOW_HPP
#define HMCF_FLOW_HPP

#include "hmcf/extrinsic.hpp"
#include "hmcf/snapshot_io.hpp"

namespace hmcf {

struct FlowConfig {
  enum class DtPolicy { fixed, adaptive };
  DtPolicy dt_policy = DtPolicy::adaptive;
  double dt_fixed = 0.0;
  double cfl = 0.25;             // explicit adaptive policy
  double t_max = 1e9;
  double stop_tol = 1e-9;        // stationarity threshold on max|F-f|/f
  double filter_strength = 36.0;
  long checkpoint_every = 200;
  bool imex = true;
  double imex_cap_factor = 0.01;  // dt cap = factor * sigma^3 / m (sigma^2-scaled when m ~ 0)
  double vol_step_tol = 1e-10;    // per-step relative volume drift budget (imex controller)
  int grad_monitor_stride = 5;    // |nabla Aring| monitor cadence
};

struct MonitorSample {
  double t = 0.0;
  double deficit2 = 0.0;       // int (F - f)^2 dmu
  double max_aring = 0.0;
  double max_grad_aring = 0.0;
  double max_fdef = 0.0;       // max |F - f|
  double area = 0.0;
  double volume = 0.0;
  double f_mean = 0.0;
  double dt = 0.0;
  long step = 0;
};

struct FlowState {
  RadialGraph graph;
  double t = 0.0;
  double vol0 = 0.0;
  long step_count = 0;
  double dt = 0.0;  // step size for the NEXT step (adaptive-controller state)
  std::vector<MonitorSample> monitors;
};

// velocity data at a state: normal speed (f - F) converted to the radial
// graph speed. A point of the graph moves radially, so the exact conversion
// is rho_t = (f - F) nu^a dG_a with G(x) = |x| - rho(x/|x|): dG annihilates
// the tangents, hence nu.dG = |dG|_gbar and the normal speed is preserved.
struct VelocityField {
  SphereField radial_speed;   // d rho / d t
  SphereField normal_speed;   // f - F
  std::vector<vec3> dG;       // gradient covector of the graph function
  double f = 0.0;
  double min_cosine = 1.0;    // Euclidean cosine between nu and the radial direction
  double max_fdef_rel = 0.0;  // max |F - f| / f
};

inline VelocityField velocity(const RadialGraph& gr, const ExtrinsicField& E,
                              const FieldJet& rho_jet) {
  const auto& g = gr.grid();
  const size_t n = g.size();
  VelocityField V;
  V.radial_speed.resize(n);
  V.normal_speed.resize(n);
  V.dG.resize(n);
  V.f = mean_value_f(E, gr);

  for (int i = 0; i < g.n_lat; ++i)
    for (int j = 0; j < g.n_lon; ++j) {
      const size_t k = g.id(i, j);
      const double rho = gr.rho[k];
      const vec3 grad_sphere =
          (rho_jet.ft[k] * g.that[k] + (rho_jet.fp[k] / g.sin_t[i]) * g.phat[k]) / rho;
      V.dG[k] = g.nhat[k] - grad_sphere;
      const double conv = E.nu[k].dot(V.dG[k]);
      const double cosine = E.nu[k].dot(g.nhat[k]) / E.nu[k].norm();
      V.min_cosine = std::min(V.min_cosine, cosine);
      if (cosine <= 0.1)
        throw geometry_error("velocity: surface folds over the radial fibration (cos = " +
                             std::to_string(cosine) + ")");
      V.normal_speed[k] = V.f - E.F[k];
      V.radial_speed[k] = V.normal_speed[k] * conv;
      V.max_fdef_rel = std::max(V.max_fdef_rel, std::abs(V.normal_speed[k]) / V.f);
    }
  return V;
}

inline VelocityField velocity(const FlowState& st, const MetricParams& params) {
  const ExtrinsicField E = compute_extrinsic(st.graph, params, JetDepth::connection);
  const FieldJet rj = field_jet(st.graph.sht(), st.graph.coeffs());
  return velocity(st.graph, E, rj);
}

namespace detail {

struct RhsEval {
  std::vector<double> vel_coeffs;  // filtered spherical-harmonic coefficients
  double f = 0.0;
  double max_fdef_rel = 0.0;
  double deficit2 = 0.0;
  double max_aring = 0.0;
  double max_grad_aring = 0.0;
  double area = 0.0;
  bool has_grad_monitor = false;
};

inline RhsEval flow_rhs(const RadialGraph& gr, const MetricParams& params, const FlowConfig& cfg,
                        bool with_grad_monitor = false) {
  const ExtrinsicField E = compute_extrinsic(gr, params, JetDepth::connection);
  const FieldJet rj = field_jet(gr.sht(), gr.sht().analyze(gr.rho));
  const VelocityField V = velocity(gr, E, rj);
  RhsEval r;
  r.f = V.f;
  r.max_fdef_rel = V.max_fdef_rel;
  SphereField def2(E.size());
  double ma = 0.0;
  for (size_t k = 0; k < E.size(); ++k) {
    def2[k] = sqr(V.normal_speed[k]);
    ma = std::max(ma, std::sqrt(E.Aring_norm2[k]));
  }
  r.deficit2 = surface_integral(gr, def2, E.area_density);
  r.max_aring = ma;
  r.area = surface_area(E, gr);
  r.vel_coeffs = gr.sht().analyze(V.radial_speed);
  gr.sht().filter(r.vel_coeffs, cfg.filter_strength);
  if (with_grad_monitor) {
    const FDerivatives D = compute_F_derivatives(E, cfg.filter_strength);
    for (double v : D.grad_Aring_norm) r.max_grad_aring = std::max(r.max_grad_aring, v);
    r.has_grad_monitor = true;
  }
  return r;
}

inline double min_grid_spacing(const RadialGraph& gr) {
  const auto& g = gr.grid();
  double dtheta = pi;
  for (int i = 0; i + 1 < g.n_lat; ++i) dtheta = std::min(dtheta, g.theta[i + 1] - g.theta[i]);
  const double dphi_arc = g.sin_t[0] * (2.0 * pi / g.n_lon);  // smallest longitude arc
  return gr.min_rho() * std::min(dtheta, dphi_arc);
}

}  // namespace detail

inline FlowState init_flow_state(const RadialGraph& graph, const MetricParams& params) {
  FlowState st;
  st.graph = graph;
  st.vol0 = enclosed_volume(graph, params);
  return st;
}

// one explicit RK4 step at fixed dt (also used as the probe stepper)
inline void step_rk4(FlowState& st, const MetricParams& params, const FlowConfig& cfg, double dt) {
  const auto& T = st.graph.sht();
  const auto a0 = T.analyze(st.graph.rho);
  auto graph_at = [&](const std::vector<double>& coeffs) {
    return RadialGraph(st.graph.ctx, T.synthesize(coeffs), st.graph.sigma_label);
  };
  auto axpy = [&](const std::vector<double>& a, double s, const std::vector<double>& k) {
    auto r = a;
    for (size_t i = 0; i < r.size(); ++i) r[i] += s * k[i];
    return r;
  };
  const auto k1 = detail::flow_rhs(st.graph, params, cfg).vel_coeffs;
  const auto k2 = detail::flow_rhs(graph_at(axpy(a0, 0.5 * dt, k1)), params, cfg).vel_coeffs;
  const auto k3 = detail::flow_rhs(graph_at(axpy(a0, 0.5 * dt, k2)), params, cfg).vel_coeffs;
  const auto k4 = detail::flow_rhs(graph_at(axpy(a0, dt, k3)), params, cfg).vel_coeffs;
  auto anew = a0;
  for (size_t i = 0; i < anew.size(); ++i)
    anew[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  st.graph = graph_at(anew);  // stage velocities are filtered, rho stays band-limited
  st.t += dt;
  ++st.step_count;
}

// Semi-implicit predictor-corrector step. The stiff round-sphere principal
// part A = -(1/4) Lap_{S^2(sigma)} (diagonal in harmonic space) is implicit,
// the remainder N(u) = V(u) + A u explicit; the corrector is trapezoidal in N
// and Crank-Nicolson in A, so the step is second order and the per-step
// volume-conservation error is O(dt^3). Stationary states are fixed points.
inline void step_imex(FlowState& st, const MetricParams& params, const FlowConfig& cfg, double dt,
                      const detail::RhsEval& rhs) {
  const auto& T = st.graph.sht();
  const double sig = st.graph.sigma_label;
  const int L = st.graph.grid().L;
  const auto a0 = T.analyze(st.graph.rho);
  auto Al_of = [&](int l) { return double(l) * (l + 1) / (4.0 * sig * sig); };

  // predictor (implicit-Euler in A, explicit in N)
  std::vector<double> apred(a0.size());
  for (int l = 0; l <= L; ++l) {
    const double Al = Al_of(l);
    for (int m = -l; m <= l; ++m) {
      const int id = ShTransform::idx(l, m);
      apred[id] = (a0[id] + dt * (rhs.vel_coeffs[id] + Al * a0[id])) / (1.0 + dt * Al);
    }
  }
  T.filter(apred, cfg.filter_strength);
  const RadialGraph pred(st.graph.ctx, T.synthesize(apred), sig);
  const detail::RhsEval rhs_pred = detail::flow_rhs(pred, params, cfg);

  // corrector: (1 + dt A/2) a' = (1 - dt A/2) a0 + dt/2 (N(a0) + N(a*))
  // No rho-filter after the update: the velocity is filtered at every
  // evaluation and the implicit A damps the top modes, so rho stays
  // band-limited, while filtering rho here would bleed enclosed volume
  // outside the conservative dynamics.
  std::vector<double> anew(a0.size());
  for (int l = 0; l <= L; ++l) {
    const double Al = Al_of(l);
    for (int m = -l; m <= l; ++m) {
      const int id = ShTransform::idx(l, m);
      const double N0 = rhs.vel_coeffs[id] + Al * a0[id];
      const double N1 = rhs_pred.vel_coeffs[id] + Al * apred[id];
      anew[id] = ((1.0 - 0.5 * dt * Al) * a0[id] + 0.5 * dt * (N0 + N1)) / (1.0 + 0.5 * dt * Al);
    }
  }
  st.graph = RadialGraph(st.graph.ctx, T.synthesize(anew), sig);
  st.t += dt;
  ++st.step_count;
}

struct LeafResult {
  RadialGraph leaf;
  double f_sigma = 0.0;
  bool converged = false;
  double rate_fit = std::numeric_limits<double>::quiet_NaN();  // decay rate of int (F-f)^2
  double rate_fit_r2 = std::numeric_limits<double>::quiet_NaN();
  std::string message;
  std::vector<MonitorSample> monitors;
};

// Least-squares fit of log(deficit2) vs t over the last decade of decay that
// stays above 100 * (stop_tol * f)^2 * area. With large semi-implicit steps a
// single decade can hold too few samples, so the window widens by decades
// (staying below 1% of the peak, i.e. past the transient) until it has 8.
inline void fit_decay_rate(const std::vector<MonitorSample>& mon, double stop_tol,
                           double& rate, double& r2) {
  rate = std::numeric_limits<double>::quiet_NaN();
  r2 = std::numeric_limits<double>::quiet_NaN();
  if (mon.size() < 8) return;
  const double f_end = mon.back().f_mean;
  const double floor_val = 100.0 * sqr(stop_tol * f_end) * mon.back().area;
  double peak = 0.0;
  for (const auto& m : mon) peak = std::max(peak, m.deficit2);
  // walk backward to the first sample above the floor
  int end = int(mon.size()) - 1;
  while (end > 0 && mon[end].deficit2 <= floor_val) --end;
  if (end < 4) return;
  double hi = mon[end].deficit2 * 10.0;
  int begin = end;
  for (int widen = 0; widen < 30; ++widen) {
    begin = end;
    while (begin > 0 && mon[begin - 1].deficit2 <= hi && mon[begin - 1].deficit2 > 0.0) --begin;
    if (end - begin + 1 >= 8 || hi > 0.01 * peak) break;
    hi *= 10.0;
  }
  if (end - begin < 4) return;
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  const int n = end - begin + 1;
  for (int i = begin; i <= end; ++i) {
    const double x = mon[i].t, y = std::log(mon[i].deficit2);
    st += x;
    sy += y;
    stt += x * x;
    sty += x * y;
    syy += y * y;
  }
  const double denom = n * stt - st * st;
  if (std::abs(denom) < 1e-300) return;
  const double slope = (n * sty - st * sy) / denom;
  rate = -slope;
  const double ybar = sy / n;
  double ss_res = 0, ss_tot = 0;
  for (int i = begin; i <= end; ++i) {
    const double x = mon[i].t, y = std::log(mon[i].deficit2);
    const double yhat = ybar + slope * (x - st / n);
    ss_res += sqr(y - yhat);
    ss_tot += sqr(y - ybar);
  }
  r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

inline MonitorSample monitor_from_rhs(const FlowState& st, const detail::RhsEval& rhs, double volume,
                                      double prev_grad, double dt_used = 0.0) {
  MonitorSample m;
  m.t = st.t;
  m.step = st.step_count;
  m.dt = dt_used;
  m.f_mean = rhs.f;
  m.deficit2 = rhs.deficit2;
  m.max_aring = rhs.max_aring;
  m.max_grad_aring = rhs.has_grad_monitor ? rhs.max_grad_aring : prev_grad;
  m.max_fdef = rhs.max_fdef_rel * rhs.f;
  m.area = rhs.area;
  m.volume = volume;
  return m;
}

// Iterates the flow until max|F-f|/f <= stop_tol or the time budget runs out.
// Checkpoints (optional) are written through the callback. Accepts a running
// FlowState so interrupted runs can resume from a checkpoint.
inline LeafResult run_to_leaf(FlowState st, const FlowConfig& cfg, const MetricParams& params,
                              const std::function<void(const FlowState&)>& on_checkpoint = nullptr) {
  const double sig = st.graph.sigma_label;
  const double m_eff = std::max(params.mass, sig / 100.0);  // flat-space fallback scale
  const double dt_cap = cfg.imex_cap_factor * sig * sig * sig / m_eff;
  double dt = st.dt > 0.0 ? st.dt
              : cfg.dt_policy == FlowConfig::DtPolicy::fixed
                  ? cfg.dt_fixed
                  : 2.0 * cfg.cfl * sqr(detail::min_grid_spacing(st.graph));

  detail::RhsEval rhs = detail::flow_rhs(st.graph, params, cfg, true);
  if (st.monitors.empty())
    st.monitors.push_back(monitor_from_rhs(st, rhs, enclosed_volume(st.graph, params), 0.0));

  auto finish = [&](bool converged, const std::string& msg) {
    LeafResult res;
    res.leaf = st.graph;
    res.f_sigma = rhs.f;
    res.converged = converged;
    res.monitors = std::move(st.monitors);
    fit_decay_rate(res.monitors, cfg.stop_tol, res.rate_fit, res.rate_fit_r2);
    res.message = msg;
    return res;
  };

  while (true) {
    if (rhs.max_fdef_rel <= cfg.stop_tol)
      return finish(true, "converged after " + std::to_string(st.step_count) + " steps, t = " +
                              std::to_string(st.t));
    if (st.t >= cfg.t_max)
      return finish(false,
                    "time budget exhausted at max|F-f|/f = " + std::to_string(rhs.max_fdef_rel));

    const bool with_grad =
        ((st.step_count + 1) % std::max(1, cfg.grad_monitor_stride)) == 0;

    if (!cfg.imex) {
      if (cfg.dt_policy == FlowConfig::DtPolicy::adaptive)
        dt = 2.0 * cfg.cfl * sqr(detail::min_grid_spacing(st.graph));
      const double dt_used = std::min(dt, cfg.t_max - st.t);
      step_rk4(st, params, cfg, dt_used);
      st.dt = dt;
      rhs = detail::flow_rhs(st.graph, params, cfg, with_grad);
      st.monitors.push_back(monitor_from_rhs(st, rhs, enclosed_volume(st.graph, params),
                                             st.monitors.back().max_grad_aring, dt_used));
    } else if (cfg.dt_policy == FlowConfig::DtPolicy::fixed) {
      const double dt_used = std::min(cfg.dt_fixed, cfg.t_max - st.t);
      step_imex(st, params, cfg, dt_used, rhs);
      st.dt = cfg.dt_fixed;
      rhs = detail::flow_rhs(st.graph, params, cfg, with_grad);
      st.monitors.push_back(monitor_from_rhs(st, rhs, enclosed_volume(st.graph, params),
                                             st.monitors.back().max_grad_aring, dt_used));
    } else {
      // trial step with volume-drift / deficit-decay acceptance control
      dt = std::min({dt, dt_cap, cfg.t_max - st.t});
      const double drift_prev = std::abs(st.monitors.back().volume - st.vol0) / st.vol0;
      while (true) {
        FlowState trial = st;
        step_imex(trial, params, cfg, dt, rhs);
        const double vol = enclosed_volume(trial.graph, params);
        const double drift = std::abs(vol - st.vol0) / st.vol0;
        const detail::RhsEval rhs_trial = detail::flow_rhs(trial.graph, params, cfg, with_grad);
        const bool vol_ok = (drift - drift_prev) <= cfg.vol_step_tol;
        const bool dec_ok = rhs_trial.deficit2 <= rhs.deficit2 * (1.0 + 1e-3) ||
                            rhs_trial.max_fdef_rel <= cfg.stop_tol;
        if (!vol_ok || !dec_ok) {
          if (dt <= 1e-9 * sig)
            throw geometry_error("run_to_leaf: dt underflow, no acceptable step at t = " +
                                 std::to_string(st.t));
          dt *= 0.5;
          continue;
        }
        {
          const double dt_used = dt;
          st = std::move(trial);
          rhs = rhs_trial;
          st.dt = std::min(dt * 1.1, dt_cap);  // controller state, survives checkpoints
          dt = st.dt;
          st.monitors.push_back(
              monitor_from_rhs(st, rhs, vol, st.monitors.back().max_grad_aring, dt_used));
          break;
        }
      }
    }
    if (on_checkpoint && cfg.checkpoint_every > 0 && st.step_count % cfg.checkpoint_every == 0)
      on_checkpoint(st);
  }
}

inline LeafResult run_to_leaf(const RadialGraph& initial, const FlowConfig& cfg,
                              const MetricParams& params,
                              const std::function<void(const FlowState&)>& on_checkpoint = nullptr) {
  return run_to_leaf(init_flow_state(initial, params), cfg, params, on_checkpoint);
}

// -----------------------------------------------------------------------------
// evolution-equation cross checks
// -----------------------------------------------------------------------------

// Compares graph-time finite differences of g_ij, dmu, H, F against the flow
// evolution equations. The graph parametrization adds a tangential advection
// T = rho_t * nhat - (f - F) nu on top of the normal motion, accounted for
// with Lie/advective correction terms.
struct EvolutionResiduals {
  double g_rel = 0.0;
  double dmu_rel = 0.0;
  double H_rel = 0.0;
  double F_rel = 0.0;
  // largest magnitudes of either side, for stationary-state checks
  double g_abs = 0.0, dmu_abs = 0.0, H_abs = 0.0, F_abs = 0.0;
};

inline EvolutionResiduals evolution_residuals(const RadialGraph& gr, const MetricParams& params,
                                              double dt_probe, const FlowConfig& cfg = {}) {
  const auto& g = gr.grid();
  const size_t n = g.size();

  const ExtrinsicField E = compute_extrinsic(gr, params, JetDepth::curvature);
  const FieldJet rj = field_jet(gr.sht(), gr.sht().analyze(gr.rho));
  const VelocityField V = velocity(gr, E, rj);
  const FDerivatives D = compute_F_derivatives(E);

  // advection vector T (tangent), its surface components and one-form
  std::vector<vec2> T_up(n);
  std::vector<vec2> T_form(n);
  for (size_t k = 0; k < n; ++k) {
    const vec3 Tamb = V.radial_speed[k] * g.nhat[k] - V.normal_speed[k] * E.nu[k];
    T_up[k] = vec2(E.dual1[k].dot(Tamb), E.dual2[k].dot(Tamb));
    const vec3 flat = E.jets[k].g * Tamb;
    T_form[k] = vec2(E.e1[k].dot(flat), E.e2[k].dot(flat));
  }
  const auto gradT = covariant_derivative_one_form(E, T_form, cfg.filter_strength);

  const auto hessF = covariant_hessian(E, E.F, cfg.filter_strength);
  const auto hessH = covariant_hessian(E, E.H, cfg.filter_strength);

  // rhs fields
  std::vector<mat2> rhs_g(n);
  SphereField rhs_dmu(n), rhs_H(n), rhs_F(n);
  for (size_t k = 0; k < n; ++k) {
    const double s = V.normal_speed[k];  // f - F
    rhs_g[k] = 2.0 * s * E.h[k];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rhs_g[k](i, j) += gradT[k](i, j) + gradT[k](j, i);

    double divT = 0.0, lapF = 0.0, LF = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        divT += E.ginv[k](i, j) * gradT[k](i, j);
        lapF += E.ginv[k](i, j) * hessF[k](i, j);
        LF += D.F_up[k](i, j) * hessF[k](i, j);
      }
    rhs_dmu[k] = (E.H[k] * s + divT) * E.area_density[k];

    const double ric_nn = E.nu[k].dot(E.jets[k].ricci * E.nu[k]);
    const double adv_H = T_up[k][0] * D.grad_H[k][0] + T_up[k][1] * D.grad_H[k][1];
    rhs_H[k] = lapF - s * (E.A2[k] + ric_nn) + adv_H;

    const mat2 R3 = E.R3i3j(k);
    double FR3 = 0.0, Fh2 = 0.0;
    const mat2 hsq = E.h[k] * E.ginv[k] * E.h[k];
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        FR3 += D.F_up[k](a, b) * R3(a, b);
        Fh2 += D.F_up[k](a, b) * hsq(a, b);
      }
    const double adv_F = T_up[k][0] * D.grad_F[k][0] + T_up[k][1] * D.grad_F[k][1];
    rhs_F[k] = LF - s * (Fh2 - FR3) + adv_F;
  }

  // two probe steps with RK4 (second-order one-sided difference at t = 0)
  FlowConfig probe_cfg = cfg;
  FlowState s0;
  s0.graph = gr;
  FlowState s1 = s0;
  step_rk4(s1, params, probe_cfg, dt_probe);
  FlowState s2 = s1;
  step_rk4(s2, params, probe_cfg, dt_probe);

  const ExtrinsicField E1 = compute_extrinsic(s1.graph, params, JetDepth::connection);
  const ExtrinsicField E2 = compute_extrinsic(s2.graph, params, JetDepth::connection);

  EvolutionResiduals R;
  double num_g = 0, den_g = 0, num_mu = 0, den_mu = 0, num_H = 0, den_H = 0, num_F = 0, den_F = 0;
  for (size_t k = 0; k < n; ++k) {
    const mat2 fd_g =
        (-3.0 * E.g[k] + 4.0 * E1.g[k] - E2.g[k]) / (2.0 * dt_probe);
    num_g += (fd_g - rhs_g[k]).squaredNorm();
    den_g += rhs_g[k].squaredNorm() + sqr(1e-3 * E.g[k].norm() / gr.sigma_label);

    const double fd_mu = (-3.0 * E.area_density[k] + 4.0 * E1.area_density[k] - E2.area_density[k]) /
                         (2.0 * dt_probe);
    num_mu += sqr(fd_mu - rhs_dmu[k]);
    den_mu += sqr(rhs_dmu[k]) + sqr(1e-3 * E.area_density[k] / gr.sigma_label);

    const double fd_H = (-3.0 * E.H[k] + 4.0 * E1.H[k] - E2.H[k]) / (2.0 * dt_probe);
    num_H += sqr(fd_H - rhs_H[k]);
    den_H += sqr(rhs_H[k]) + sqr(1e-3 * E.H[k] / gr.sigma_label);

    const double fd_F = (-3.0 * E.F[k] + 4.0 * E1.F[k] - E2.F[k]) / (2.0 * dt_probe);
    num_F += sqr(fd_F - rhs_F[k]);
    den_F += sqr(rhs_F[k]) + sqr(1e-3 * E.F[k] / gr.sigma_label);

    R.g_abs = std::max({R.g_abs, fd_g.cwiseAbs().maxCoeff(), rhs_g[k].cwiseAbs().maxCoeff()});
    R.dmu_abs = std::max({R.dmu_abs, std::abs(fd_mu), std::abs(rhs_dmu[k])});
    R.H_abs = std::max({R.H_abs, std::abs(fd_H), std::abs(rhs_H[k])});
    R.F_abs = std::max({R.F_abs, std::abs(fd_F), std::abs(rhs_F[k])});
  }
  R.g_rel = std::sqrt(num_g / den_g);
  R.dmu_rel = std::sqrt(num_mu / den_mu);
  R.H_rel = std::sqrt(num_H / den_H);
  R.F_rel = std::sqrt(num_F / den_F);
  return R;
}

}  // namespace hmcf

#endif
