#pragma once

#include <tve/errors.hpp>
#include <tve/grid.hpp>
#include <tve/model.hpp>
#include <tve/tridiagonal.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace tve {

/**
 * Snapshot of the first-order system: displacement u, velocity v = u_t (both zero at the
 * ends) and temperature theta (zero flux at the ends).
 *
 * `theta_prev`/`dt_prev` hold the previous temperature and step size; the second-order
 * scheme extrapolates the frozen coefficients from them. Empty on the first step.
 */
struct State {
  double t = 0.0;
  Field u;
  Field v;
  Field theta;
  Field theta_prev;
  double dt_prev = 0.0;
};

enum class Scheme { imex_be, imex_cn };
enum class PositivityPolicy { clamp_and_count, reject_step };

struct SchemeConfig {
  double dt_initial = 1e-3;
  double dt_max = 1e-2;
  double cfl_safety = 0.5;
  Scheme scheme = Scheme::imex_be;
  PositivityPolicy positivity_policy = PositivityPolicy::clamp_and_count;
  bool adaptive = true;
  /// Accepted states satisfy theta >= -positivity_tolerance.
  double positivity_tolerance = 1e-12;
  /// Retries (each halving dt) before a run gives up on a step.
  int max_retries = 8;
  /// Relative pivot floor for the tridiagonal solves (the implicit stages are direct solves).
  double pivot_tolerance = 1e-14;

  bool operator==(const SchemeConfig&) const = default;
};

using SpaceTimeFn = std::function<double(double x, double t)>;

/// Optional volume sources added to the v- and theta-equations (used by manufactured solutions).
struct Forcing {
  SpaceTimeFn v;
  SpaceTimeFn theta;

  explicit operator bool() const { return static_cast<bool>(v) || static_cast<bool>(theta); }
};

struct Rates {
  Field dv;
  Field du;
  Field dtheta;
};

/// gamma and f evaluated at max(theta, 0) nodewise; states may carry theta >= -tolerance.
inline Field gamma_at(const MaterialLaws& laws, const Field& theta) {
  return map(theta, [&](double th) { return eval_gamma(laws, std::max(th, 0.0)); });
}

inline Field f_at(const MaterialLaws& laws, const Field& theta) {
  return map(theta, [&](double th) { return eval_f(laws, std::max(th, 0.0)); });
}

/// Viscous heating gamma v_x^2: each cell's c_{i+1/2} ((v_{i+1}-v_i)/dx)^2 is split half to each endpoint.
inline Field viscous_heating(const Field& gamma, const Field& v, const Grid1D& grid) {
  const std::size_t n = grid.n();
  const double h = grid.dx();
  std::vector<double> cell(n - 1);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    const double g = (v[e + 1] - v[e]) / h;
    cell[e] = half_node_coef(gamma, e) * g * g;
  }
  Field s(n);
  s[0] = cell[0];
  s[n - 1] = cell[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) s[i] = 0.5 * (cell[i - 1] + cell[i]);
  return s;
}

/// Coupling source -f v_x with v_x central inside and one-sided first order at the ends.
inline Field coupling_source(const Field& f, const Field& v, const Grid1D& grid) {
  const std::size_t n = grid.n();
  const double h = grid.dx();
  Field s(n);
  s[0] = -f[0] * (v[1] - v[0]) / h;
  s[n - 1] = -f[n - 1] * (v[n - 1] - v[n - 2]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) s[i] = -f[i] * (v[i + 1] - v[i - 1]) / (2.0 * h);
  return s;
}

/**
 * Thermal sources gamma v_x^2 - f v_x in the form paired with the mechanical equation:
 * under trapezoid weights they sum exactly to the work done by div_flux(gamma, v) and
 * -d1(f) on v, so the discrete energy has no spatial defect.
 */
inline Field thermal_sources(const Field& gamma, const Field& f, const Field& v, const Grid1D& grid) {
  return map(viscous_heating(gamma, v, grid), coupling_source(f, v, grid), std::plus<>());
}

namespace detail {

inline void check_state(const State& s, const Grid1D& grid) {
  require_size(s.u, grid, "u");
  require_size(s.v, grid, "v");
  require_size(s.theta, grid, "theta");
}

inline void check_laws(const MaterialLaws& laws) {
  if (!(laws.gamma0 > 0.0)) throw DomainError("gamma0 must be positive");
  if (laws.delta < 0.0) throw DomainError("delta must be nonnegative");
}

}  // namespace detail

/// Semi-discrete right-hand side of the first-order system; boundary rows of dv, du are zero.
inline Rates rhs(const State& state, const MaterialLaws& laws, double a, const Grid1D& grid) {
  detail::check_state(state, grid);
  detail::check_laws(laws);
  const Field gamma = gamma_at(laws, state.theta);
  const Field f = f_at(laws, state.theta);
  const Field flux = div_flux(gamma, state.v, grid);
  const Field uxx = d2(state.u, grid, BcKind::dirichlet_both);
  const Field fx = d1(f, grid);
  const std::size_t n = grid.n();

  Rates r{Field(n), state.v, Field(n)};
  for (std::size_t i = 1; i + 1 < n; ++i) r.dv[i] = flux[i] + a * uxx[i] - fx[i];
  r.du[0] = r.du[n - 1] = 0.0;
  const Field lap = d2(state.theta, grid, BcKind::neumann_both);
  const Field src = thermal_sources(gamma, f, state.v, grid);
  for (std::size_t i = 0; i < n; ++i) r.dtheta[i] = lap[i] + src[i];
  return r;
}

struct StepOutcome {
  State state;
  std::size_t clamped = 0;
};

/**
 * One IMEX step of the first-order system.
 *
 * v:     (I - w dt D_flux(gamma*)) dv = dt [D_flux(gamma*) v^n + a D2 u* - D1 f* + F_v]
 * u:     u^{n+1} = u^n + dt vbar
 * theta: (I - w dt D2_N) dtheta = dt [D2_N theta^n + S(gamma*, f*, vbar) + F_theta]
 *
 * imex_be: w = 1, gamma*, f* at theta^n, u* = u^n, vbar = v^{n+1}, forcing at t^{n+1}.
 * imex_cn: w = 1/2, gamma*, f* at theta extrapolated to t^{n+1/2}, u* = u^n + dt/2 v^n,
 *          vbar = (v^n + v^{n+1})/2, forcing at t^{n+1/2}.
 */
inline StepOutcome step(const State& state, const MaterialLaws& laws, double a, const Grid1D& grid,
                        const SchemeConfig& cfg, double dt, const Forcing* forcing = nullptr) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StepError("time step must be positive");
  detail::check_state(state, grid);
  detail::check_laws(laws);
  const std::size_t n = grid.n();
  const double h2 = grid.dx() * grid.dx();
  const bool cn = cfg.scheme == Scheme::imex_cn;
  const double w = cn ? 0.5 : 1.0;
  const double t_force = cn ? state.t + 0.5 * dt : state.t + dt;

  Field theta_star = state.theta;
  if (cn && state.theta_prev.size() == n && state.dt_prev > 0.0) {
    const double r = 0.5 * dt / state.dt_prev;
    for (std::size_t i = 0; i < n; ++i)
      theta_star[i] = std::max(0.0, state.theta[i] + r * (state.theta[i] - state.theta_prev[i]));
  }
  const Field gamma = gamma_at(laws, theta_star);
  for (double g : gamma)
    if (!(g > 0.0)) throw DomainError("viscosity must stay positive");
  const Field f = f_at(laws, theta_star);

  // --- velocity ---
  Field u_star = state.u;
  if (cn)
    for (std::size_t i = 0; i < n; ++i) u_star[i] += 0.5 * dt * state.v[i];
  const Field flux_n = div_flux(gamma, state.v, grid);
  const Field uxx = d2(u_star, grid, BcKind::dirichlet_both);
  const Field fx = d1(f, grid);

  Tridiagonal mv(n);
  std::vector<double> bv(n, 0.0);
  mv.identity_row(0);
  mv.identity_row(n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double cl = half_node_coef(gamma, i - 1);
    const double cr = half_node_coef(gamma, i);
    mv.lower[i] = -w * dt * cl / h2;
    mv.upper[i] = -w * dt * cr / h2;
    mv.diag[i] = 1.0 + w * dt * (cl + cr) / h2;
    double src = flux_n[i] + a * uxx[i] - fx[i];
    if (forcing && forcing->v) src += forcing->v(grid.x(i), t_force);
    bv[i] = dt * src;
  }
  const std::vector<double> dv = solve_tridiagonal(mv, std::move(bv), cfg.pivot_tolerance);

  State next;
  next.t = state.t + dt;
  next.v = state.v;
  for (std::size_t i = 1; i + 1 < n; ++i) next.v[i] += dv[i];
  next.v[0] = next.v[n - 1] = 0.0;

  Field vbar = next.v;
  if (cn)
    for (std::size_t i = 0; i < n; ++i) vbar[i] = 0.5 * (state.v[i] + next.v[i]);

  next.u = state.u;
  for (std::size_t i = 1; i + 1 < n; ++i) next.u[i] += dt * vbar[i];
  next.u[0] = next.u[n - 1] = 0.0;

  // --- temperature ---
  const Field lap_n = d2(state.theta, grid, BcKind::neumann_both);
  const Field src = thermal_sources(gamma, f, vbar, grid);
  Tridiagonal mt(n);
  std::vector<double> bt(n);
  const double k = w * dt / h2;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0) {
      mt.diag[i] = 1.0 + 2.0 * k;
      mt.upper[i] = -2.0 * k;
    } else if (i + 1 == n) {
      mt.diag[i] = 1.0 + 2.0 * k;
      mt.lower[i] = -2.0 * k;
    } else {
      mt.lower[i] = mt.upper[i] = -k;
      mt.diag[i] = 1.0 + 2.0 * k;
    }
    double rate = lap_n[i] + src[i];
    if (forcing && forcing->theta) rate += forcing->theta(grid.x(i), t_force);
    bt[i] = dt * rate;
  }
  const std::vector<double> dth = solve_tridiagonal(mt, std::move(bt), cfg.pivot_tolerance);
  next.theta = state.theta;
  for (std::size_t i = 0; i < n; ++i) next.theta[i] += dth[i];

  StepOutcome out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(next.theta[i]) || !std::isfinite(next.v[i]) || !std::isfinite(next.u[i]))
      throw StepError("non-finite value after step", 0.5 * dt);
    if (next.theta[i] < -cfg.positivity_tolerance) {
      if (cfg.positivity_policy == PositivityPolicy::reject_step)
        throw StepError("negative temperature " + std::to_string(next.theta[i]) + " at node " + std::to_string(i),
                        0.5 * dt);
      next.theta[i] = 0.0;
      ++out.clamped;
    }
  }
  next.theta_prev = state.theta;
  next.dt_prev = dt;
  out.state = std::move(next);
  return out;
}

/**
 * dt = min(dt_max, cfl dx / max(1, |v|_inf), cfl / Lip) where Lip is the largest nodal
 * sensitivity |gamma'(theta)| v_x^2 + |f'(theta)| |v_x| of the explicit thermal sources.
 * A state at rest has no explicit stiffness, so the velocity bound only applies when v != 0.
 */
inline double adapt_dt(const State& state, const MaterialLaws& laws, const Grid1D& grid, const SchemeConfig& cfg) {
  detail::check_state(state, grid);
  double dt = cfg.dt_max;
  const double vmax = max_abs(state.v);
  if (vmax > 0.0) dt = std::min(dt, cfg.cfl_safety * grid.dx() / std::max(1.0, vmax));
  const Field vx = d1(state.v, grid);
  double lip = 0.0;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double th = std::max(state.theta[i], 0.0);
    lip = std::max(lip, std::abs(eval_gamma_prime(laws, th)) * vx[i] * vx[i] +
                            std::abs(eval_f_prime(laws, th)) * std::abs(vx[i]));
  }
  if (lip > 0.0) dt = std::min(dt, cfg.cfl_safety / lip);
  if (!(dt > 0.0) || !std::isfinite(dt)) dt = cfg.dt_max * 1e-12;
  return dt;
}

// ---------------------------------------------------------------------------
// eta-regularized triangular system
//   v_t = A v_xx + a u_xx + g,   u_t = eta u_xx + v,   u = v = 0 on the boundary.

struct EtaState {
  double t = 0.0;
  Field v_eta;
  Field u_eta;
  double eta = 0.0;
};

/// Both diffusions implicit (two tridiagonal solves), the v coupling in the u-equation explicit.
inline EtaState step_eta(const EtaState& state, const Field& A, const Field& g, double a, const Grid1D& grid,
                         const SchemeConfig& cfg, double dt) {
  if (!(dt > 0.0)) throw StepError("time step must be positive");
  if (state.eta < 0.0) throw DomainError("eta must be nonnegative");
  require_size(A, grid, "A");
  require_size(g, grid, "g");
  require_size(state.v_eta, grid, "v_eta");
  require_size(state.u_eta, grid, "u_eta");
  for (double c : A)
    if (!(c > 0.0)) throw DomainError("A must be bounded below by a positive constant");
  const std::size_t n = grid.n();
  const double h2 = grid.dx() * grid.dx();
  const Field uxx = d2(state.u_eta, grid, BcKind::dirichlet_both);

  Tridiagonal mv(n);
  std::vector<double> bv(n, 0.0);
  mv.identity_row(0);
  mv.identity_row(n - 1);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double k = dt * A[i] / h2;
    mv.lower[i] = mv.upper[i] = -k;
    mv.diag[i] = 1.0 + 2.0 * k;
    bv[i] = state.v_eta[i] + dt * (a * uxx[i] + g[i]);
  }
  EtaState next;
  next.t = state.t + dt;
  next.eta = state.eta;
  next.v_eta = Field(solve_tridiagonal(mv, std::move(bv), cfg.pivot_tolerance));
  next.v_eta[0] = next.v_eta[n - 1] = 0.0;

  Tridiagonal mu(n);
  std::vector<double> bu(n, 0.0);
  mu.identity_row(0);
  mu.identity_row(n - 1);
  const double k = dt * state.eta / h2;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    mu.lower[i] = mu.upper[i] = -k;
    mu.diag[i] = 1.0 + 2.0 * k;
    bu[i] = state.u_eta[i] + dt * next.v_eta[i];
  }
  next.u_eta = Field(solve_tridiagonal(mu, std::move(bu), cfg.pivot_tolerance));
  next.u_eta[0] = next.u_eta[n - 1] = 0.0;
  return next;
}

/// Frozen-coefficient data for an eta ladder. `perturbation` scales eta^{1/4}-size
/// perturbations of (A, g, v0, u0); zero keeps the data identical across eta.
struct EtaProblem {
  Grid1D grid{1.0, 65};
  double a = 1.0;
  Field A;
  Field g;
  Field v0;
  Field u0;
  double T = 1.0;
  double dt = 1e-3;
  double perturbation = 0.0;
};

struct EtaLadderReport {
  std::vector<double> eta;
  std::vector<double> sup_y;  ///< sup_t [int (v_eta - v)^2 + a int (u_eta - u)_x^2]
  double slope = 0.0;         ///< least-squares slope of log sup_y against log eta
  bool strictly_decreasing = false;
};

namespace detail {

inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t m = x.size();
  if (m < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = m * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (m * sxy - sx * sy) / den;
}

}  // namespace detail

/// Runs the reference (eta = 0) system and each eta in `etas` with identical steps.
inline EtaLadderReport eta_ladder(const EtaProblem& p, std::span<const double> etas, const SchemeConfig& cfg = {}) {
  const Grid1D& grid = p.grid;
  const auto steps = static_cast<std::size_t>(std::llround(p.T / p.dt));
  const Field bump = sample(grid, [&](double x) { return std::sin(M_PI * x / grid.length()); });

  EtaState ref{0.0, p.v0, p.u0, 0.0};
  std::vector<EtaState> ref_traj{ref};
  for (std::size_t s = 0; s < steps; ++s) ref_traj.push_back(step_eta(ref_traj.back(), p.A, p.g, p.a, grid, cfg, p.dt));

  EtaLadderReport report;
  for (double eta : etas) {
    const double amp = p.perturbation * std::pow(eta, 0.25);
    Field A = p.A, g = p.g, v0 = p.v0, u0 = p.u0;
    if (amp > 0.0) {
      const double bump_w22 = std::sqrt(integrate_of(bump, grid, [](double b) { return b * b; }) *
                                        (1.0 + std::pow(M_PI / grid.length(), 2) + std::pow(M_PI / grid.length(), 4)));
      for (std::size_t i = 0; i < grid.n(); ++i) {
        A[i] += amp * bump[i];
        g[i] += amp * bump[i];
        v0[i] += amp * bump[i] / bump_w22;
        u0[i] += amp * bump[i] / bump_w22;
      }
    }
    EtaState s{0.0, v0, u0, eta};
    double sup = 0.0;
    for (std::size_t k = 0;; ++k) {
      const Field dv = map(s.v_eta, ref_traj[k].v_eta, std::minus<>());
      const Field du = map(s.u_eta, ref_traj[k].u_eta, std::minus<>());
      const double y = integrate_of(dv, grid, [](double d) { return d * d; }) + p.a * gradient_energy(du, grid);
      sup = std::max(sup, y);
      if (k == steps) break;
      s = step_eta(s, A, g, p.a, grid, cfg, p.dt);
    }
    report.eta.push_back(eta);
    report.sup_y.push_back(sup);
  }
  report.slope = detail::loglog_slope(report.eta, report.sup_y);
  // Strictly decreasing as eta decreases along the ladder (given in decreasing order).
  report.strictly_decreasing = report.sup_y.size() >= 2;
  for (std::size_t i = 1; i < report.sup_y.size(); ++i) {
    const bool eta_down = report.eta[i] < report.eta[i - 1];
    const bool y_down = report.sup_y[i] < report.sup_y[i - 1];
    if (eta_down != y_down) report.strictly_decreasing = false;
  }
  return report;
}

}  // namespace tve
