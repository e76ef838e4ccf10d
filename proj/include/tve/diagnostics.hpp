#pragma once

#include <tve/dynamics.hpp>
#include <tve/errors.hpp>
#include <tve/grid.hpp>
#include <tve/model.hpp>
#include <tve/tridiagonal.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tve {

// ---------------------------------------------------------------------------
// energy

struct EnergyBudget {
  double t = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double thermal = 0.0;
  double total = 0.0;
  double drift = 0.0;
};

/**
 * E = 1/2 int v^2 + a/2 int u_x^2 + int theta. The elastic part uses the cell-gradient
 * sum (exact for piecewise-linear nodal data), the other two the trapezoid rule; with
 * this pairing the stepper's discrete energy identity has no spatial defect.
 * `reference` is E(0); drift = total - reference (0 when no reference is given).
 */
inline EnergyBudget energy(const State& state, double a, const Grid1D& grid,
                           std::optional<double> reference = std::nullopt) {
  EnergyBudget e;
  e.t = state.t;
  e.kinetic = 0.5 * integrate_of(state.v, grid, [](double v) { return v * v; });
  e.elastic = 0.5 * a * gradient_energy(state.u, grid);
  e.thermal = integrate(state.theta, grid);
  e.total = e.kinetic + e.elastic + e.thermal;
  if (reference) e.drift = e.total - *reference;
  return e;
}

// ---------------------------------------------------------------------------
// Lq balance of (theta + 1)^q

struct LqBalance {
  double lhs_rate = 0.0;
  double dissipation = 0.0;   ///< -q(q-1) int (theta+1)^{q-2} theta_x^2
  double viscous_gain = 0.0;  ///< q int gamma (theta+1)^{q-1} v_x^2
  double coupling_loss = 0.0; ///< -q int f (theta+1)^{q-1} v_x
};

inline double lq_value(const Field& theta, double q, const Grid1D& grid) {
  return integrate_of(theta, grid, [q](double th) { return std::pow(th + 1.0, q); });
}

/**
 * The three terms are evaluated with the stepper's own operators, so that with
 * theta_t = D2_N theta + S they sum exactly to the semi-discrete rate of the trapezoid
 * value of (theta + 1)^q. The dissipation uses summation by parts over cells,
 *   -q sum_cells dx (delta (theta+1)^{q-1} / dx)(delta theta / dx),
 * a consistent form of -q(q-1) int (theta+1)^{q-2} theta_x^2; the gain and loss weight
 * the viscous heating and coupling sources by q (theta+1)^{q-1}.
 */
inline LqBalance lq_balance(const State& state, const MaterialLaws& laws, double q, const Grid1D& grid) {
  if (!(q > 1.0)) throw DomainError("Lq balance needs q > 1");
  require_size(state.theta, grid, "theta");
  require_size(state.v, grid, "v");
  const std::size_t n = grid.n();
  const double h = grid.dx();
  const Field w = map(state.theta, [q](double th) { return std::pow(th + 1.0, q - 1.0); });
  double dis = 0.0;
  for (std::size_t e = 0; e + 1 < n; ++e) dis += (w[e + 1] - w[e]) * (state.theta[e + 1] - state.theta[e]);
  const Field gamma = gamma_at(laws, state.theta);
  const Field f = f_at(laws, state.theta);
  const Field heat = viscous_heating(gamma, state.v, grid);
  const Field coup = coupling_source(f, state.v, grid);
  LqBalance b;
  b.dissipation = -q * dis / h;
  b.viscous_gain = q * integrate(map(w, heat, std::multiplies<>()), grid);
  b.coupling_loss = q * integrate(map(w, coup, std::multiplies<>()), grid);
  b.lhs_rate = b.dissipation + b.viscous_gain + b.coupling_loss;
  return b;
}

struct LqRateCheck {
  std::vector<double> t_mid;
  std::vector<double> fd_rate;     ///< difference quotient of int (theta+1)^q between snapshots
  std::vector<double> model_rate;  ///< mean of lhs_rate at the two snapshots
  double relative_residual = 0.0;  ///< |fd - model|_2 / |fd|_2 over all pairs
};

/// Compares the balance against difference quotients of the Lq functional along a trajectory.
inline LqRateCheck lq_rate_check(std::span<const State> snapshots, const MaterialLaws& laws, double q,
                                 const Grid1D& grid) {
  LqRateCheck out;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 1; k < snapshots.size(); ++k) {
    const State& s0 = snapshots[k - 1];
    const State& s1 = snapshots[k];
    const double h = s1.t - s0.t;
    if (!(h > 0.0)) continue;
    const double fd = (lq_value(s1.theta, q, grid) - lq_value(s0.theta, q, grid)) / h;
    const double model = 0.5 * (lq_balance(s0, laws, q, grid).lhs_rate + lq_balance(s1, laws, q, grid).lhs_rate);
    out.t_mid.push_back(0.5 * (s0.t + s1.t));
    out.fd_rate.push_back(fd);
    out.model_rate.push_back(model);
    num += (fd - model) * (fd - model);
    den += fd * fd;
  }
  out.relative_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  return out;
}

// ---------------------------------------------------------------------------
// z-transform: V = int_0^x v, z = e^{-kappa t} V

struct ZTransform {
  Field z;
  Field V;
};

inline ZTransform z_transform(const State& state, double kappa, const Grid1D& grid) {
  ZTransform out;
  out.V = cumulative_integral(state.v, grid);
  const double damp = std::exp(-kappa * state.t);
  out.z = map(out.V, [damp](double V) { return damp * V; });
  return out;
}

struct ZResidual {
  double norm = 0.0;         ///< L2 norm of the residual over nodes 1..n-1
  double z_left = 0.0;       ///< |z(0)| at both snapshots (exactly 0 by construction)
  double zx_right = 0.0;     ///< |z_x(L)| from the one-sided stencil, later snapshot
  double boundary_flux = 0.0;///< F(0,t) = gamma v_x + a u_x - f at x = 0, later snapshot
};

/**
 * Residual of z_t = gamma0 z_xx - kappa z + h - e^{-kappa t} F(0,t) between two
 * consecutive snapshots, with h = (gamma - gamma0) z_xx + a e^{-kappa t} u_x - e^{-kappa t} f
 * taken at the later snapshot.
 *
 * The boundary term arises because V_t = int_0^x v_t = F(x,t) - F(0,t) with
 * F = gamma v_x + a u_x - f, and F(0,t) need not vanish. z_xx uses the mixed stencil
 * (z(0) = 0, z_x(L) = 0); the time derivative is the backward difference.
 */
inline ZResidual z_residual(const State& earlier, const State& later, const MaterialLaws& laws, double a,
                            double gamma0, double kappa, const Grid1D& grid) {
  const double dt = later.t - earlier.t;
  if (!(dt > 0.0)) throw DomainError("z_residual needs snapshots ordered in time");
  const ZTransform z0 = z_transform(earlier, kappa, grid);
  const ZTransform z1 = z_transform(later, kappa, grid);
  const std::size_t n = grid.n();
  const Field zxx = d2(z1.z, grid, BcKind::mixed_left_dirichlet_right_neumann);
  const Field ux = d1(later.u, grid);
  const Field vx = d1(later.v, grid);
  const double damp = std::exp(-kappa * later.t);
  const double th0 = std::max(later.theta[0], 0.0);
  ZResidual r;
  r.boundary_flux = eval_gamma(laws, th0) * vx[0] + a * ux[0] - eval_f(laws, th0);

  Field res(n);
  for (std::size_t i = 1; i < n; ++i) {
    const double th = std::max(later.theta[i], 0.0);
    const double g = eval_gamma(laws, th);
    const double h = (g - gamma0) * zxx[i] + a * damp * ux[i] - damp * eval_f(laws, th);
    const double zt = (z1.z[i] - z0.z[i]) / dt;
    res[i] = zt - (gamma0 * zxx[i] - kappa * z1.z[i] + h - damp * r.boundary_flux);
  }
  r.norm = std::sqrt(integrate_of(res, grid, [](double x) { return x * x; }));
  r.z_left = std::max(std::abs(z0.z[0]), std::abs(z1.z[0]));
  r.zx_right = std::abs(d1(z1.z, grid)[n - 1]);
  return r;
}

// ---------------------------------------------------------------------------
// strong-form residuals in chain-rule form:
//   v_t = gamma v_xx + gamma'(theta) theta_x v_x + a u_xx - f'(theta) theta_x
//   theta_t = theta_xx + gamma v_x^2 - f v_x

struct StrongResidual {
  double momentum = 0.0;  ///< L2 norm over interior nodes
  double heat = 0.0;      ///< L2 norm over all nodes
};

inline StrongResidual strong_form_residual(const State& earlier, const State& later, const MaterialLaws& laws,
                                           double a, const Grid1D& grid) {
  const double dt = later.t - earlier.t;
  if (!(dt > 0.0)) throw DomainError("strong_form_residual needs snapshots ordered in time");
  const std::size_t n = grid.n();
  const Field vx = d1(later.v, grid);
  const Field vxx = d2(later.v, grid, BcKind::dirichlet_both);
  const Field uxx = d2(later.u, grid, BcKind::dirichlet_both);
  const Field thx = d1(later.theta, grid);
  const Field thxx = d2(later.theta, grid, BcKind::neumann_both);
  Field rm(n), rh(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = std::max(later.theta[i], 0.0);
    const double g = eval_gamma(laws, th);
    const double f = eval_f(laws, th);
    if (i > 0 && i + 1 < n) {
      const double vt = (later.v[i] - earlier.v[i]) / dt;
      rm[i] = vt - (g * vxx[i] + eval_gamma_prime(laws, th) * thx[i] * vx[i] + a * uxx[i] -
                    eval_f_prime(laws, th) * thx[i]);
    }
    const double tht = (later.theta[i] - earlier.theta[i]) / dt;
    rh[i] = tht - (thxx[i] + g * vx[i] * vx[i] - f * vx[i]);
  }
  const auto sq = [](double x) { return x * x; };
  return {std::sqrt(integrate_of(rm, grid, sq)), std::sqrt(integrate_of(rh, grid, sq))};
}

// ---------------------------------------------------------------------------
// maximal-regularity constant K(p, D), numerical lower bound
//
// z_t = D z_xx + g on (0, L), z(0) = 0, z_x(L) = 0, z(., 0) = z0, solved as the even
// reflection onto (0, 2L) with Dirichlet ends. Ratio:
//   int_0^T int_0^L |z_xx|^p / (int_0^L |z0_xx|^p + int_0^T int_0^L |g|^p)


struct KTrialOptions {
  std::size_t steps = 1000;  ///< Crank-Nicolson steps on [0, T]
  double pivot_tolerance = 1e-14;
};

/// Ratio for one trial, or nullopt if both denominator terms vanish.
inline std::optional<double> k_ratio(const Field& z0, const SpaceTimeFn& g, double p, double D, const Grid1D& grid,
                                     double T, const KTrialOptions& opt = {}) {
  if (!(p > 1.0)) throw DomainError("K(p, D) needs p > 1");
  if (!(D > 0.0)) throw DomainError("K(p, D) needs D > 0");
  if (!(T > 0.0) || opt.steps == 0) throw DomainError("K(p, D) needs T > 0 and at least one step");
  require_size(z0, grid, "z0");
  const Grid1D big = grid.doubled();
  const std::size_t n = grid.n();
  const std::size_t m = big.n();
  const double dt = T / static_cast<double>(opt.steps);
  const double L = grid.length();
  const auto pw = [p](double x) { return std::pow(std::abs(x), p); };

  const auto g_field = [&](double t) {
    Field out(m);
    if (g)
      for (std::size_t i = 0; i < m; ++i) {
        const double x = big.x(i);
        out[i] = g(x <= L ? x : 2.0 * L - x, t);
      }
    return out;
  };
  const auto restrict_pw = [&](const Field& big_field) {
    Field part(n);
    for (std::size_t i = 0; i < n; ++i) part[i] = big_field[i];
    return integrate_of(part, grid, pw);
  };
  const auto zxx_pw = [&](const Field& z) { return restrict_pw(d2(z, big, BcKind::dirichlet_both)); };

  Field z = reflect_extend(z0, grid);
  z[0] = z[m - 1] = 0.0;
  const double denom_z0 = zxx_pw(z);
  double denom_g = 0.0;
  double numer = 0.0;

  Field g_prev = g_field(0.0);
  double gp_prev = restrict_pw(g_prev);
  double zp_prev = denom_z0;

  const double k = 0.5 * dt * D / (big.dx() * big.dx());
  Tridiagonal mat(m);
  mat.identity_row(0);
  mat.identity_row(m - 1);
  for (std::size_t i = 1; i + 1 < m; ++i) {
    mat.lower[i] = mat.upper[i] = -k;
    mat.diag[i] = 1.0 + 2.0 * k;
  }
  for (std::size_t s = 1; s <= opt.steps; ++s) {
    const double t = dt * static_cast<double>(s);
    const Field g_next = g_field(t);
    std::vector<double> rhs(m, 0.0);
    for (std::size_t i = 1; i + 1 < m; ++i)
      rhs[i] = z[i] + k * (z[i + 1] - 2.0 * z[i] + z[i - 1]) + 0.5 * dt * (g_prev[i] + g_next[i]);
    z = Field(solve_tridiagonal(mat, std::move(rhs), opt.pivot_tolerance));
    const double zp = zxx_pw(z);
    const double gp = restrict_pw(g_next);
    numer += 0.5 * dt * (zp_prev + zp);
    denom_g += 0.5 * dt * (gp_prev + gp);
    zp_prev = zp;
    gp_prev = gp;
    g_prev = g_next;
  }
  const double denom = denom_z0 + denom_g;
  if (!(denom > 0.0)) return std::nullopt;
  return numer / denom;
}

struct KEstimate {
  double K_est = 0.0;
  std::vector<double> ratios;       ///< per trial; NaN for skipped trials
  std::vector<double> running_max;  ///< K_est after each trial
  std::size_t skipped = 0;
};

/**
 * Running maximum of trial ratios. Trial 0 is the lowest mixed eigenmode sin(pi x / 2L)
 * with g = 0; later trials draw random combinations of the first four mixed modes for
 * z0 and/or a time-modulated g. Trial i is seeded from (seed, i) alone, so prefixes of
 * the trial sequence agree across calls and K_est is nondecreasing in `trials`.
 */
inline KEstimate estimate_K(double p, double D, std::size_t trials, const Grid1D& grid, double T,
                            std::uint64_t seed = 0, const KTrialOptions& opt = {}) {
  if (trials == 0) throw DomainError("estimate_K needs at least one trial");
  const double L = grid.length();
  const auto mode = [L](int k, double x) { return std::sin((k - 0.5) * M_PI * x / L); };
  KEstimate est;
  for (std::size_t i = 0; i < trials; ++i) {
    Field z0(grid.n());
    SpaceTimeFn g;
    if (i == 0) {
      z0 = sample(grid, [&](double x) { return mode(1, x); });
    } else {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal;
      std::uniform_real_distribution<double> unif(0.0, 2.0 * M_PI);
      const int kind = static_cast<int>(i % 3);  // 0: both, 1: data only, 2: source only
      std::array<double, 4> c{}, d{};
      for (int k = 0; k < 4; ++k) {
        c[k] = normal(rng) / ((k + 1.0) * (k + 1.0));
        d[k] = normal(rng) / (k + 1.0);
      }
      const double omega = unif(rng);
      if (kind != 2)
        z0 = sample(grid, [&](double x) {
          double s = 0.0;
          for (int k = 0; k < 4; ++k) s += c[k] * mode(k + 1, x);
          return s;
        });
      if (kind != 1)
        g = [d, omega, mode](double x, double t) {
          double s = 0.0;
          for (int k = 0; k < 4; ++k) s += d[k] * mode(k + 1, x);
          return s * std::cos(omega * t);
        };
    }
    const auto r = k_ratio(z0, g, p, D, grid, T, opt);
    if (r) {
      est.ratios.push_back(*r);
      est.K_est = std::max(est.K_est, *r);
    } else {
      est.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      ++est.skipped;
    }
    est.running_max.push_back(est.K_est);
  }
  return est;
}

// ---------------------------------------------------------------------------
// theory constants

struct TheoryConstants {
  double K_est = 0.0;
  double delta_est = 0.0;  ///< solves 256 K delta^4 = 1/4
  double kappa_est = 0.0;  ///< solves 27*32 K a^4 T0 / kappa^3 = 1/4
  double q = 0.0;          ///< 4 alpha - 2
  bool q_admissible = false;  ///< q > 1, i.e. alpha > 3/4
};

inline TheoryConstants theory_constants(double K_est, double a, double T0, double alpha) {
  if (!(K_est > 0.0)) throw DomainError("K_est must be positive");
  if (!(a > 0.0)) throw DomainError("a must be positive");
  if (!(T0 > 0.0)) throw DomainError("T0 must be positive");
  TheoryConstants c;
  c.K_est = K_est;
  c.delta_est = std::pow(1.0 / (1024.0 * K_est), 0.25);
  c.kappa_est = std::cbrt(3456.0 * K_est * std::pow(a, 4) * T0);
  c.q = 4.0 * alpha - 2.0;
  c.q_admissible = c.q > 1.0;
  return c;
}

// ---------------------------------------------------------------------------
// running monitors

struct TheoryMonitors {
  double t = 0.0;
  double cum_vx4 = 0.0;        ///< int_0^t int v_x^4
  double cum_theta_pow = 0.0;  ///< int_0^t int (theta + 1)^{4 alpha}
  double l2_thetax = 0.0;      ///< int theta_x^2
  double cum_thetaxx2 = 0.0;   ///< int_0^t int theta_xx^2
  double l2_vx = 0.0;          ///< int v_x^2
  double l2_uxx = 0.0;         ///< int u_xx^2
  double cum_vxx2 = 0.0;       ///< int_0^t int v_xx^2
  double lq_value = 0.0;       ///< int (theta + 1)^q
  double w12_theta = 0.0;      ///< |theta|_{W^{1,2}}

  bool finite() const {
    for (double x : {cum_vx4, cum_theta_pow, l2_thetax, cum_thetaxx2, l2_vx, l2_uxx, cum_vxx2, lq_value, w12_theta})
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// Recomputes the instantaneous monitors from `state`; cumulative fields are copied from `prev`.
inline TheoryMonitors monitors_refresh(const TheoryMonitors& prev, const State& state, double q,
                                       const Grid1D& grid) {
  const auto sq = [](double x) { return x * x; };
  TheoryMonitors m = prev;
  m.t = state.t;
  m.l2_thetax = integrate_of(d1(state.theta, grid), grid, sq);
  m.l2_vx = integrate_of(d1(state.v, grid), grid, sq);
  m.l2_uxx = integrate_of(d2(state.u, grid, BcKind::dirichlet_both), grid, sq);
  m.lq_value = lq_value(state.theta, q, grid);
  m.w12_theta = w12_norm(state.theta, grid);
  return m;
}

/// Left-rectangle update over [state.t, state.t + dt]: cumulative fields gain dt times the
/// integrand at `state`; instantaneous fields describe `state`.
inline TheoryMonitors monitors_update(const TheoryMonitors& prev, const State& state, double dt, double q,
                                      double alpha, const Grid1D& grid) {
  if (!(dt > 0.0)) throw DomainError("monitors_update needs dt > 0");
  TheoryMonitors m = monitors_refresh(prev, state, q, grid);
  const Field vx = d1(state.v, grid);
  m.cum_vx4 += dt * integrate_of(vx, grid, [](double x) { return x * x * x * x; });
  m.cum_theta_pow +=
      dt * integrate_of(state.theta, grid, [alpha](double th) { return std::pow(th + 1.0, 4.0 * alpha); });
  m.cum_thetaxx2 +=
      dt * integrate_of(d2(state.theta, grid, BcKind::neumann_both), grid, [](double x) { return x * x; });
  m.cum_vxx2 += dt * integrate_of(d2(state.v, grid, BcKind::dirichlet_both), grid, [](double x) { return x * x; });
  m.t = state.t + dt;
  return m;
}

// ---------------------------------------------------------------------------
// blow-up detector for the W^{1,2} norm of theta

struct BlowupReport {
  bool fired = false;
  double t_fire = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> tail;  ///< last `window` samples of the trace
  double rate = 0.0;         ///< fitted exponential growth rate (per sample, or per time unit if times given)
};

/**
 * Fires iff the last sample exceeds `threshold` and the least-squares slope of log(trace)
 * over the last `window` samples exceeds `rate_min`. With `times`, the slope is per unit
 * time and t_fire is the last time; otherwise per sample index.
 */
inline BlowupReport blowup_check(std::span<const double> trace, std::size_t window, double threshold,
                                 double rate_min, std::span<const double> times = {}) {
  BlowupReport r;
  if (window < 2 || trace.size() < window) return r;
  const std::size_t start = trace.size() - window;
  r.tail.assign(trace.begin() + static_cast<std::ptrdiff_t>(start), trace.end());
  const bool timed = times.size() == trace.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < window; ++k) {
    const double x = timed ? times[start + k] : static_cast<double>(k);
    const double y = std::log(std::max(r.tail[k], std::numeric_limits<double>::min()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double w = static_cast<double>(window);
  const double den = w * sxx - sx * sx;
  r.rate = den > 0.0 ? (w * sxy - sx * sy) / den : 0.0;
  if (std::abs(r.rate) < 1e-14) r.rate = 0.0;
  if (trace.back() > threshold && r.rate > rate_min) {
    r.fired = true;
    r.t_fire = timed ? times.back() : static_cast<double>(trace.size() - 1);
  }
  return r;
}

}  // namespace tve
