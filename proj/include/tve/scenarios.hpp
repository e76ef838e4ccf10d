#pragma once

#include <tve/dynamics.hpp>
#include <tve/errors.hpp>
#include <tve/grid.hpp>
#include <tve/model.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tve {

// ---------------------------------------------------------------------------
// initial-data generators

enum class FieldKind { zero, constant, sine, cosine, tent, corner };

/**
 * Closed-form initial profile on [0, L]:
 *   zero      0
 *   constant  base
 *   sine      base + amplitude sin(mode pi x / L)
 *   cosine    base + amplitude cos(mode pi x / L)
 *   tent      base + amplitude (1 - |2x/L - 1|)
 *   corner    base + amplitude |x - center L|
 */
struct FieldGenerator {
  FieldKind kind = FieldKind::zero;
  double base = 0.0;
  double amplitude = 0.0;
  int mode = 1;
  double center = 0.5;  ///< corner location as a fraction of L

  double operator()(double x, double L) const {
    switch (kind) {
      case FieldKind::zero:
        return 0.0;
      case FieldKind::constant:
        return base;
      case FieldKind::sine:
        return base + amplitude * std::sin(mode * M_PI * x / L);
      case FieldKind::cosine:
        return base + amplitude * std::cos(mode * M_PI * x / L);
      case FieldKind::tent:
        return base + amplitude * (1.0 - std::abs(2.0 * x / L - 1.0));
      case FieldKind::corner:
        return base + amplitude * std::abs(x - center * L);
    }
    return 0.0;
  }

  bool operator==(const FieldGenerator&) const = default;
};

struct InitialSpec {
  FieldGenerator u0;
  FieldGenerator v0;
  FieldGenerator theta0{FieldKind::constant, 1.0};
  Regularity regularity = Regularity::smooth;

  bool operator==(const InitialSpec&) const = default;
};

/// Samples the generators. Dirichlet fields get end values of exactly 0 when the profile
/// vanishes there up to roundoff (sin(k pi) is not exactly 0 in floating point).
inline InitialData generate(const InitialSpec& spec, const Grid1D& grid) {
  const double L = grid.length();
  InitialData d;
  d.u0 = sample(grid, [&](double x) { return spec.u0(x, L); });
  d.v0 = sample(grid, [&](double x) { return spec.v0(x, L); });
  d.theta0 = sample(grid, [&](double x) { return spec.theta0(x, L); });
  for (Field* f : {&d.u0, &d.v0})
    for (std::size_t i : {std::size_t{0}, grid.n() - 1})
      if (std::abs((*f)[i]) < 1e-12) (*f)[i] = 0.0;
  d.regularity = spec.regularity;
  return d;
}

// ---------------------------------------------------------------------------
// manufactured solutions

/**
 * Exact fields with the forcing that makes them solve the forced system
 *   v_t = (gamma v_x)_x + a u_xx - f(theta)_x + F_v,   theta_t = theta_xx + gamma v_x^2 - f v_x + F_theta.
 *
 * "stationary":  u = 0, theta = 1, no forcing.
 * "exponential": u = e^{-t} sin(pi x / L), theta = 1 + e^{-t} cos(pi x / L).
 */
struct MmsCase {
  std::string id;
  SpaceTimeFn u;
  SpaceTimeFn v;
  SpaceTimeFn theta;
  SpaceTimeFn forcing_v;
  SpaceTimeFn forcing_theta;

  State exact_state(const Grid1D& grid, double t) const {
    State s;
    s.t = t;
    s.u = sample(grid, [&](double x) { return u(x, t); });
    s.v = sample(grid, [&](double x) { return v(x, t); });
    s.theta = sample(grid, [&](double x) { return theta(x, t); });
    s.u[0] = s.u[grid.n() - 1] = 0.0;
    s.v[0] = s.v[grid.n() - 1] = 0.0;
    return s;
  }

  Forcing forcing() const { return {forcing_v, forcing_theta}; }
};

inline const std::vector<std::string>& mms_ids() {
  static const std::vector<std::string> ids{"stationary", "exponential"};
  return ids;
}

inline MmsCase mms_case(std::string_view id, const MaterialLaws& laws, double a, double L) {
  MmsCase c;
  c.id = std::string(id);
  if (id == "stationary") {
    c.u = c.v = [](double, double) { return 0.0; };
    c.theta = [](double, double) { return 1.0; };
    c.forcing_v = c.forcing_theta = [](double, double) { return 0.0; };
    return c;
  }
  if (id == "exponential") {
    const double k = M_PI / L;
    c.u = [k](double x, double t) { return std::exp(-t) * std::sin(k * x); };
    c.v = [k](double x, double t) { return -std::exp(-t) * std::sin(k * x); };
    c.theta = [k](double x, double t) { return 1.0 + std::exp(-t) * std::cos(k * x); };
    c.forcing_v = [k, laws, a](double x, double t) {
      const double E = std::exp(-t), s = std::sin(k * x), co = std::cos(k * x);
      const double th = 1.0 + E * co;
      const double vt = E * s, vx = -E * k * co, vxx = E * k * k * s;
      const double uxx = -E * k * k * s, thx = -E * k * s;
      const double flux = eval_gamma_prime(laws, th) * thx * vx + eval_gamma(laws, th) * vxx;
      return vt - (flux + a * uxx - eval_f_prime(laws, th) * thx);
    };
    c.forcing_theta = [k, laws](double x, double t) {
      const double E = std::exp(-t), co = std::cos(k * x);
      const double th = 1.0 + E * co;
      const double tht = -E * co, thxx = -E * k * k * co, vx = -E * k * co;
      return tht - (thxx + eval_gamma(laws, th) * vx * vx - eval_f(laws, th) * vx);
    };
    return c;
  }
  throw ConfigError("mms", "unknown manufactured solution '" + std::string(id) + "'");
}

// ---------------------------------------------------------------------------
// scenarios

enum class ExpectedBehavior { stationary, closed_form, mms, generic };

struct Scenario {
  std::string name;
  MaterialLaws laws;
  double a = 1.0;
  double L = 1.0;
  std::size_t n = 129;
  double T_end = 1.0;
  InitialSpec initial;
  ExpectedBehavior tag = ExpectedBehavior::generic;
  std::string mms_id;  ///< manufactured solution id when tag == mms
  SchemeConfig scheme;

  Grid1D grid() const { return Grid1D(L, n); }

  InitialData initial_data() const {
    const Grid1D g = grid();
    if (tag == ExpectedBehavior::mms) {
      const State s = mms_case(mms_id, laws, a, L).exact_state(g, 0.0);
      return {s.u, s.v, s.theta, Regularity::smooth};
    }
    return generate(initial, g);
  }

  bool operator==(const Scenario& o) const {
    return name == o.name && laws == o.laws && a == o.a && L == o.L && n == o.n && T_end == o.T_end &&
           initial == o.initial && tag == o.tag && mms_id == o.mms_id && scheme == o.scheme;
  }
};

/**
 * Exact state at time t when one is known: stationary scenarios, the decoupled heat
 * eigenmode (no motion, f = 0, cosine temperature) and manufactured solutions.
 */
inline std::optional<State> exact_state(const Scenario& sc, double t) {
  const Grid1D g = sc.grid();
  switch (sc.tag) {
    case ExpectedBehavior::stationary: {
      const InitialData d = sc.initial_data();
      return State{t, d.u0, d.v0, d.theta0, {}, 0.0};
    }
    case ExpectedBehavior::closed_form: {
      const FieldGenerator& th = sc.initial.theta0;
      if (th.kind != FieldKind::cosine || sc.initial.u0.kind != FieldKind::zero ||
          sc.initial.v0.kind != FieldKind::zero || sc.laws.f_family != FFamily::zero)
        return std::nullopt;
      const double lam = std::pow(th.mode * M_PI / sc.L, 2);
      State s{t, Field(g.n()), Field(g.n()), {}, {}, 0.0};
      s.theta = sample(g, [&](double x) {
        return th.base + th.amplitude * std::exp(-lam * t) * std::cos(th.mode * M_PI * x / sc.L);
      });
      return s;
    }
    case ExpectedBehavior::mms:
      return mms_case(sc.mms_id, sc.laws, sc.a, sc.L).exact_state(g, t);
    case ExpectedBehavior::generic:
      return std::nullopt;
  }
  return std::nullopt;
}

inline std::optional<Forcing> scenario_forcing(const Scenario& sc) {
  if (sc.tag != ExpectedBehavior::mms) return std::nullopt;
  return mms_case(sc.mms_id, sc.laws, sc.a, sc.L).forcing();
}

namespace detail {

inline MaterialLaws coupled_laws() {
  MaterialLaws l;
  l.gamma_family = GammaFamily::saturating;
  l.gamma0 = 1.0;
  l.delta = 0.1;
  l.f_family = FFamily::linear;
  l.K_f = 1.0;
  l.alpha = 1.0;
  return l;
}

inline MaterialLaws inert_laws() {
  MaterialLaws l;
  l.gamma_family = GammaFamily::constant;
  l.f_family = FFamily::zero;
  return l;
}

inline SchemeConfig fixed_step(double dt, Scheme scheme = Scheme::imex_cn) {
  SchemeConfig c;
  c.scheme = scheme;
  c.dt_initial = dt;
  c.dt_max = dt;
  c.adaptive = false;
  return c;
}

}  // namespace detail

/// The built-in battery; every entry passes validate_hypotheses and InitialData::check.
inline std::vector<Scenario> builtin_battery() {
  using K = FieldKind;
  std::vector<Scenario> out;

  Scenario s;
  s.name = "stationary";
  s.laws = detail::inert_laws();
  s.initial = {{}, {}, {K::constant, 1.0}, Regularity::smooth};
  s.tag = ExpectedBehavior::stationary;
  s.T_end = 1.0;
  s.n = 65;
  s.scheme = detail::fixed_step(1e-2);
  out.push_back(s);

  s = {};
  s.name = "decoupled_heat";
  s.laws = detail::inert_laws();
  s.initial = {{}, {}, {K::cosine, 1.0, 1.0, 1}, Regularity::smooth};
  s.tag = ExpectedBehavior::closed_form;
  s.T_end = 0.5;
  s.scheme = detail::fixed_step(1e-4);
  out.push_back(s);

  s = {};
  s.name = "damped_wave";
  s.laws = detail::inert_laws();
  s.initial = {{}, {K::sine, 0.0, 1.0, 1}, {K::zero}, Regularity::smooth};
  s.T_end = 1.0;
  s.scheme = detail::fixed_step(1e-3);
  out.push_back(s);

  s = {};
  s.name = "coupled";
  s.laws = detail::coupled_laws();
  s.initial = {{K::sine, 0.0, 0.5, 1}, {K::sine, 0.0, 1.0, 2}, {K::cosine, 1.0, 0.5, 1}, Regularity::smooth};
  s.T_end = 1.0;
  s.scheme = detail::fixed_step(1e-3);
  out.push_back(s);

  s = {};
  s.name = "cold_coupled";
  s.laws = detail::coupled_laws();
  s.initial = {{}, {K::sine, 0.0, 1.0, 1}, {K::zero}, Regularity::smooth};
  s.T_end = 1.0;
  s.scheme = detail::fixed_step(1e-3);
  out.push_back(s);

  s = {};
  s.name = "rough_cascade";
  s.laws = detail::coupled_laws();
  s.initial = {{K::sine, 0.0, 0.2, 1}, {K::tent, 0.0, 0.5}, {K::corner, 1.0, 1.0, 1, 0.4}, Regularity::rough};
  s.T_end = 0.5;
  s.scheme = detail::fixed_step(1e-3);
  out.push_back(s);

  s = {};
  s.name = "near_boundary";
  s.laws = detail::coupled_laws();
  s.laws.f_family = FFamily::power;
  s.laws.alpha = 1.45;
  s.initial = {{K::sine, 0.0, 0.5, 1}, {K::sine, 0.0, 1.0, 2}, {K::cosine, 1.0, 0.5, 1}, Regularity::smooth};
  s.T_end = 1.0;
  s.scheme = detail::fixed_step(1e-3);
  out.push_back(s);

  return out;
}

/// Built-in scenarios addressable by name but kept out of the battery.
inline std::vector<Scenario> extra_scenarios() {
  Scenario s;
  s.name = "mms_exponential";
  s.laws = detail::coupled_laws();
  s.tag = ExpectedBehavior::mms;
  s.mms_id = "exponential";
  s.T_end = 0.5;
  s.n = 65;
  s.scheme = detail::fixed_step(1e-3);
  return {s};
}

inline Scenario find_scenario(std::string_view name) {
  for (auto list : {builtin_battery(), extra_scenarios()})
    for (auto& s : list)
      if (s.name == name) return s;
  throw ConfigError("scenario", "unknown scenario '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// mollification

/// Smooth spectral cutoff: 1 for k <= 1/eps, 0 for k >= 2/eps, cos^2 ramp between.
inline double cutoff_weight(double k, double eps) {
  const double lo = 1.0 / eps, hi = 2.0 / eps;
  if (k <= lo) return 1.0;
  if (k >= hi) return 0.0;
  const double c = std::cos(0.5 * M_PI * (k - lo) / (hi - lo));
  return c * c;
}

namespace detail {

// Filtered sine series on the interior nodes (end values 0).
inline Field sine_filter(const Field& f, double eps) {
  const std::size_t N = f.size() - 1;
  Field out(f.size());
  std::vector<double> b(N, 0.0);
  for (std::size_t k = 1; k < N; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j < N; ++j) s += f[j] * std::sin(M_PI * double(k * j) / double(N));
    b[k] = 2.0 / double(N) * s * cutoff_weight(double(k), eps);
  }
  for (std::size_t j = 1; j < N; ++j) {
    double s = 0.0;
    for (std::size_t k = 1; k < N; ++k) s += b[k] * std::sin(M_PI * double(k * j) / double(N));
    out[j] = s;
  }
  return out;
}

// Filtered cosine series over all nodes (type-I transform, even about both ends).
inline Field cosine_filter(const Field& f, double eps) {
  const std::size_t N = f.size() - 1;
  std::vector<double> c(N + 1, 0.0);
  for (std::size_t k = 0; k <= N; ++k) {
    double s = 0.5 * (f[0] + ((k % 2) ? -f[N] : f[N]));
    for (std::size_t j = 1; j < N; ++j) s += f[j] * std::cos(M_PI * double(k * j) / double(N));
    c[k] = 2.0 / double(N) * s * cutoff_weight(double(k), eps);
  }
  Field out(f.size());
  for (std::size_t j = 0; j <= N; ++j) {
    double s = 0.5 * c[0] + 0.5 * c[N] * ((j % 2) ? -1.0 : 1.0);
    for (std::size_t k = 1; k < N; ++k) s += c[k] * std::cos(M_PI * double(k * j) / double(N));
    out[j] = s;
  }
  return out;
}

}  // namespace detail

/**
 * Band-limits initial data in each field's boundary-compatible basis: sine modes for u0
 * and v0, cosine modes for theta0, mode k weighted by cutoff_weight(k, eps). Theta is then
 * clamped at 0 and its end values reset to (4 theta_1 - theta_2)/3 (mirrored at the right)
 * so the one-sided end derivative of d1 is exactly zero.
 */
inline InitialData mollify(const InitialData& data, double eps, const Grid1D& grid) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("mollification parameter must lie in (0, 1)");
  require_size(data.u0, grid, "u0");
  require_size(data.v0, grid, "v0");
  require_size(data.theta0, grid, "theta0");
  const std::size_t n = grid.n();
  InitialData out;
  out.u0 = detail::sine_filter(data.u0, eps);
  out.v0 = detail::sine_filter(data.v0, eps);
  out.theta0 = map(detail::cosine_filter(data.theta0, eps), [](double th) { return std::max(th, 0.0); });
  out.theta0[0] = std::max(0.0, (4.0 * out.theta0[1] - out.theta0[2]) / 3.0);
  out.theta0[n - 1] = std::max(0.0, (4.0 * out.theta0[n - 2] - out.theta0[n - 3]) / 3.0);
  out.regularity = Regularity::smooth;
  return out;
}

}  // namespace tve
