#pragma once

#include <tve/diagnostics.hpp>
#include <tve/dynamics.hpp>
#include <tve/errors.hpp>
#include <tve/model.hpp>
#include <tve/scenarios.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

namespace tve {

struct DiagnosticConfig {
  std::size_t cadence = 10;  ///< record a sample every `cadence` steps (and at the end)
  double q = 2.0;
  double kappa = 1.0;
  double T0 = 1.0;
  double blowup_threshold = 1e6;
  std::size_t blowup_window = 8;
  double blowup_rate_min = 1.0;  ///< per unit time
  std::size_t K_trials = 16;
  std::size_t K_n = 65;
  bool dump_fields = false;
  bool keep_states = false;  ///< keep sampled State snapshots in the trajectory

  bool operator==(const DiagnosticConfig&) const = default;
};

struct RunConfig {
  Scenario scenario;
  DiagnosticConfig diagnostics;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  bool operator==(const RunConfig&) const = default;
};

/// One row of the time series; column order matches timeseries.csv.
struct Sample {
  double t = 0.0;
  EnergyBudget energy;
  double mass_theta = 0.0;
  double min_theta = 0.0;
  TheoryMonitors monitors;
  double z_residual = 0.0;
  std::size_t clamp_count = 0;  ///< cumulative clamps up to t
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<State> states;  ///< sampled snapshots when keep_states is set
  State final_state;
  BlowupReport blowup;
  bool completed = false;
  std::string error;  ///< cause when the run aborted
  std::size_t steps = 0;
  std::size_t retries = 0;
  std::size_t clamps = 0;
  double min_theta = 0.0;  ///< over every accepted step
  double max_v2 = 0.0;     ///< max over steps of int v^2
  double max_ux2 = 0.0;    ///< max over steps of int u_x^2
  double max_theta_mass = 0.0;
  double max_abs_drift = 0.0;
  Lambda1 bounds;
  DataBoundM data_bound;

  double clamp_fraction(std::size_t nodes) const {
    return steps == 0 ? 0.0 : static_cast<double>(clamps) / (static_cast<double>(nodes) * static_cast<double>(steps));
  }
};

namespace detail {

inline std::string check_name_to_field(const std::string& check) {
  if (check == "alpha_range") return "alpha";
  if (check == "gamma0_positive") return "gamma0";
  if (check == "delta_nonnegative" || check == "gamma_box") return "delta";
  if (check == "K_f_positive" || check == "f_growth") return "K_f";
  if (check == "gamma_table") return "gamma_table";
  if (check == "f_table") return "f_table";
  return "f_family";
}

}  // namespace detail

/// Throws ConfigError naming the first offending field.
inline void validate_scenario(const Scenario& sc) {
  if (!(sc.a > 0.0)) throw ConfigError("a", "must be positive");
  if (!(sc.L > 0.0)) throw ConfigError("L", "must be positive");
  if (sc.n < 3) throw ConfigError("n", "needs at least 3 nodes");
  if (!(sc.T_end > 0.0)) throw ConfigError("T_end", "must be positive");
  const auto& s = sc.scheme;
  if (!(s.dt_initial > 0.0)) throw ConfigError("dt_initial", "must be positive");
  if (!(s.dt_max > 0.0)) throw ConfigError("dt_max", "must be positive");
  if (!(s.cfl_safety > 0.0 && s.cfl_safety <= 1.0)) throw ConfigError("cfl_safety", "must lie in (0, 1]");
  if (!(s.positivity_tolerance > 0.0)) throw ConfigError("positivity_tolerance", "must be positive");
  if (!(s.pivot_tolerance > 0.0)) throw ConfigError("pivot_tolerance", "must be positive");
  if (s.max_retries < 0) throw ConfigError("max_retries", "must be nonnegative");
  const ValidationReport rep = validate_hypotheses(sc.laws);
  for (const auto& c : rep.checks)
    if (!c.passed) throw ConfigError(detail::check_name_to_field(c.name), c.reason);
  if (sc.tag == ExpectedBehavior::mms) (void)mms_case(sc.mms_id, sc.laws, sc.a, sc.L);
  sc.initial_data().check(sc.grid());
}

inline void validate_run_config(const RunConfig& cfg) {
  validate_scenario(cfg.scenario);
  const auto& d = cfg.diagnostics;
  if (d.cadence < 1) throw ConfigError("cadence", "must be at least 1");
  if (!(d.q > 1.0)) throw ConfigError("q", "must exceed 1");
  if (!(d.kappa >= 0.0)) throw ConfigError("kappa", "must be nonnegative");
  if (!(d.T0 > 0.0)) throw ConfigError("T0", "must be positive");
  if (d.blowup_window < 2) throw ConfigError("blowup_window", "needs at least 2 samples");
  if (d.K_trials < 1) throw ConfigError("K_trials", "must be at least 1");
  if (d.K_n < 3) throw ConfigError("K_n", "needs at least 3 nodes");
}

/**
 * Integrates the scenario to T_end. Samples are taken at t = 0, every `cadence` steps and
 * at the final time. Failed steps are retried with the suggested (halved) dt up to
 * max_retries times in a row; after that the run stops with `error` set. The blow-up
 * detector runs on the sampled W^{1,2} norm of theta and halts the run when it fires.
 * Maxima of int v^2, int u_x^2 and int theta are tracked at every accepted step. `data` replaces the scenario's
 * generated initial data (used by the mollification cascade).
 */
inline Trajectory run_from_data(const RunConfig& cfg, const InitialData& data) {
  validate_run_config(cfg);
  const Scenario& sc = cfg.scenario;
  const Grid1D grid = sc.grid();
  const DiagnosticConfig& dc = cfg.diagnostics;
  data.check(grid);
  const std::optional<Forcing> forcing = scenario_forcing(sc);
  const Forcing* fp = forcing ? &*forcing : nullptr;

  Trajectory tr;
  tr.data_bound = data_bound_M(data, grid);
  tr.bounds = lambda1_bound(tr.data_bound, sc.a, sc.L);

  State s{0.0, data.u0, data.v0, data.theta0, {}, 0.0};
  const double E0 = energy(s, sc.a, grid).total;
  TheoryMonitors mon = monitors_refresh({}, s, dc.q, grid);
  std::vector<double> w12_trace, w12_times;
  std::optional<State> prev;

  const auto track = [&](const State& st) {
    const EnergyBudget e = energy(st, sc.a, grid, E0);
    tr.max_v2 = std::max(tr.max_v2, 2.0 * e.kinetic);
    tr.max_ux2 = std::max(tr.max_ux2, gradient_energy(st.u, grid));
    tr.max_theta_mass = std::max(tr.max_theta_mass, e.thermal);
    tr.max_abs_drift = std::max(tr.max_abs_drift, std::abs(e.drift));
    tr.min_theta = std::min(tr.min_theta, *std::min_element(st.theta.begin(), st.theta.end()));
  };
  const auto record = [&](const State& st) {
    Sample smp;
    smp.t = st.t;
    smp.energy = energy(st, sc.a, grid, E0);
    smp.mass_theta = smp.energy.thermal;
    smp.min_theta = *std::min_element(st.theta.begin(), st.theta.end());
    smp.monitors = monitors_refresh(mon, st, dc.q, grid);
    smp.monitors.t = st.t;
    if (prev) smp.z_residual = z_residual(*prev, st, sc.laws, sc.a, sc.laws.gamma0, dc.kappa, grid).norm;
    smp.clamp_count = tr.clamps;
    tr.samples.push_back(smp);
    if (dc.keep_states) tr.states.push_back(st);
    w12_trace.push_back(smp.monitors.w12_theta);
    w12_times.push_back(st.t);
    tr.blowup = blowup_check(w12_trace, dc.blowup_window, dc.blowup_threshold, dc.blowup_rate_min, w12_times);
  };

  tr.min_theta = *std::min_element(s.theta.begin(), s.theta.end());
  track(s);
  record(s);

  const double t_end = sc.T_end;
  const double t_eps = 1e-12 * t_end;
  double dt_next = sc.scheme.dt_initial;
  int retries_in_row = 0;
  try {
    while (s.t < t_end - t_eps) {
      double dt = sc.scheme.adaptive ? adapt_dt(s, sc.laws, grid, sc.scheme) : sc.scheme.dt_initial;
      if (retries_in_row > 0) dt = std::min(dt, dt_next);
      if (s.t + dt > t_end - t_eps) dt = t_end - s.t;
      StepOutcome out;
      try {
        out = step(s, sc.laws, sc.a, grid, sc.scheme, dt, fp);
      } catch (const StepError& e) {
        ++tr.retries;
        if (++retries_in_row > sc.scheme.max_retries) throw;
        dt_next = e.suggested_dt() > 0.0 ? e.suggested_dt() : 0.5 * dt;
        continue;
      }
      retries_in_row = 0;
      mon = monitors_update(mon, s, dt, dc.q, sc.laws.alpha, grid);
      tr.clamps += out.clamped;
      ++tr.steps;
      prev = std::move(s);
      s = std::move(out.state);
      track(s);
      const bool last = !(s.t < t_end - t_eps);
      if (tr.steps % dc.cadence == 0 || last) {
        record(s);
        if (tr.blowup.fired) break;
      }
    }
    tr.completed = !tr.blowup.fired;
  } catch (const StepError& e) {
    tr.error = std::string("step failed at t = ") + std::to_string(s.t) + ": " + e.what();
  } catch (const DomainError& e) {
    tr.error = std::string("domain error at t = ") + std::to_string(s.t) + ": " + e.what();
  }
  tr.final_state = s;
  return tr;
}

inline Trajectory run(const RunConfig& cfg) { return run_from_data(cfg, cfg.scenario.initial_data()); }

// ---------------------------------------------------------------------------
// mollification cascade

struct CascadeReport {
  std::vector<double> eps;
  /// Entry k compares the runs at eps[k] and eps[k+1]: sup over nodes and sample times.
  std::vector<double> dist_u, dist_v, dist_theta;
  /// sup over sample times of the W^{1,2} distance between the theta fields.
  std::vector<double> dist_theta_w12;
  bool cauchy_u = false, cauchy_v = false, cauchy_theta = false;
  bool any_blowup = false;
  bool completed = true;
  std::string error;
};

namespace detail {

inline bool strictly_decreasing(const std::vector<double>& d) {
  if (d.size() < 2) return !d.empty();
  for (std::size_t i = 1; i < d.size(); ++i)
    if (!(d[i] < d[i - 1])) return false;
  return true;
}

}  // namespace detail

/**
 * Runs the scenario once per eps with mollified initial data (fixed dt so sample times
 * agree) and compares consecutive runs. Runs execute concurrently.
 */
inline CascadeReport eps_cascade(const RunConfig& base, const std::vector<double>& eps_ladder) {
  for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
    if (!(eps_ladder[i] > 0.0 && eps_ladder[i] < 1.0)) throw DomainError("eps values must lie in (0, 1)");
    if (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1])) throw DomainError("eps ladder must be strictly decreasing");
  }
  const Grid1D grid = base.scenario.grid();
  const InitialData rough = base.scenario.initial_data();

  std::vector<std::future<Trajectory>> jobs;
  for (double eps : eps_ladder) {
    jobs.push_back(std::async(std::launch::async, [&base, &rough, &grid, eps] {
      const InitialData smooth = mollify(rough, eps, grid);
      RunConfig cfg = base;
      cfg.diagnostics.keep_states = true;
      cfg.scenario.scheme.adaptive = false;
      return run_from_data(cfg, smooth);
    }));
  }
  CascadeReport rep;
  rep.eps = eps_ladder;
  std::vector<Trajectory> runs;
  for (auto& j : jobs) runs.push_back(j.get());
  for (const auto& r : runs) {
    rep.any_blowup = rep.any_blowup || r.blowup.fired;
    if (!r.completed) {
      rep.completed = false;
      if (rep.error.empty()) rep.error = r.error.empty() ? "blow-up detected" : r.error;
    }
  }
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const auto& A = runs[k].states;
    const auto& B = runs[k + 1].states;
    const std::size_t m = std::min(A.size(), B.size());
    double du = 0, dv = 0, dth = 0, dw = 0;
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t i = 0; i < grid.n(); ++i) {
        du = std::max(du, std::abs(A[s].u[i] - B[s].u[i]));
        dv = std::max(dv, std::abs(A[s].v[i] - B[s].v[i]));
        dth = std::max(dth, std::abs(A[s].theta[i] - B[s].theta[i]));
      }
      dw = std::max(dw, w12_norm(map(A[s].theta, B[s].theta, std::minus<>()), grid));
    }
    rep.dist_u.push_back(du);
    rep.dist_v.push_back(dv);
    rep.dist_theta.push_back(dth);
    rep.dist_theta_w12.push_back(dw);
  }
  rep.cauchy_u = detail::strictly_decreasing(rep.dist_u);
  rep.cauchy_v = detail::strictly_decreasing(rep.dist_v);
  rep.cauchy_theta = detail::strictly_decreasing(rep.dist_theta);
  return rep;
}

}  // namespace tve
