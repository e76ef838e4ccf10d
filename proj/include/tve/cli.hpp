#pragma once

#include <tve/config.hpp>
#include <tve/diagnostics.hpp>
#include <tve/run.hpp>
#include <tve/scenarios.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace tve {

namespace fs = std::filesystem;

/// Process exit codes shared by all subcommands.
enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_solver = 3, exit_blowup = 4 };

inline const std::vector<std::string>& timeseries_columns() {
  static const std::vector<std::string> cols{
      "t",        "E_total",   "E_kin",        "E_el",         "E_th",     "drift",    "mass_theta",
      "min_theta", "l2_vx",    "l2_uxx",       "l2_thetax",    "cum_vx4",  "cum_theta_pow",
      "cum_thetaxx2", "cum_vxx2", "lq_value",  "w12_theta",    "z_residual", "clamp_count"};
  return cols;
}

namespace detail {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << s;
}

inline std::string timeseries_csv(const Trajectory& tr) {
  std::ostringstream os;
  const auto& cols = timeseries_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << "\n";
  for (const Sample& s : tr.samples) {
    const auto& m = s.monitors;
    const double row[] = {s.t,          s.energy.total, s.energy.kinetic, s.energy.elastic, s.energy.thermal,
                          s.energy.drift, s.mass_theta, s.min_theta,      m.l2_vx,          m.l2_uxx,
                          m.l2_thetax,  m.cum_vx4,      m.cum_theta_pow,  m.cum_thetaxx2,   m.cum_vxx2,
                          m.lq_value,   m.w12_theta,    s.z_residual};
    for (double x : row) os << num(x) << ",";
    os << s.clamp_count << "\n";
  }
  return os.str();
}

inline std::string fields_csv(const State& s, const Grid1D& grid) {
  std::ostringstream os;
  os << "x,u,v,theta\n";
  for (std::size_t i = 0; i < grid.n(); ++i)
    os << num(grid.x(i)) << "," << num(s.u[i]) << "," << num(s.v[i]) << "," << num(s.theta[i]) << "\n";
  return os.str();
}

inline nlohmann::json monitors_json(const TheoryMonitors& m) {
  return {{"cum_vx4", m.cum_vx4},     {"cum_theta_pow", m.cum_theta_pow}, {"l2_thetax", m.l2_thetax},
          {"cum_thetaxx2", m.cum_thetaxx2}, {"l2_vx", m.l2_vx},           {"l2_uxx", m.l2_uxx},
          {"cum_vxx2", m.cum_vxx2},   {"lq_value", m.lq_value},           {"w12_theta", m.w12_theta}};
}

inline const char* status_of(const Trajectory& tr) {
  if (tr.blowup.fired) return "blowup";
  if (!tr.completed) return "solver_failure";
  return "completed";
}

inline int exit_of(const Trajectory& tr) {
  if (tr.blowup.fired) return exit_blowup;
  if (!tr.completed) return exit_solver;
  return exit_ok;
}

}  // namespace detail

struct RunArtifacts {
  Trajectory trajectory;
  std::optional<TheoryConstants> constants;
  KEstimate K;
  int exit_code = exit_ok;
};

/// Runs the configuration and writes timeseries.csv, summary.json, final_state.csv (and
/// fields/ dumps when enabled) into cfg.out_dir, creating it if needed.
inline RunArtifacts execute_run(RunConfig cfg) {
  validate_run_config(cfg);
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  if (cfg.diagnostics.dump_fields) cfg.diagnostics.keep_states = true;

  RunArtifacts art;
  art.trajectory = run(cfg);
  const Trajectory& tr = art.trajectory;
  const Scenario& sc = cfg.scenario;
  const Grid1D grid = sc.grid();
  const DiagnosticConfig& dc = cfg.diagnostics;

  art.K = estimate_K(4.0, sc.laws.gamma0, dc.K_trials, Grid1D(sc.L, dc.K_n), dc.T0, cfg.seed);
  if (art.K.K_est > 0.0) art.constants = theory_constants(art.K.K_est, sc.a, dc.T0, sc.laws.alpha);
  art.exit_code = detail::exit_of(tr);

  detail::write_text(out / "timeseries.csv", detail::timeseries_csv(tr));
  detail::write_text(out / "final_state.csv", detail::fields_csv(tr.final_state, grid));
  if (dc.dump_fields) {
    fs::create_directories(out / "fields");
    for (std::size_t k = 0; k < tr.states.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%05zu.csv", k);
      detail::write_text(out / "fields" / name, detail::fields_csv(tr.states[k], grid));
    }
  }

  using nlohmann::json;
  const double E0 = tr.samples.front().energy.total;
  const double E1 = tr.samples.back().energy.total;
  json j;
  j["scenario"] = sc.name;
  j["status"] = detail::status_of(tr);
  j["exit_code"] = art.exit_code;
  j["error"] = tr.error;
  j["steps"] = tr.steps;
  j["retries"] = tr.retries;
  j["final_time"] = tr.final_state.t;
  j["energy"] = {{"E0", E0},
                 {"E_final", E1},
                 {"drift", E1 - E0},
                 {"relative_drift", E0 != 0.0 ? std::abs(E1 - E0) / std::abs(E0) : 0.0},
                 {"max_abs_drift", tr.max_abs_drift}};
  j["energy_bounds"] = {{"M", tr.data_bound.M},
                 {"M_terms", tr.data_bound.terms},
                 {"B", tr.bounds.B},
                 {"bound_v2", tr.bounds.v2_bound},
                 {"bound_ux2", tr.bounds.ux2_bound},
                 {"bound_theta", tr.bounds.theta_bound},
                 {"max_v2", tr.max_v2},
                 {"max_ux2", tr.max_ux2},
                 {"max_theta_mass", tr.max_theta_mass}};
  j["positivity"] = {{"policy", detail::policy_names().name(sc.scheme.positivity_policy)},
                     {"clamps", tr.clamps},
                     {"clamp_fraction", tr.clamp_fraction(grid.n())},
                     {"min_theta", tr.min_theta}};
  j["monitors_final"] = detail::monitors_json(tr.samples.back().monitors);
  j["monitors_finite"] = tr.samples.back().monitors.finite();
  j["blowup"] = {{"fired", tr.blowup.fired},
                 {"t_fire", tr.blowup.fired ? json(tr.blowup.t_fire) : json(nullptr)},
                 {"rate", tr.blowup.rate},
                 {"tail", tr.blowup.tail},
                 {"threshold", dc.blowup_threshold},
                 {"rate_min", dc.blowup_rate_min}};
  json tc = {{"K_est", art.K.K_est}, {"trials", dc.K_trials}, {"skipped", art.K.skipped},
             {"p", 4.0}, {"D", sc.laws.gamma0}, {"note", "estimate, not certified (lower bound for K)"}};
  if (art.constants) {
    tc["delta_est"] = art.constants->delta_est;
    tc["kappa_est"] = art.constants->kappa_est;
    tc["q"] = art.constants->q;
    tc["q_admissible"] = art.constants->q_admissible;
  }
  j["theory_constants"] = tc;
  j["parameters"] = {{"gamma0", sc.laws.gamma0}, {"delta", sc.laws.delta}, {"K_f", sc.laws.K_f},
                     {"alpha", sc.laws.alpha},   {"a", sc.a},                {"L", sc.L},
                     {"n", sc.n},                {"T_end", sc.T_end},        {"kappa", dc.kappa},
                     {"q", dc.q},                {"T0", dc.T0},              {"seed", cfg.seed}};
  j["provenance"] = {
      {"gamma0", "configured"},     {"delta", "configured"},    {"K_f", "configured"},   {"alpha", "configured"},
      {"a", "configured"},          {"L", "configured"},        {"kappa", "configured"}, {"q", "configured"},
      {"T0", "configured"},         {"M", "measured"},          {"B", "measured"},       {"energy", "measured"},
      {"monitors", "measured"},     {"K_est", "estimated"},     {"delta_est", "estimated"},
      {"kappa_est", "estimated"},   {"q_theory", "configured"}, {"blowup", "measured"}};
  j["config"] = serialize(cfg);
  detail::write_text(out / "summary.json", j.dump(2) + "\n");
  return art;
}

// ---------------------------------------------------------------------------
// convergence study

struct FieldOrders {
  std::vector<double> errors;          ///< max-norm error at T_end per resolution
  std::vector<double> pairwise_orders;  ///< between consecutive resolutions
  double fitted_order = 0.0;            ///< least-squares slope of log error vs log dx
  bool degenerate = false;              ///< all errors at roundoff level
};

struct ConvergenceReport {
  std::vector<std::size_t> n;
  std::vector<double> dx, dt;
  FieldOrders u, v, theta;
  std::string note;
};

namespace detail {

inline FieldOrders fit_orders(const std::vector<double>& dx, std::vector<double> err) {
  FieldOrders f;
  f.errors = err;
  const bool tiny = std::all_of(err.begin(), err.end(), [](double e) { return e < 1e-13; });
  if (tiny) {
    f.degenerate = true;
    return f;
  }
  for (std::size_t k = 1; k < err.size(); ++k)
    f.pairwise_orders.push_back(std::log(err[k - 1] / err[k]) / std::log(dx[k - 1] / dx[k]));
  f.fitted_order = loglog_slope(dx, err);
  return f;
}

}  // namespace detail

/**
 * Runs the scenario at each n with fixed dt scaled from dt_base like dx^2 or dx (rounded
 * so that T_end is a whole number of steps) and measures max-norm errors at T_end.
 */
inline ConvergenceReport convergence_study(const RunConfig& base, const ConvergeSpec& spec) {
  if (!exact_state(base.scenario, 0.0))
    throw ConfigError("scenario", "'" + base.scenario.name + "' has no exact solution for a convergence study");
  ConvergenceReport rep;
  std::vector<double> eu, ev, eth;
  const double dx0 = base.scenario.L / double(spec.n_values.front() - 1);
  for (std::size_t n : spec.n_values) {
    RunConfig cfg = base;
    cfg.scenario.n = n;
    const double dx = cfg.scenario.L / double(n - 1);
    const double ratio = dx / dx0;
    double dt = spec.dt_base * (spec.dt_quadratic ? ratio * ratio : ratio);
    const double steps = std::ceil(cfg.scenario.T_end / dt - 1e-9);
    dt = cfg.scenario.T_end / steps;
    cfg.scenario.scheme.adaptive = false;
    cfg.scenario.scheme.dt_initial = cfg.scenario.scheme.dt_max = dt;
    cfg.diagnostics.cadence = static_cast<std::size_t>(steps);
    const Trajectory tr = run(cfg);
    if (!tr.completed) throw StepError("convergence run at n = " + std::to_string(n) + " failed: " + tr.error);
    const State ex = *exact_state(cfg.scenario, tr.final_state.t);
    const auto err = [](const Field& a, const Field& b) { return max_abs(map(a, b, std::minus<>())); };
    rep.n.push_back(n);
    rep.dx.push_back(dx);
    rep.dt.push_back(dt);
    eu.push_back(err(tr.final_state.u, ex.u));
    ev.push_back(err(tr.final_state.v, ex.v));
    eth.push_back(err(tr.final_state.theta, ex.theta));
  }
  rep.u = detail::fit_orders(rep.dx, eu);
  rep.v = detail::fit_orders(rep.dx, ev);
  rep.theta = detail::fit_orders(rep.dx, eth);
  if (rep.u.degenerate && rep.v.degenerate && rep.theta.degenerate)
    rep.note = "degenerate fit: errors are at roundoff level for every resolution";
  return rep;
}

inline void write_convergence(const ConvergenceReport& rep, const fs::path& out) {
  fs::create_directories(out);
  std::ostringstream csv;
  csv << "n,dx,dt,err_u,err_v,err_theta\n";
  for (std::size_t k = 0; k < rep.n.size(); ++k)
    csv << rep.n[k] << "," << detail::num(rep.dx[k]) << "," << detail::num(rep.dt[k]) << ","
        << detail::num(rep.u.errors[k]) << "," << detail::num(rep.v.errors[k]) << ","
        << detail::num(rep.theta.errors[k]) << "\n";
  detail::write_text(out / "converge.csv", csv.str());
  const auto field = [](const FieldOrders& f) {
    return nlohmann::json{{"errors", f.errors},
                          {"pairwise_orders", f.pairwise_orders},
                          {"fitted_order", f.degenerate ? nlohmann::json(nullptr) : nlohmann::json(f.fitted_order)},
                          {"degenerate", f.degenerate}};
  };
  nlohmann::json j{{"n", rep.n},       {"dx", rep.dx},          {"dt", rep.dt},
                   {"u", field(rep.u)}, {"v", field(rep.v)},    {"theta", field(rep.theta)},
                   {"note", rep.note}};
  detail::write_text(out / "order_report.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// sweeps

struct SweepRow {
  std::size_t index = 0;
  double value = 0.0;
  std::string status;
  int exit_code = exit_ok;
  bool blowup = false;
  double final_time = 0.0;
  double relative_drift = 0.0;
  double clamp_fraction = 0.0;
  double min_theta = 0.0;
  TheoryMonitors monitors;
  bool monitors_finite = true;
  std::string error;
};

/// Applies one sweep value to a copy of the base configuration.
inline RunConfig sweep_point(const RunConfig& base, SweepAxis axis, double value) {
  RunConfig cfg = base;
  MaterialLaws& l = cfg.scenario.laws;
  switch (axis) {
    case SweepAxis::delta:
      l.delta = value;
      if (l.gamma_family == GammaFamily::constant && value > 0.0) l.gamma_family = GammaFamily::saturating;
      break;
    case SweepAxis::alpha:
      // A linear f only satisfies its growth bound for alpha >= 1; the power family
      // coincides with it at alpha = 1 and stays admissible for every alpha.
      l.alpha = value;
      if (l.f_family == FFamily::linear) l.f_family = FFamily::power;
      break;
    case SweepAxis::kappa:
      cfg.diagnostics.kappa = value;
      break;
    case SweepAxis::n:
      cfg.scenario.n = static_cast<std::size_t>(std::llround(value));
      break;
    case SweepAxis::dt:
      cfg.scenario.scheme.dt_initial = cfg.scenario.scheme.dt_max = value;
      break;
  }
  return cfg;
}

/// Runs every point (up to `workers` at once), each in out_dir/point_<i>, and returns rows in input order.
inline std::vector<SweepRow> execute_sweep(const RunConfig& base, const SweepSpec& spec) {
  if (spec.values.empty()) throw ConfigError("values", "sweep value list is empty");
  std::vector<SweepRow> rows(spec.values.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      SweepRow& r = rows[i];
      r.index = i;
      r.value = spec.values[i];
      try {
        RunConfig cfg = sweep_point(base, spec.axis, spec.values[i]);
        cfg.out_dir = (fs::path(base.out_dir) / ("point_" + std::to_string(i))).string();
        const RunArtifacts art = execute_run(cfg);
        const Trajectory& tr = art.trajectory;
        r.status = detail::status_of(tr);
        r.exit_code = art.exit_code;
        r.blowup = tr.blowup.fired;
        r.final_time = tr.final_state.t;
        const double E0 = tr.samples.front().energy.total;
        r.relative_drift = E0 != 0.0 ? std::abs(tr.samples.back().energy.total - E0) / std::abs(E0) : 0.0;
        r.clamp_fraction = tr.clamp_fraction(cfg.scenario.n);
        r.min_theta = tr.min_theta;
        r.monitors = tr.samples.back().monitors;
        r.monitors_finite = r.monitors.finite();
        r.error = tr.error;
      } catch (const ConfigError& e) {
        r.status = "config_error";
        r.exit_code = exit_config;
        r.error = e.what();
      } catch (const std::exception& e) {
        r.status = "solver_failure";
        r.exit_code = exit_solver;
        r.error = e.what();
      }
    }
  };
  const std::size_t nw = std::max<std::size_t>(1, std::min(spec.workers, rows.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < nw; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
  std::ostringstream os;
  os << "index,axis,value,status,exit_code,blowup,final_time,relative_drift,clamp_fraction,min_theta,"
        "cum_vx4,cum_theta_pow,l2_thetax,cum_thetaxx2,l2_vx,l2_uxx,cum_vxx2,w12_theta,monitors_finite,error\n";
  for (const auto& r : rows) {
    const auto& m = r.monitors;
    std::string err = r.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << r.index << "," << axis_name(axis) << "," << detail::num(r.value) << "," << r.status << "," << r.exit_code
       << "," << (r.blowup ? "true" : "false") << "," << detail::num(r.final_time) << ","
       << detail::num(r.relative_drift) << "," << detail::num(r.clamp_fraction) << "," << detail::num(r.min_theta);
    for (double x : {m.cum_vx4, m.cum_theta_pow, m.l2_thetax, m.cum_thetaxx2, m.l2_vx, m.l2_uxx, m.cum_vxx2,
                     m.w12_theta})
      os << "," << detail::num(x);
    os << "," << (r.monitors_finite ? "true" : "false") << ",\"" << err << "\"\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// report

namespace detail {

inline std::vector<std::map<std::string, double>> read_timeseries(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, double>> rows;
  if (!std::getline(in, line)) return rows;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) header.push_back(c);
  }
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string c;
    std::map<std::string, double> row;
    for (std::size_t k = 0; k < header.size() && std::getline(ss, c, ','); ++k) row[header[k]] = std::stod(c);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Markdown summary of a run directory. Throws std::runtime_error naming a missing artifact.
inline std::string render_report(const fs::path& dir) {
  for (const char* f : {"timeseries.csv", "summary.json"})
    if (!fs::exists(dir / f)) throw std::runtime_error(std::string(f) + " not found");
  const auto rows = detail::read_timeseries(dir / "timeseries.csv");
  if (rows.empty()) throw std::runtime_error("timeseries.csv has no samples");
  std::ifstream js(dir / "summary.json");
  const nlohmann::json s = nlohmann::json::parse(js);

  std::ostringstream os;
  const auto g = [](double x) { return detail::num(x); };
  os << "# Run report: " << s.value("scenario", "?") << "\n\n";
  os << "Status: **" << s.value("status", "?") << "** (t = " << g(s.value("final_time", 0.0)) << ", "
     << s.value("steps", 0) << " steps)\n\n";
  os << "## Energy budget\n\n| t | E_kin | E_el | E_th | E_total | drift |\n|---|---|---|---|---|---|\n";
  for (const auto* r : {&rows.front(), &rows.back()})
    os << "| " << g(r->at("t")) << " | " << g(r->at("E_kin")) << " | " << g(r->at("E_el")) << " | "
       << g(r->at("E_th")) << " | " << g(r->at("E_total")) << " | " << g(r->at("drift")) << " |\n";
  const auto& e = s.at("energy");
  os << "\nRelative drift: " << g(e.value("relative_drift", 0.0)) << "\n\n";
  const auto& l = s.at("energy_bounds");
  os << "## Energy bounds from the data bound M = " << g(l.value("M", 0.0)) << "\n\n"
     << "| quantity | bound | observed max | within bound + drift |\n|---|---|---|---|\n";
  const double drift = e.value("max_abs_drift", 0.0);
  const auto bound_row = [&](const char* name, const char* b, const char* o) {
    const double bv = l.value(b, 0.0), ov = l.value(o, 0.0);
    os << "| " << name << " | " << g(bv) << " | " << g(ov) << " | " << (ov <= bv + drift ? "yes" : "NO") << " |\n";
  };
  bound_row("int v^2", "bound_v2", "max_v2");
  bound_row("int u_x^2", "bound_ux2", "max_ux2");
  bound_row("int theta", "bound_theta", "max_theta_mass");
  const auto& tc = s.at("theory_constants");
  os << "\n## Theory constants (estimate, not certified)\n\n"
     << "- K_est (estimate): " << g(tc.value("K_est", 0.0)) << "\n";
  if (tc.contains("delta_est")) os << "- delta_est (estimate): " << g(tc.value("delta_est", 0.0)) << "\n";
  if (tc.contains("kappa_est")) os << "- kappa_est (estimate): " << g(tc.value("kappa_est", 0.0)) << "\n";
  const auto& p = s.at("positivity");
  os << "\n## Positivity\n\n- clamps: " << p.value("clamps", 0) << " (fraction " << g(p.value("clamp_fraction", 0.0))
     << ")\n- min theta: " << g(p.value("min_theta", 0.0)) << "\n";
  const auto& b = s.at("blowup");
  os << "\n## Blow-up verdict\n\n"
     << (b.value("fired", false) ? "Blow-up detector FIRED" : "No blow-up detected")
     << " (fitted growth rate " << g(b.value("rate", 0.0)) << ")\n";
  return os.str();
}

}  // namespace tve
