// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <tve/cli.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace tve;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

RunConfig base(const std::string& name) {
  RunConfig c;
  c.scenario = find_scenario(name);
  return c;
}

void set_dt(RunConfig& c, double dt) {
  c.scenario.scheme.adaptive = false;
  c.scenario.scheme.dt_initial = c.scenario.scheme.dt_max = dt;
}

double relative_drift(const Trajectory& tr) {
  const double E0 = tr.samples.front().energy.total;
  return std::abs(tr.samples.back().energy.total - E0) / E0;
}

// 1. Energy law on the coupled scenario.
Verdict energy_law() {
  const auto drift = [](Scheme s, double dt) {
    RunConfig c = base("coupled");
    c.scenario.scheme.scheme = s;
    set_dt(c, dt);
    c.diagnostics.cadence = 1000000;
    const Trajectory tr = run(c);
    return tr.completed ? relative_drift(tr) : INFINITY;
  };
  const double cn1 = drift(Scheme::imex_cn, 1e-3), cn2 = drift(Scheme::imex_cn, 5e-4);
  const double be1 = drift(Scheme::imex_be, 1e-3), be2 = drift(Scheme::imex_be, 5e-4);
  const double rcn = cn1 / cn2, rbe = be1 / be2;
  return {cn1 <= 1e-3 && rcn >= 1.8 && rbe >= 1.9,
          fmt("imex_cn drift %.2e (<= 1e-3), halving ratio %.2f (>= 1.8); imex_be halving ratio %.2f (>= 1.9)", cn1,
              rcn, rbe)};
}

// 2. Energy bounds from the data bound on every battery scenario.
Verdict energy_bounds() {
  bool ok = true;
  double worst = 0.0;
  std::string bad;
  for (const Scenario& s : builtin_battery()) {
    RunConfig c;
    c.scenario = s;
    const Trajectory tr = run(c);
    const double slack = tr.max_abs_drift;
    const bool here = tr.completed && tr.max_v2 <= tr.bounds.v2_bound + slack &&
                      tr.max_ux2 <= tr.bounds.ux2_bound + slack && tr.max_theta_mass <= tr.bounds.theta_bound + slack;
    if (!here) bad += " " + s.name;
    ok &= here;
    worst = std::max({worst, tr.max_v2 / tr.bounds.v2_bound, tr.max_ux2 / tr.bounds.ux2_bound,
                      tr.max_theta_mass / tr.bounds.theta_bound});
  }
  return {ok, fmt("%zu scenarios, largest observed/bound ratio %.3f%s%s", builtin_battery().size(), worst,
                  bad.empty() ? "" : "; exceeded on", bad.c_str())};
}

// 3. Decoupled heat eigenmode against the closed form.
Verdict heat_oracle() {
  RunConfig c = base("decoupled_heat");
  c.diagnostics.cadence = 1000000;
  const Trajectory tr = run(c);
  const State ex = *exact_state(c.scenario, tr.final_state.t);
  const double err = max_abs(map(tr.final_state.theta, ex.theta, std::minus<>()));
  RunConfig cv = base("decoupled_heat");
  cv.scenario.scheme.scheme = Scheme::imex_be;
  ConvergeSpec spec;
  spec.n_values = {33, 65, 129};
  spec.dt_base = 1e-3;
  spec.dt_quadratic = true;
  const double order = convergence_study(cv, spec).theta.fitted_order;
  return {err <= 5e-4 && order >= 1.8 && order <= 2.2,
          fmt("Linf error %.2e at T = %.2f (<= 5e-4); spatial order %.3f (in [1.8, 2.2])", err, tr.final_state.t,
              order)};
}

// 4. Lq rate identity with q = 2.
Verdict lq_identity() {
  std::vector<double> res;
  for (double dt : {2e-3, 1e-3, 5e-4}) {
    RunConfig c = base("coupled");
    set_dt(c, dt);
    c.diagnostics.cadence = 1;
    c.diagnostics.keep_states = true;
    const Trajectory tr = run(c);
    res.push_back(tr.completed ? lq_rate_check(tr.states, c.scenario.laws, 2.0, c.scenario.grid()).relative_residual
                               : INFINITY);
  }
  return {res[1] <= 0.02 && res[1] < res[0] && res[2] < res[1],
          fmt("relative residual %.2e (dt 2e-3), %.2e (baseline dt 1e-3, <= 2e-2), %.2e (dt 5e-4); decreasing", res[0],
              res[1], res[2])};
}

// 5. z transform: exact left value and residual refinement.
Verdict z_diagnostics() {
  std::vector<double> maxres;
  bool left_exact = true;
  for (int lev = 0; lev < 3; ++lev) {
    RunConfig c = base("coupled");
    c.scenario.n = 32 * (std::size_t{1} << lev) + 1;
    c.scenario.T_end = 0.1;
    c.scenario.scheme.scheme = Scheme::imex_be;
    set_dt(c, 1e-3 / std::pow(4.0, lev));
    c.diagnostics.cadence = 1;
    c.diagnostics.keep_states = true;
    const Trajectory tr = run(c);
    const Grid1D g = c.scenario.grid();
    double m = 0.0;
    for (std::size_t k = 1; k < tr.states.size(); ++k) {
      const ZResidual r =
          z_residual(tr.states[k - 1], tr.states[k], c.scenario.laws, c.scenario.a, c.scenario.laws.gamma0, 1.0, g);
      left_exact &= r.z_left == 0.0;
      m = std::max(m, r.norm);
    }
    maxres.push_back(m);
  }
  const double o1 = std::log2(maxres[0] / maxres[1]), o2 = std::log2(maxres[1] / maxres[2]);
  return {left_exact && o1 >= 1.0 && o2 >= 1.0,
          fmt("z(0,t) == 0 at every sample: %s; max residual %.2e, %.2e, %.2e; observed orders %.2f, %.2f (>= 1)",
              left_exact ? "yes" : "no", maxres[0], maxres[1], maxres[2], o1, o2)};
}

// 6. Maximal-regularity estimator on the single eigenmode.
Verdict k_estimator() {
  const Grid1D g(1.0, 129);
  const double lambda = M_PI * M_PI / 4.0;
  const double exact = (1.0 - std::exp(-4.0 * lambda)) / (4.0 * lambda);
  const KEstimate one = estimate_K(4.0, 1.0, 1, g, 1.0);
  const double rel = std::abs(one.K_est - exact) / exact;
  const KEstimate many = estimate_K(4.0, 1.0, 16, Grid1D(1.0, 65), 1.0, 0);
  bool mono = true;
  for (std::size_t i = 1; i < many.running_max.size(); ++i) mono &= many.running_max[i] >= many.running_max[i - 1];
  const KEstimate fewer = estimate_K(4.0, 1.0, 8, Grid1D(1.0, 65), 1.0, 0);
  mono &= fewer.K_est <= many.K_est;
  return {rel <= 0.02 && mono, fmt("eigenmode ratio %.6f vs closed form %.6f, rel error %.1e (<= 2e-2); K_est over "
                                   "16 trials %.4f, nondecreasing: %s",
                                   one.K_est, exact, rel, many.K_est, mono ? "yes" : "no")};
}

// 7. Theory constants saturate their defining inequalities.
Verdict theory_identities() {
  double worst = 0.0;
  for (double K : {1e-3, 0.1, 0.918, 1.0, 42.0})
    for (double a : {0.5, 1.0, 3.0})
      for (double T0 : {0.25, 1.0, 10.0}) {
        const TheoryConstants c = theory_constants(K, a, T0, 1.0);
        const double d = 256.0 * K * std::pow(c.delta_est, 4);
        const double k = 27.0 * 32.0 * K * std::pow(a, 4) * T0 / std::pow(c.kappa_est, 3);
        worst = std::max({worst, std::abs(d - 0.25) / 0.25, std::abs(k - 0.25) / 0.25});
      }
  return {worst <= 1e-12, fmt("largest relative deviation from 0.25: %.1e (<= 1e-12)", worst)};
}

// 8. Positivity of the temperature.
Verdict positivity() {
  bool ok = true;
  double worst_frac = 0.0, worst_min = INFINITY;
  std::string bad;
  for (const Scenario& s : builtin_battery()) {
    double frac[2];
    for (int lev = 0; lev < 2; ++lev) {
      RunConfig c;
      c.scenario = s;
      c.scenario.scheme.positivity_policy = PositivityPolicy::clamp_and_count;
      if (lev == 1) set_dt(c, 0.5 * s.scheme.dt_max);
      c.diagnostics.cadence = 1000000;
      const Trajectory tr = run(c);
      frac[lev] = tr.completed ? tr.clamp_fraction(s.n) : INFINITY;
    }
    RunConfig r;
    r.scenario = s;
    r.scenario.scheme.positivity_policy = PositivityPolicy::reject_step;
    r.diagnostics.cadence = 1000000;
    const Trajectory tr = run(r);
    const bool here = frac[0] <= 1e-4 && frac[1] <= frac[0] && tr.completed && tr.min_theta >= -1e-8;
    if (!here) bad += " " + s.name;
    ok &= here;
    worst_frac = std::max(worst_frac, frac[0]);
    worst_min = std::min(worst_min, tr.min_theta);
  }
  return {ok, fmt("largest clamp fraction %.2e (<= 1e-4, nonincreasing at dt/2); min theta with reject_step %.3e "
                  "(>= -1e-8)%s%s",
                  worst_frac, worst_min, bad.empty() ? "" : "; failed on", bad.c_str())};
}

// 9. eta cascade on frozen coefficients.
Verdict eta_cascade() {
  EtaProblem p;
  p.grid = Grid1D(1.0, 65);
  p.A = Field(65, 1.0);
  p.g = sample(p.grid, [](double x) { return std::sin(M_PI * x); });
  p.v0 = sample(p.grid, [](double x) { return std::sin(M_PI * x); });
  p.u0 = sample(p.grid, [](double x) { return 0.5 * std::sin(2 * M_PI * x); });
  p.v0[64] = p.u0[64] = 0.0;
  p.T = 1.0;
  p.dt = 1e-3;
  const std::vector<double> etas{1e-1, 1e-2, 1e-3};
  const EtaLadderReport r = eta_ladder(p, etas);
  return {r.strictly_decreasing && r.slope >= 0.5,
          fmt("sup y = %.3e, %.3e, %.3e; strictly decreasing: %s; log-log slope %.3f (>= 0.5)", r.sup_y[0],
              r.sup_y[1], r.sup_y[2], r.strictly_decreasing ? "yes" : "no", r.slope)};
}

// 10. Mollification cascade on rough data.
Verdict eps_cascade_check() {
  const CascadeReport r = eps_cascade(base("rough_cascade"), {0.5, 0.25, 0.125, 0.0625, 0.03125});
  std::string d;
  for (std::size_t k = 0; k < r.dist_theta.size(); ++k) d += fmt(" %.2e", r.dist_theta[k]);
  return {r.completed && !r.any_blowup && r.cauchy_u && r.cauchy_v && r.cauchy_theta,
          fmt("strictly decreasing u/v/theta: %d/%d/%d; blow-up: %s; theta distances%s", r.cauchy_u, r.cauchy_v,
              r.cauchy_theta, r.any_blowup ? "yes" : "no", d.c_str())};
}

// 11. delta and alpha sweeps stay bounded.
Verdict sweeps() {
  RunConfig c = base("coupled");
  c.out_dir = (std::filesystem::temp_directory_path() / "tve_acceptance_sweeps").string();
  const KEstimate K = estimate_K(4.0, c.scenario.laws.gamma0, c.diagnostics.K_trials, Grid1D(1.0, c.diagnostics.K_n),
                                 c.diagnostics.T0, c.seed);
  const double delta_est = theory_constants(K.K_est, c.scenario.a, c.diagnostics.T0, 1.0).delta_est;
  bool ok = true;
  std::size_t n = 0;
  for (const SweepSpec& s : {SweepSpec{SweepAxis::delta, {0.0, delta_est / 2, delta_est}, 3},
                             SweepSpec{SweepAxis::alpha, {0.9, 1.0, 1.45}, 3}})
    for (const SweepRow& r : execute_sweep(c, s)) {
      ok &= r.exit_code == exit_ok && !r.blowup && r.monitors_finite;
      ++n;
    }
  std::filesystem::remove_all(c.out_dir);
  return {ok, fmt("%zu points (delta_est = %.4f), all completed with finite monitors and no blow-up: %s", n,
                  delta_est, ok ? "yes" : "no")};
}

// 12. Manufactured-solution convergence.
Verdict mms() {
  RunConfig c = base("mms_exponential");
  c.scenario.scheme.scheme = Scheme::imex_cn;
  ConvergeSpec spec;
  spec.n_values = {33, 65, 129};
  spec.dt_base = 1e-2;
  spec.dt_quadratic = false;
  const ConvergenceReport r = convergence_study(c, spec);
  const double lo = std::min({r.u.fitted_order, r.v.fitted_order, r.theta.fitted_order});
  return {lo >= 1.8, fmt("observed spatial orders u %.3f, v %.3f, theta %.3f (>= 1.8)", r.u.fitted_order,
                         r.v.fitted_order, r.theta.fitted_order)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"energy law", energy_law},
      {"energy bounds from data", energy_bounds},
      {"heat eigenmode oracle", heat_oracle},
      {"Lq rate identity", lq_identity},
      {"z-transform diagnostics", z_diagnostics},
      {"maximal-regularity estimator", k_estimator},
      {"theory constants", theory_identities},
      {"temperature positivity", positivity},
      {"eta cascade", eta_cascade},
      {"eps cascade", eps_cascade_check},
      {"delta and alpha sweeps", sweeps},
      {"MMS convergence", mms},
  };
  int failed = 0, index = 0;
  for (const auto& [name, check] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %-30s %s [%.2fs]\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
