#include <tve/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

struct Options {
  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::optional<std::uint64_t> seed;
};

tve::ConfigFile load(const Options& o) {
  tve::ConfigFile cf = tve::load_config(o.config);
  if (!o.out.empty()) cf.run.out_dir = o.out;
  if (o.seed) cf.run.seed = *o.seed;
  if (cf.sweep && o.workers > 0) cf.sweep->workers = o.workers;
  return cf;
}

int cmd_run(const Options& o) {
  const tve::ConfigFile cf = load(o);
  const tve::RunArtifacts art = tve::execute_run(cf.run);
  const auto& tr = art.trajectory;
  std::cout << "run '" << cf.run.scenario.name << "': " << tve::detail::status_of(tr) << " at t = " << tr.final_state.t
            << " after " << tr.steps << " steps; artifacts in " << cf.run.out_dir << "\n";
  if (!tr.error.empty()) std::cerr << "error: " << tr.error << "\n";
  return art.exit_code;
}

int cmd_sweep(const Options& o) {
  const tve::ConfigFile cf = load(o);
  if (!cf.sweep) throw tve::ConfigError("sweep", "config has no [sweep] section");
  std::filesystem::create_directories(cf.run.out_dir);
  const auto rows = tve::execute_sweep(cf.run, *cf.sweep);
  tve::detail::write_text(std::filesystem::path(cf.run.out_dir) / "sweep.csv", tve::sweep_csv(rows, cf.sweep->axis));
  std::size_t failed = 0;
  for (const auto& r : rows) failed += r.exit_code != tve::exit_ok;
  std::cout << "sweep over " << tve::axis_name(cf.sweep->axis) << ": " << rows.size() << " points, " << failed
            << " not completed; sweep.csv in " << cf.run.out_dir << "\n";
  return tve::exit_ok;
}

int cmd_converge(const Options& o, bool mms_only) {
  const tve::ConfigFile cf = load(o);
  if (mms_only && cf.run.scenario.tag != tve::ExpectedBehavior::mms)
    throw tve::ConfigError("tag", "mms-verify needs a manufactured-solution scenario");
  const tve::ConvergeSpec spec = cf.converge.value_or(tve::ConvergeSpec{});
  const tve::ConvergenceReport rep = tve::convergence_study(cf.run, spec);
  tve::write_convergence(rep, cf.run.out_dir);
  for (const auto& [name, f] : {std::pair{"u", &rep.u}, std::pair{"v", &rep.v}, std::pair{"theta", &rep.theta}}) {
    std::cout << name << ": ";
    if (f->degenerate)
      std::cout << "errors at roundoff (degenerate fit)\n";
    else
      std::cout << "observed order " << f->fitted_order << "\n";
  }
  if (!rep.note.empty()) std::cout << rep.note << "\n";
  return tve::exit_ok;
}

int cmd_report(const std::string& dir) {
  try {
    std::cout << tve::render_report(dir);
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tve::exit_config;
  }
  return tve::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermoviscoelastic 1D simulator and diagnostics"};
  app.require_subcommand(1);
  Options o;
  std::string report_dir;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "run configuration (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides [output] out_dir)");
    sub->add_option("--workers", o.workers, "parallel sweep workers");
    sub->add_option("--seed", o.seed, "seed for the K(p, D) trials");
  };
  CLI::App* run = app.add_subcommand("run", "integrate one configuration");
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  CLI::App* converge = app.add_subcommand("converge", "grid-refinement study on an exact-solution scenario");
  CLI::App* mms = app.add_subcommand("mms-verify", "convergence study on a manufactured solution");
  for (CLI::App* s : {run, sweep, converge, mms}) add_common(s);
  CLI::App* report = app.add_subcommand("report", "summarize a run directory as markdown");
  report->add_option("dir", report_dir, "run artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tve::exit_config;
  }

  try {
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*converge) return cmd_converge(o, false);
    if (*mms) return cmd_converge(o, true);
    if (*report) return cmd_report(report_dir);
  } catch (const tve::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return tve::exit_config;
  } catch (const tve::StepError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return tve::exit_solver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tve::exit_solver;
  }
  return tve::exit_ok;
}
