#pragma once

#include <tve/errors.hpp>
#include <tve/run.hpp>
#include <tve/scenarios.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tve {

// Run configuration files are INI: [scenario], [laws], [initial], [scheme],
// [diagnostics], [output], plus optional [sweep] and [converge] sections.

enum class SweepAxis { delta, alpha, kappa, n, dt };

struct SweepSpec {
  SweepAxis axis = SweepAxis::delta;
  std::vector<double> values;
  std::size_t workers = 1;
  bool operator==(const SweepSpec&) const = default;
};

struct ConvergeSpec {
  std::vector<std::size_t> n_values{33, 65, 129};
  double dt_base = 1e-3;        ///< dt at the first (coarsest) n
  bool dt_quadratic = true;     ///< dt scales like dx^2 (true) or dx (false)
  bool operator==(const ConvergeSpec&) const = default;
};

struct ConfigFile {
  RunConfig run;
  std::optional<SweepSpec> sweep;
  std::optional<ConvergeSpec> converge;
};

namespace detail {

template <class E>
struct EnumNames {
  std::vector<std::pair<E, const char*>> items;

  const char* name(E e) const {
    for (auto& [v, n] : items)
      if (v == e) return n;
    return "?";
  }
  E parse(const std::string& s, const std::string& field) const {
    for (auto& [v, n] : items)
      if (s == n) return v;
    std::string allowed;
    for (auto& [v, n] : items) allowed += (allowed.empty() ? "" : ", ") + std::string(n);
    throw ConfigError(field, "unknown value '" + s + "' (expected one of: " + allowed + ")");
  }
};

inline const EnumNames<GammaFamily>& gamma_names() {
  static const EnumNames<GammaFamily> e{
      {{GammaFamily::constant, "constant"}, {GammaFamily::saturating, "saturating"}, {GammaFamily::tabulated, "tabulated"}}};
  return e;
}
inline const EnumNames<FFamily>& f_names() {
  static const EnumNames<FFamily> e{{{FFamily::zero, "zero"},
                                     {FFamily::linear, "linear"},
                                     {FFamily::power, "power"},
                                     {FFamily::tabulated, "tabulated"}}};
  return e;
}
inline const EnumNames<FieldKind>& kind_names() {
  static const EnumNames<FieldKind> e{{{FieldKind::zero, "zero"},
                                       {FieldKind::constant, "constant"},
                                       {FieldKind::sine, "sine"},
                                       {FieldKind::cosine, "cosine"},
                                       {FieldKind::tent, "tent"},
                                       {FieldKind::corner, "corner"}}};
  return e;
}
inline const EnumNames<Regularity>& regularity_names() {
  static const EnumNames<Regularity> e{{{Regularity::smooth, "smooth"}, {Regularity::rough, "rough"}}};
  return e;
}
inline const EnumNames<ExpectedBehavior>& tag_names() {
  static const EnumNames<ExpectedBehavior> e{{{ExpectedBehavior::stationary, "stationary"},
                                              {ExpectedBehavior::closed_form, "closed_form"},
                                              {ExpectedBehavior::mms, "mms"},
                                              {ExpectedBehavior::generic, "generic"}}};
  return e;
}
inline const EnumNames<Scheme>& scheme_names() {
  static const EnumNames<Scheme> e{{{Scheme::imex_be, "imex_be"}, {Scheme::imex_cn, "imex_cn"}}};
  return e;
}
inline const EnumNames<PositivityPolicy>& policy_names() {
  static const EnumNames<PositivityPolicy> e{
      {{PositivityPolicy::clamp_and_count, "clamp_and_count"}, {PositivityPolicy::reject_step, "reject_step"}}};
  return e;
}
inline const EnumNames<SweepAxis>& axis_names() {
  static const EnumNames<SweepAxis> e{{{SweepAxis::delta, "delta"},
                                       {SweepAxis::alpha, "alpha"},
                                       {SweepAxis::kappa, "kappa"},
                                       {SweepAxis::n, "n"},
                                       {SweepAxis::dt, "dt"}}};
  return e;
}

inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

inline double to_double(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + s + "'");
  }
}

inline long long to_int(const std::string& s, const std::string& field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got '" + s + "'");
  }
}

inline std::size_t to_size(const std::string& s, const std::string& field) {
  const long long v = to_int(s, field);
  if (v < 0) throw ConfigError(field, "must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline bool to_bool(const std::string& s, const std::string& field) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(field, "expected true or false, got '" + s + "'");
}

inline std::vector<double> to_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(to_double(item, field));
  }
  return out;
}

// Key/value view of one section with unknown-key detection.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    if (auto v = tree_->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'))) return *v;
    return std::nullopt;
  }

  void finish() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_)
      if (!seen_.count(key)) throw ConfigError(key, "unknown key in section [" + name_ + "]");
  }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> seen_;
};

inline void read_generator(Section& sec, const std::string& prefix, FieldGenerator& g) {
  if (auto v = sec.get(prefix + "_kind")) g.kind = kind_names().parse(*v, prefix + "_kind");
  if (auto v = sec.get(prefix + "_base")) g.base = to_double(*v, prefix + "_base");
  if (auto v = sec.get(prefix + "_amplitude")) g.amplitude = to_double(*v, prefix + "_amplitude");
  if (auto v = sec.get(prefix + "_mode")) g.mode = static_cast<int>(to_int(*v, prefix + "_mode"));
  if (auto v = sec.get(prefix + "_center")) g.center = to_double(*v, prefix + "_center");
}

inline void write_generator(std::ostream& os, const std::string& prefix, const FieldGenerator& g) {
  os << prefix << "_kind = " << kind_names().name(g.kind) << "\n"
     << prefix << "_base = " << fmt(g.base) << "\n"
     << prefix << "_amplitude = " << fmt(g.amplitude) << "\n"
     << prefix << "_mode = " << g.mode << "\n"
     << prefix << "_center = " << fmt(g.center) << "\n";
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base_dir) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return path.lexically_normal().string();
}

}  // namespace detail

/**
 * Parses configuration text. [scenario] name selects a built-in scenario as the starting
 * point (unknown names start from defaults); every other key overrides one field. Table
 * paths are resolved against `base_dir`. Unknown sections or keys are errors.
 */
inline ConfigFile parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> sections{"scenario", "laws",   "initial", "scheme",
                                              "diagnostics", "output", "sweep", "converge"};
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) throw ConfigError(name, "unknown section");
    if (child.empty() && !child.data().empty()) throw ConfigError(name, "key outside any section");
  }
  const auto section = [&](const std::string& name) {
    auto it = tree.find(name);
    return detail::Section(it == tree.not_found() ? nullptr : &it->second, name);
  };
  using namespace detail;

  ConfigFile cf;
  RunConfig& rc = cf.run;
  Scenario& sc = rc.scenario;

  {
    Section s = section("scenario");
    if (auto v = s.get("name")) {
      bool found = false;
      for (auto list : {builtin_battery(), extra_scenarios()})
        for (auto& b : list)
          if (b.name == *v) {
            sc = b;
            found = true;
          }
      sc.name = *v;
      (void)found;
    } else {
      sc.name = "custom";
    }
    if (auto v = s.get("tag")) sc.tag = tag_names().parse(*v, "tag");
    if (auto v = s.get("mms_id")) sc.mms_id = *v;
    if (auto v = s.get("a")) sc.a = to_double(*v, "a");
    if (auto v = s.get("L")) sc.L = to_double(*v, "L");
    if (auto v = s.get("n")) sc.n = to_size(*v, "n");
    if (auto v = s.get("T_end")) sc.T_end = to_double(*v, "T_end");
    s.finish();
  }
  {
    Section s = section("laws");
    MaterialLaws& l = sc.laws;
    if (auto v = s.get("gamma_family")) l.gamma_family = gamma_names().parse(*v, "gamma_family");
    if (auto v = s.get("f_family")) l.f_family = f_names().parse(*v, "f_family");
    if (auto v = s.get("gamma0")) l.gamma0 = to_double(*v, "gamma0");
    if (auto v = s.get("delta")) l.delta = to_double(*v, "delta");
    if (auto v = s.get("K_f")) l.K_f = to_double(*v, "K_f");
    if (auto v = s.get("alpha")) l.alpha = to_double(*v, "alpha");
    if (auto v = s.get("gamma_table"); v && !v->empty())
      l.gamma_table = load_table(resolve_path(*v, base_dir), "gamma_table");
    if (auto v = s.get("f_table"); v && !v->empty()) l.f_table = load_table(resolve_path(*v, base_dir), "f_table");
    s.finish();
  }
  {
    Section s = section("initial");
    if (auto v = s.get("regularity")) sc.initial.regularity = regularity_names().parse(*v, "regularity");
    read_generator(s, "u0", sc.initial.u0);
    read_generator(s, "v0", sc.initial.v0);
    read_generator(s, "theta0", sc.initial.theta0);
    s.finish();
  }
  {
    Section s = section("scheme");
    SchemeConfig& c = sc.scheme;
    if (auto v = s.get("scheme")) c.scheme = scheme_names().parse(*v, "scheme");
    if (auto v = s.get("dt_initial")) c.dt_initial = to_double(*v, "dt_initial");
    if (auto v = s.get("dt_max")) c.dt_max = to_double(*v, "dt_max");
    if (auto v = s.get("cfl_safety")) c.cfl_safety = to_double(*v, "cfl_safety");
    if (auto v = s.get("positivity_policy")) c.positivity_policy = policy_names().parse(*v, "positivity_policy");
    if (auto v = s.get("adaptive")) c.adaptive = to_bool(*v, "adaptive");
    if (auto v = s.get("positivity_tolerance")) c.positivity_tolerance = to_double(*v, "positivity_tolerance");
    if (auto v = s.get("max_retries")) c.max_retries = static_cast<int>(to_int(*v, "max_retries"));
    if (auto v = s.get("pivot_tolerance")) c.pivot_tolerance = to_double(*v, "pivot_tolerance");
    s.finish();
  }
  {
    Section s = section("diagnostics");
    DiagnosticConfig& d = rc.diagnostics;
    if (auto v = s.get("cadence")) d.cadence = to_size(*v, "cadence");
    if (auto v = s.get("q")) d.q = to_double(*v, "q");
    if (auto v = s.get("kappa")) d.kappa = to_double(*v, "kappa");
    if (auto v = s.get("T0")) d.T0 = to_double(*v, "T0");
    if (auto v = s.get("blowup_threshold")) d.blowup_threshold = to_double(*v, "blowup_threshold");
    if (auto v = s.get("blowup_window")) d.blowup_window = to_size(*v, "blowup_window");
    if (auto v = s.get("blowup_rate_min")) d.blowup_rate_min = to_double(*v, "blowup_rate_min");
    if (auto v = s.get("K_trials")) d.K_trials = to_size(*v, "K_trials");
    if (auto v = s.get("K_n")) d.K_n = to_size(*v, "K_n");
    if (auto v = s.get("dump_fields")) d.dump_fields = to_bool(*v, "dump_fields");
    s.finish();
  }
  {
    Section s = section("output");
    if (auto v = s.get("out_dir")) rc.out_dir = *v;
    if (auto v = s.get("seed")) rc.seed = static_cast<std::uint64_t>(to_size(*v, "seed"));
    s.finish();
  }
  if (tree.find("sweep") != tree.not_found()) {
    Section s = section("sweep");
    SweepSpec sw;
    if (auto v = s.get("axis")) sw.axis = axis_names().parse(*v, "axis");
    if (auto v = s.get("values")) sw.values = to_list(*v, "values");
    if (auto v = s.get("workers")) sw.workers = to_size(*v, "workers");
    s.finish();
    if (sw.values.empty()) throw ConfigError("values", "sweep value list is empty");
    cf.sweep = sw;
  }
  if (tree.find("converge") != tree.not_found()) {
    Section s = section("converge");
    ConvergeSpec cv;
    if (auto v = s.get("n_values")) {
      cv.n_values.clear();
      for (double x : to_list(*v, "n_values")) cv.n_values.push_back(static_cast<std::size_t>(x));
    }
    if (auto v = s.get("dt_base")) cv.dt_base = to_double(*v, "dt_base");
    if (auto v = s.get("dt_scaling")) {
      if (*v == "dx2") cv.dt_quadratic = true;
      else if (*v == "dx") cv.dt_quadratic = false;
      else throw ConfigError("dt_scaling", "expected dx or dx2, got '" + *v + "'");
    }
    s.finish();
    if (cv.n_values.size() < 2) throw ConfigError("n_values", "need at least two resolutions");
    cf.converge = cv;
  }
  return cf;
}

inline ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

/// Writes every field explicitly so that parse_config(serialize(c)).run == c.
inline std::string serialize(const RunConfig& rc) {
  using namespace detail;
  const Scenario& sc = rc.scenario;
  const MaterialLaws& l = sc.laws;
  const SchemeConfig& c = sc.scheme;
  const DiagnosticConfig& d = rc.diagnostics;
  std::ostringstream os;
  os << "[scenario]\n"
     << "name = " << sc.name << "\n"
     << "tag = " << tag_names().name(sc.tag) << "\n"
     << "mms_id = " << sc.mms_id << "\n"
     << "a = " << fmt(sc.a) << "\nL = " << fmt(sc.L) << "\nn = " << sc.n << "\nT_end = " << fmt(sc.T_end) << "\n\n";
  os << "[laws]\n"
     << "gamma_family = " << gamma_names().name(l.gamma_family) << "\n"
     << "f_family = " << f_names().name(l.f_family) << "\n"
     << "gamma0 = " << fmt(l.gamma0) << "\ndelta = " << fmt(l.delta) << "\nK_f = " << fmt(l.K_f)
     << "\nalpha = " << fmt(l.alpha) << "\n"
     << "gamma_table = " << l.gamma_table.source << "\n"
     << "f_table = " << l.f_table.source << "\n\n";
  os << "[initial]\nregularity = " << regularity_names().name(sc.initial.regularity) << "\n";
  write_generator(os, "u0", sc.initial.u0);
  write_generator(os, "v0", sc.initial.v0);
  write_generator(os, "theta0", sc.initial.theta0);
  os << "\n[scheme]\n"
     << "scheme = " << scheme_names().name(c.scheme) << "\n"
     << "dt_initial = " << fmt(c.dt_initial) << "\ndt_max = " << fmt(c.dt_max) << "\ncfl_safety = " << fmt(c.cfl_safety)
     << "\npositivity_policy = " << policy_names().name(c.positivity_policy) << "\n"
     << "adaptive = " << (c.adaptive ? "true" : "false") << "\n"
     << "positivity_tolerance = " << fmt(c.positivity_tolerance) << "\nmax_retries = " << c.max_retries
     << "\npivot_tolerance = " << fmt(c.pivot_tolerance) << "\n\n";
  os << "[diagnostics]\n"
     << "cadence = " << d.cadence << "\nq = " << fmt(d.q) << "\nkappa = " << fmt(d.kappa) << "\nT0 = " << fmt(d.T0)
     << "\nblowup_threshold = " << fmt(d.blowup_threshold) << "\nblowup_window = " << d.blowup_window
     << "\nblowup_rate_min = " << fmt(d.blowup_rate_min) << "\nK_trials = " << d.K_trials << "\nK_n = " << d.K_n
     << "\ndump_fields = " << (d.dump_fields ? "true" : "false") << "\n\n";
  os << "[output]\nout_dir = " << rc.out_dir << "\nseed = " << rc.seed << "\n";
  return os.str();
}

inline const char* axis_name(SweepAxis a) { return detail::axis_names().name(a); }

}  // namespace tve
