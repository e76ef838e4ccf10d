#pragma once

#include <tve/errors.hpp>
#include <tve/grid.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace tve {

enum class GammaFamily { constant, saturating, tabulated };
enum class FFamily { zero, linear, power, tabulated };

/// Knot table (xi strictly increasing) with piecewise-linear interpolation, clamped outside.
struct Table {
  std::vector<double> xi;
  std::vector<double> value;
  std::string source;  // file path the table was read from, if any

  bool empty() const noexcept { return xi.empty(); }

  double operator()(double x) const {
    if (x <= xi.front()) return value.front();
    if (x >= xi.back()) return value.back();
    const auto hi = static_cast<std::size_t>(std::upper_bound(xi.begin(), xi.end(), x) - xi.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xi[lo]) / (xi[hi] - xi[lo]);
    return value[lo] + w * (value[hi] - value[lo]);
  }

  double slope(double x) const {
    if (x < xi.front() || x >= xi.back()) return 0.0;
    const auto hi = static_cast<std::size_t>(std::upper_bound(xi.begin(), xi.end(), x) - xi.begin());
    const std::size_t lo = hi - 1;
    return (value[hi] - value[lo]) / (xi[hi] - xi[lo]);
  }

  void check(const std::string& field) const {
    if (xi.size() < 2 || xi.size() != value.size()) throw ConfigError(field, "table needs at least two (xi, value) rows");
    for (std::size_t i = 1; i < xi.size(); ++i)
      if (!(xi[i] > xi[i - 1])) throw ConfigError(field, "table xi column must be strictly increasing");
  }

  bool operator==(const Table&) const = default;
};

/// Reads a two-column whitespace-separated (xi, value) file; '#' starts a comment.
inline Table load_table(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open table file '" + path + "'");
  Table t;
  t.source = path;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    if (!(ls >> x)) continue;
    if (!(ls >> y)) throw ConfigError(field, "malformed table row '" + line + "'");
    t.xi.push_back(x);
    t.value.push_back(y);
  }
  t.check(field);
  return t;
}

/**
 * Temperature-dependent viscosity gamma and thermal coupling f, together with the
 * hypothesis parameters they are checked against.
 *
 *   gamma: constant  gamma0
 *          saturating gamma0 + delta * xi / (1 + xi)
 *          tabulated  piecewise linear in the knot table
 *   f:     zero, linear K_f * xi, power K_f * ((xi + 1)^alpha - 1), tabulated
 */
struct MaterialLaws {
  GammaFamily gamma_family = GammaFamily::constant;
  FFamily f_family = FFamily::linear;
  double gamma0 = 1.0;
  double delta = 0.0;
  double K_f = 1.0;
  double alpha = 1.0;
  Table gamma_table;
  Table f_table;

  bool operator==(const MaterialLaws&) const = default;
};

namespace detail {
inline void require_nonnegative(double xi) {
  if (!(xi >= 0.0)) throw DomainError("material law evaluated at negative temperature " + std::to_string(xi));
}
}  // namespace detail

inline double eval_gamma(const MaterialLaws& laws, double xi) {
  detail::require_nonnegative(xi);
  switch (laws.gamma_family) {
    case GammaFamily::constant:
      return laws.gamma0;
    case GammaFamily::saturating:
      return laws.gamma0 + laws.delta * xi / (1.0 + xi);
    case GammaFamily::tabulated:
      return laws.gamma_table(xi);
  }
  return laws.gamma0;
}

inline double eval_gamma_prime(const MaterialLaws& laws, double xi) {
  detail::require_nonnegative(xi);
  switch (laws.gamma_family) {
    case GammaFamily::constant:
      return 0.0;
    case GammaFamily::saturating:
      return laws.delta / ((1.0 + xi) * (1.0 + xi));
    case GammaFamily::tabulated:
      return laws.gamma_table.slope(xi);
  }
  return 0.0;
}

inline double eval_f(const MaterialLaws& laws, double xi) {
  detail::require_nonnegative(xi);
  switch (laws.f_family) {
    case FFamily::zero:
      return 0.0;
    case FFamily::linear:
      return laws.K_f * xi;
    case FFamily::power:
      return laws.K_f * (std::pow(xi + 1.0, laws.alpha) - 1.0);
    case FFamily::tabulated:
      return laws.f_table(xi);
  }
  return 0.0;
}

inline double eval_f_prime(const MaterialLaws& laws, double xi) {
  detail::require_nonnegative(xi);
  switch (laws.f_family) {
    case FFamily::zero:
      return 0.0;
    case FFamily::linear:
      return laws.K_f;
    case FFamily::power:
      return laws.K_f * laws.alpha * std::pow(xi + 1.0, laws.alpha - 1.0);
    case FFamily::tabulated:
      return laws.f_table.slope(xi);
  }
  return 0.0;
}

struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string reason;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }

  /// First failing check's reason, or empty.
  std::string first_failure() const {
    for (const auto& c : checks)
      if (!c.passed) return c.reason;
    return {};
  }
};

/**
 * Checks gamma0 <= gamma <= gamma0 + delta, f(0) = 0, |f| <= K_f (xi+1)^alpha and
 * 0 < alpha < 3/2 on n_samples uniform points of [0, xi_max] plus every table knot.
 * Failures are reported, never thrown.
 */
inline ValidationReport validate_hypotheses(const MaterialLaws& laws, double xi_max = 100.0, int n_samples = 2001) {
  ValidationReport report;
  auto add = [&](std::string name, bool ok, std::string reason) {
    report.checks.push_back({std::move(name), ok, ok ? std::string{} : std::move(reason)});
  };

  add("gamma0_positive", laws.gamma0 > 0.0, "gamma0 must be positive");
  add("delta_nonnegative", laws.delta >= 0.0, "delta must be nonnegative");
  add("K_f_positive", laws.K_f > 0.0, "K_f must be positive");
  add("alpha_range", laws.alpha > 0.0 && laws.alpha < 1.5, "alpha outside (0, 3/2)");
  if (laws.gamma_family == GammaFamily::tabulated && laws.gamma_table.empty()) {
    add("gamma_table", false, "tabulated gamma has no table");
    return report;
  }
  if (laws.f_family == FFamily::tabulated && laws.f_table.empty()) {
    add("f_table", false, "tabulated f has no table");
    return report;
  }
  if (!(xi_max > 0.0) || n_samples < 2) {
    add("sampling", false, "xi_max must be positive and n_samples >= 2");
    return report;
  }

  std::vector<double> points;
  for (int k = 0; k < n_samples; ++k) points.push_back(xi_max * k / (n_samples - 1));
  for (const Table* t : {&laws.gamma_table, &laws.f_table})
    for (double x : t->xi)
      if (x >= 0.0) points.push_back(x);
  std::sort(points.begin(), points.end());

  // Relative slack for roundoff in the closed-form families.
  const double slack = 1e-12;
  std::string gamma_fail, f_fail;
  for (double xi : points) {
    const double g = eval_gamma(laws, xi);
    if (gamma_fail.empty() && (g < laws.gamma0 * (1.0 - slack) || g > (laws.gamma0 + laws.delta) * (1.0 + slack))) {
      std::ostringstream os;
      os << "gamma(" << xi << ") = " << g << " outside [gamma0, gamma0 + delta] = [" << laws.gamma0 << ", "
         << laws.gamma0 + laws.delta << "]";
      gamma_fail = os.str();
    }
    const double f = eval_f(laws, xi);
    const double bound = laws.K_f * std::pow(xi + 1.0, laws.alpha);
    if (f_fail.empty() && std::abs(f) > bound * (1.0 + slack)) {
      std::ostringstream os;
      os << "|f(" << xi << ")| = " << std::abs(f) << " exceeds K_f (xi+1)^alpha = " << bound;
      f_fail = os.str();
    }
  }
  add("gamma_box", gamma_fail.empty(), gamma_fail);
  const double f0 = eval_f(laws, 0.0);
  add("f_zero_at_zero", f0 == 0.0, "f(0) = " + std::to_string(f0) + " is not zero");
  add("f_growth", f_fail.empty(), f_fail);
  return report;
}

enum class Regularity { smooth, rough };

/// Initial displacement, velocity and temperature on a grid.
struct InitialData {
  Field u0;
  Field v0;
  Field theta0;
  Regularity regularity = Regularity::smooth;

  /// Throws ConfigError when a field is missized, u0/v0 do not vanish at the ends, or theta0 < 0.
  void check(const Grid1D& grid) const {
    for (auto [f, name] : {std::pair{&u0, "u0"}, std::pair{&v0, "v0"}, std::pair{&theta0, "theta0"}})
      if (f->size() != grid.n()) throw ConfigError(name, "size does not match grid");
    for (auto [f, name] : {std::pair{&u0, "u0"}, std::pair{&v0, "v0"}})
      if (f->front() != 0.0 || f->back() != 0.0) throw ConfigError(name, "must vanish at both ends");
    for (double th : theta0)
      if (!(th >= 0.0)) throw ConfigError("theta0", "temperature must be nonnegative");
  }
};

struct DataBoundM {
  double M = 0.0;
  /// The seven summands in order: |u0|_inf, |u0x|_inf, |u0xx|_2, |v0|_inf, |v0x|_4, |theta0|_inf, |theta0x|_2.
  std::array<double, 7> terms{};
};

/// Discrete evaluation of the aggregate initial-data bound M.
inline DataBoundM data_bound_M(const InitialData& data, const Grid1D& grid) {
  for (auto [f, name] : {std::pair{&data.u0, "u0"}, std::pair{&data.v0, "v0"}, std::pair{&data.theta0, "theta0"}})
    if (f->size() != grid.n()) throw ConfigError(name, "size does not match grid");
  const auto sq = [](double v) { return v * v; };
  const auto p4 = [](double v) { return v * v * v * v; };

  DataBoundM b;
  b.terms[0] = max_abs(data.u0);
  b.terms[1] = max_abs(d1(data.u0, grid));
  b.terms[2] = std::sqrt(integrate_of(d2(data.u0, grid, BcKind::dirichlet_both), grid, sq));
  b.terms[3] = max_abs(data.v0);
  b.terms[4] = std::pow(integrate_of(d1(data.v0, grid), grid, p4), 0.25);
  b.terms[5] = max_abs(data.theta0);
  b.terms[6] = std::sqrt(integrate_of(d1(data.theta0, grid), grid, sq));
  for (double t : b.terms) b.M += t;
  return b;
}

/// Energy-based bounds: B = M^2 L/2 + a M^2 L/2 + M L, giving int v^2 <= 2B, int u_x^2 <= 2B/a, int theta <= B.
struct Lambda1 {
  double B = 0.0;
  double v2_bound = 0.0;
  double ux2_bound = 0.0;
  double theta_bound = 0.0;
};

inline Lambda1 lambda1_bound(const DataBoundM& m, double a, double length) {
  if (!(a > 0.0)) throw DomainError("elastic coefficient a must be positive");
  if (!(length > 0.0)) throw DomainError("length must be positive");
  const double M = m.M;
  Lambda1 out;
  out.B = 0.5 * M * M * length + 0.5 * a * M * M * length + M * length;
  out.v2_bound = 2.0 * out.B;
  out.ux2_bound = 2.0 * out.B / a;
  out.theta_bound = out.B;
  return out;
}

inline Lambda1 lambda1_bound(double M, double a, double length) {
  DataBoundM m;
  m.M = M;
  return lambda1_bound(m, a, length);
}

}  // namespace tve
