#pragma once

#include <tve/errors.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

namespace tve {

/// Tridiagonal system: lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
struct Tridiagonal {
  std::vector<double> lower, diag, upper;

  explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
  std::size_t size() const noexcept { return diag.size(); }

  void identity_row(std::size_t i) {
    lower[i] = upper[i] = 0.0;
    diag[i] = 1.0;
  }
};

/**
 * Thomas algorithm. Requires (weak) diagonal dominance; throws StepError when a row is
 * not dominant or a pivot collapses below `pivot_tol` relative to its row.
 */
inline std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::vector<double> rhs, double pivot_tol = 1e-14) {
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double off = std::abs(m.lower[i]) + std::abs(m.upper[i]);
    if (!(std::abs(m.diag[i]) >= off * (1.0 - 1e-12)))
      throw StepError("tridiagonal system is not diagonally dominant at row " + std::to_string(i));
  }
  std::vector<double> c(n, 0.0);
  double denom = m.diag[0];
  if (!(std::abs(denom) > pivot_tol)) throw StepError("tridiagonal pivot vanished at row 0");
  c[0] = m.upper[0] / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = m.diag[i] - m.lower[i] * c[i - 1];
    const double scale = std::abs(m.diag[i]) + std::abs(m.lower[i]) + std::abs(m.upper[i]);
    if (!(std::abs(denom) > pivot_tol * scale))
      throw StepError("tridiagonal pivot vanished at row " + std::to_string(i));
    c[i] = m.upper[i] / denom;
    rhs[i] = (rhs[i] - m.lower[i] * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return rhs;
}

}  // namespace tve
