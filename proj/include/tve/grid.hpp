#pragma once

#include <tve/errors.hpp>

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tve {

/**
 * Uniform mesh on [0, L] with n nodes, x_i = i * dx.
 * Invariants: L > 0, n >= 3, dx = L / (n - 1).
 */
class Grid1D {
 public:
  Grid1D(double length, std::size_t n) : length_(length), n_(n) {
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("grid length must be positive");
    if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    dx_ = length / static_cast<double>(n - 1);
  }

  double length() const noexcept { return length_; }
  std::size_t n() const noexcept { return n_; }
  double dx() const noexcept { return dx_; }
  double x(std::size_t i) const noexcept { return static_cast<double>(i) * dx_; }

  std::vector<double> nodes() const {
    std::vector<double> xs(n_);
    for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
    xs.back() = length_;
    return xs;
  }

  /// Grid on [0, 2L] sharing this spacing (2n - 1 nodes).
  Grid1D doubled() const { return Grid1D(2.0 * length_, 2 * n_ - 1); }

  bool operator==(const Grid1D&) const = default;

 private:
  double length_;
  std::size_t n_;
  double dx_ = 0.0;
};

enum class BcKind { dirichlet_both, neumann_both, mixed_left_dirichlet_right_neumann };

/// Nodal values co-located with a Grid1D.
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : values_(n, value) {}
  explicit Field(std::vector<double> values) : values_(std::move(values)) {}
  Field(std::initializer_list<double> values) : values_(values) {}

  std::size_t size() const noexcept { return values_.size(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double front() const { return values_.front(); }
  double back() const { return values_.back(); }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<const double> view() const noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const Field&) const = default;

 private:
  std::vector<double> values_;
};

/// Samples `fn(x)` at every node.
inline Field sample(const Grid1D& grid, const std::function<double(double)>& fn) {
  Field out(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) out[i] = fn(grid.x(i));
  return out;
}

/// Elementwise map over one field.
template <class F>
Field map(const Field& a, F&& fn) {
  Field out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

/// Elementwise map over two fields of equal size.
template <class F>
Field map(const Field& a, const Field& b, F&& fn) {
  if (a.size() != b.size()) throw std::invalid_argument("field size mismatch");
  Field out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i], b[i]);
  return out;
}

inline double max_abs(const Field& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

inline void require_size(const Field& f, const Grid1D& grid, const char* what = "field") {
  if (f.size() != grid.n())
    throw std::invalid_argument(std::string(what) + " has " + std::to_string(f.size()) + " values, grid has " +
                                std::to_string(grid.n()) + " nodes");
}

/// First derivative: central differences inside, one-sided second-order stencils at the ends.
inline Field d1(const Field& f, const Grid1D& grid) {
  require_size(f, grid);
  const std::size_t n = grid.n();
  const double h = grid.dx();
  Field out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return out;
}

namespace detail {

// One-sided second derivative at a Dirichlet end; exact on cubics when 4 nodes are available.
inline double one_sided_d2(double f0, double f1, double f2, double f3, bool have_four, double h) {
  if (have_four) return (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h);
  return (f0 - 2.0 * f1 + f2) / (h * h);
}

}  // namespace detail

/**
 * Second derivative with boundary treatment per `bc`.
 * Neumann ends use the mirrored ghost node f_{-1} = f_1 (zero flux).
 * Dirichlet ends return the one-sided second derivative of the stored data.
 */
inline Field d2(const Field& f, const Grid1D& grid, BcKind bc) {
  require_size(f, grid);
  const std::size_t n = grid.n();
  const double h = grid.dx();
  const double h2 = h * h;
  Field out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / h2;

  const bool four = n >= 4;
  const auto left_dirichlet = [&] {
    out[0] = detail::one_sided_d2(f[0], f[1], f[2], four ? f[3] : 0.0, four, h);
  };
  const auto right_dirichlet = [&] {
    out[n - 1] = detail::one_sided_d2(f[n - 1], f[n - 2], f[n - 3], four ? f[n - 4] : 0.0, four, h);
  };
  const auto left_neumann = [&] { out[0] = 2.0 * (f[1] - f[0]) / h2; };
  const auto right_neumann = [&] { out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) / h2; };

  switch (bc) {
    case BcKind::dirichlet_both:
      left_dirichlet();
      right_dirichlet();
      break;
    case BcKind::neumann_both:
      left_neumann();
      right_neumann();
      break;
    case BcKind::mixed_left_dirichlet_right_neumann:
      left_dirichlet();
      right_neumann();
      break;
  }
  return out;
}

/// Arithmetic-mean coefficient at the half node between i and i+1.
inline double half_node_coef(const Field& coef, std::size_t i) { return 0.5 * (coef[i] + coef[i + 1]); }

/**
 * Conservative discretization of (c w_x)_x via half-node fluxes.
 * Interior: [c_{i+1/2}(w_{i+1}-w_i) - c_{i-1/2}(w_i-w_{i-1})] / dx^2.
 * End nodes use the product-rule form c w_xx + c_x w_x with one-sided stencils.
 */
inline Field div_flux(const Field& coef, const Field& field, const Grid1D& grid) {
  require_size(coef, grid, "coefficient");
  require_size(field, grid);
  for (double c : coef)
    if (!(c > 0.0)) throw DomainError("div_flux coefficient must be positive");
  const std::size_t n = grid.n();
  const double h2 = grid.dx() * grid.dx();
  Field out(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double right = half_node_coef(coef, i) * (field[i + 1] - field[i]);
    const double left = half_node_coef(coef, i - 1) * (field[i] - field[i - 1]);
    out[i] = (right - left) / h2;
  }
  const Field wxx = d2(field, grid, BcKind::dirichlet_both);
  const Field wx = d1(field, grid);
  const Field cx = d1(coef, grid);
  out[0] = coef[0] * wxx[0] + cx[0] * wx[0];
  out[n - 1] = coef[n - 1] * wxx[n - 1] + cx[n - 1] * wx[n - 1];
  return out;
}

/// Trapezoid rule over the grid.
inline double integrate(const Field& f, const Grid1D& grid) {
  require_size(f, grid);
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
  return s * grid.dx();
}

/// Trapezoid rule applied to g(f_i) without materializing the mapped field.
template <class G>
double integrate_of(const Field& f, const Grid1D& grid, G&& g) {
  require_size(f, grid);
  const std::size_t n = f.size();
  double s = 0.5 * (g(f[0]) + g(f[n - 1]));
  for (std::size_t i = 1; i + 1 < n; ++i) s += g(f[i]);
  return s * grid.dx();
}

/**
 * Sum over cells of dx * ((w_{i+1} - w_i)/dx)^2: the exact integral of w_x^2 for the
 * piecewise-linear interpolant of the nodal data.
 */
inline double gradient_energy(const Field& w, const Grid1D& grid) {
  require_size(w, grid);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    const double d = w[i + 1] - w[i];
    s += d * d;
  }
  return s / grid.dx();
}

/// Running trapezoid integral from the left end; value 0 at x = 0.
inline Field cumulative_integral(const Field& f, const Grid1D& grid) {
  require_size(f, grid);
  Field out(f.size());
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * grid.dx() * (f[i - 1] + f[i]);
  return out;
}

/// Even reflection about x = L onto the doubled grid (2n - 1 nodes on [0, 2L]).
inline Field reflect_extend(const Field& f, const Grid1D& grid) {
  require_size(f, grid);
  const std::size_t n = grid.n();
  Field out(2 * n - 1);
  for (std::size_t i = 0; i < n; ++i) out[i] = f[i];
  for (std::size_t i = n; i < 2 * n - 1; ++i) out[i] = f[2 * (n - 1) - i];
  return out;
}

/// Discrete W^{1,2} norm: sqrt(int f^2 + int f_x^2), derivative via d1.
inline double w12_norm(const Field& f, const Grid1D& grid) {
  const Field fx = d1(f, grid);
  return std::sqrt(integrate_of(f, grid, [](double v) { return v * v; }) +
                   integrate_of(fx, grid, [](double v) { return v * v; }));
}

}  // namespace tve
