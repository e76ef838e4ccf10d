#include <tve/grid.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace tve;
using Catch::Approx;

namespace {

double max_interior_err(const Field& a, const Field& b) {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_err(const Field& a, const Field& b) { return max_abs(map(a, b, std::minus<>())); }

}  // namespace

TEST_CASE("Grid1D geometry and validation") {
  const Grid1D g(2.0, 5);
  CHECK(g.dx() == 0.5);
  CHECK(g.x(4) == 2.0);
  CHECK(g.nodes().back() == 2.0);
  CHECK(g.doubled().n() == 9);
  CHECK(g.doubled().length() == 4.0);
  CHECK(g.doubled().dx() == g.dx());
  CHECK_THROWS_AS(Grid1D(1.0, 2), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(0.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(Grid1D(-1.0, 5), std::invalid_argument);
}

TEST_CASE("d1 is exact on low-degree polynomials") {
  const Grid1D g(1.0, 11);
  CHECK(max_abs(d1(Field(11, 3.0), g)) == 0.0);
  const Field lin = sample(g, [](double x) { return x; });
  for (double d : d1(lin, g)) CHECK(d == Approx(1.0).epsilon(1e-13));
  const Field quad = sample(g, [](double x) { return x * x; });
  const Field dq = d1(quad, g);
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(dq[i] == Approx(2.0 * g.x(i)).margin(1e-12));
}

TEST_CASE("d2 boundary treatments") {
  const Grid1D g(1.0, 21);
  CHECK(max_abs(d2(Field(21, 4.0), g, BcKind::neumann_both)) == 0.0);

  const Field q = sample(g, [](double x) { return x * (1.0 - x); });
  const Field dq = d2(q, g, BcKind::dirichlet_both);
  for (double d : dq) CHECK(d == Approx(-2.0).epsilon(1e-10));

  const double k = M_PI / 2.0;
  const Field mode = sample(g, [k](double x) { return std::sin(k * x); });
  const Field dm = d2(mode, g, BcKind::mixed_left_dirichlet_right_neumann);
  const Field expect = map(mode, [k](double m) { return -k * k * m; });
  CHECK(max_err(dm, expect) < 0.5 * k * k * k * k * g.dx() * g.dx());
}

TEST_CASE("div_flux reduces to c * d2 for constant coefficients") {
  const Grid1D g(1.0, 17);
  const Field w = sample(g, [](double x) { return std::sin(3.0 * x) + x * x; });
  const Field c(17, 2.5);
  const Field lhs = div_flux(c, w, g);
  const Field rhs = map(d2(w, g, BcKind::dirichlet_both), [](double d) { return 2.5 * d; });
  CHECK(max_interior_err(lhs, rhs) < 1e-11);

  const Field q = sample(g, [](double x) { return x * (1.0 - x); });
  for (std::size_t i = 1; i + 1 < g.n(); ++i) CHECK(div_flux(Field(17, 1.0), q, g)[i] == Approx(-2.0).epsilon(1e-10));

  Field bad(17, 1.0);
  bad[3] = 0.0;
  CHECK_THROWS_AS(div_flux(bad, w, g), DomainError);
}

TEST_CASE("div_flux on a linear field matches c_x w_x to second order") {
  const auto c_fn = [](double x) { return 1.0 + 0.5 * std::sin(x); };
  const auto err_at = [&](std::size_t n) {
    const Grid1D g(1.0, n);
    const Field w = sample(g, [](double x) { return 3.0 * x; });
    const Field exact = sample(g, [](double x) { return 0.5 * std::cos(x) * 3.0; });
    return max_interior_err(div_flux(sample(g, c_fn), w, g), exact);
  };
  const double e1 = err_at(33), e2 = err_at(65);
  CHECK(e2 < 1e-4);
  CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("trapezoid quadrature") {
  const Grid1D g(1.0, 101);
  CHECK(integrate(Field(101, 1.0), g) == Approx(1.0).epsilon(1e-14));
  CHECK(integrate(sample(g, [](double x) { return x; }), g) == Approx(0.5).epsilon(1e-14));
  // Error bound (dx^2 / 12) max|f''| L = 1.6667e-5 for x^2.
  CHECK(std::abs(integrate(sample(g, [](double x) { return x * x; }), g) - 1.0 / 3.0) <= 2e-5);
}

TEST_CASE("cumulative integral and gradient energy") {
  const Grid1D g(1.0, 11);
  const Field c = cumulative_integral(sample(g, [](double x) { return 2.0 * x; }), g);
  CHECK(c[0] == 0.0);
  for (std::size_t i = 0; i < g.n(); ++i) CHECK(c[i] == Approx(g.x(i) * g.x(i)).margin(1e-3));
  CHECK(gradient_energy(sample(g, [](double x) { return 2.0 * x; }), g) == Approx(4.0).epsilon(1e-13));
}

TEST_CASE("reflect_extend is an exact mirror about L") {
  const Grid1D g(1.0, 9);
  const Field r = reflect_extend(Field(9, 2.0), g);
  CHECK(r.size() == 17);
  for (double v : r) CHECK(v == 2.0);

  const Field tent = reflect_extend(sample(g, [](double x) { return x; }), g);
  CHECK(tent[8] == 1.0);
  CHECK(tent[16] == 0.0);
  for (std::size_t i = 0; i <= 8; ++i) CHECK(tent[8 + i] == tent[8 - i]);

  const Field mode = sample(g, [](double x) { return std::sin(M_PI * x / 2.0); });
  const Field ext = reflect_extend(mode, g);
  CHECK(ext[8] == Approx(1.0));
  for (std::size_t i = 0; i <= 8; ++i) CHECK(ext[8 + i] == ext[8 - i]);
}

TEST_CASE("summation by parts for Dirichlet fields") {
  const Grid1D g(1.0, 129);
  Field w = sample(g, [](double x) { return std::sin(M_PI * x); });
  w[0] = w[128] = 0.0;
  const double lhs = integrate(map(w, d2(w, g, BcKind::dirichlet_both), std::multiplies<>()), g);
  // The discrete identity is exact against the cell-gradient energy.
  CHECK(lhs == Approx(-gradient_energy(w, g)).epsilon(1e-12));
  // And both approximate -int w_x^2 = -pi^2/2.
  CHECK(lhs == Approx(-M_PI * M_PI / 2.0).epsilon(1e-3));
}

TEST_CASE("operators converge at second order") {
  const auto f = [](double x) { return std::exp(x) * std::cos(2.0 * x); };
  const auto fp = [](double x) { return std::exp(x) * (std::cos(2.0 * x) - 2.0 * std::sin(2.0 * x)); };
  const auto fpp = [](double x) { return std::exp(x) * (-3.0 * std::cos(2.0 * x) - 4.0 * std::sin(2.0 * x)); };
  const auto c = [](double x) { return 2.0 + x * x; };
  const double exact_int = (std::exp(1.0) * (std::cos(2.0) + 2.0 * std::sin(2.0)) - 1.0) / 5.0;

  std::vector<double> e_d1, e_d2, e_flux, e_int;
  for (std::size_t n : {33, 65, 129}) {
    const Grid1D g(1.0, n);
    const Field F = sample(g, f);
    e_d1.push_back(max_err(d1(F, g), sample(g, fp)));
    e_d2.push_back(max_interior_err(d2(F, g, BcKind::dirichlet_both), sample(g, fpp)));
    const Field flux_exact = sample(g, [&](double x) { return 2.0 * x * fp(x) + c(x) * fpp(x); });
    e_flux.push_back(max_interior_err(div_flux(sample(g, c), F, g), flux_exact));
    e_int.push_back(std::abs(integrate(F, g) - exact_int));
  }
  for (const auto* e : {&e_d1, &e_d2, &e_flux, &e_int}) {
    INFO("errors " << (*e)[0] << " " << (*e)[1] << " " << (*e)[2]);
    CHECK(std::log2((*e)[1] / (*e)[2]) >= 1.9);
  }
}

TEST_CASE("size mismatches are rejected") {
  const Grid1D g(1.0, 5);
  CHECK_THROWS_AS(d1(Field(4), g), std::invalid_argument);
  CHECK_THROWS_AS(d2(Field(6), g, BcKind::neumann_both), std::invalid_argument);
  CHECK_THROWS_AS(integrate(Field(3), g), std::invalid_argument);
  CHECK_THROWS_AS(reflect_extend(Field(3), g), std::invalid_argument);
}
