#include <tve/model.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

using namespace tve;
using Catch::Approx;

namespace {

MaterialLaws saturating_linear() {
  MaterialLaws l;
  l.gamma_family = GammaFamily::saturating;
  l.gamma0 = 1.0;
  l.delta = 0.1;
  l.f_family = FFamily::linear;
  l.K_f = 1.0;
  l.alpha = 1.0;
  return l;
}

}  // namespace

TEST_CASE("eval_gamma examples") {
  MaterialLaws c;
  c.gamma_family = GammaFamily::constant;
  c.gamma0 = 1.0;
  CHECK(eval_gamma(c, 7.3) == 1.0);
  const MaterialLaws s = saturating_linear();
  CHECK(eval_gamma(s, 1.0) == Approx(1.05).epsilon(1e-15));
  CHECK(eval_gamma(s, 0.0) == 1.0);
  CHECK(eval_gamma(s, 1e12) < 1.1);
  CHECK_THROWS_AS(eval_gamma(s, -0.1), DomainError);
}

TEST_CASE("eval_f examples") {
  MaterialLaws l = saturating_linear();
  CHECK(eval_f(l, 3.0) == 3.0);
  l.f_family = FFamily::zero;
  CHECK(eval_f(l, 5.0) == 0.0);
  l.f_family = FFamily::power;
  l.alpha = 1.2;
  CHECK(eval_f(l, 0.0) == 0.0);
  CHECK(eval_f(l, 1.0) == Approx(std::pow(2.0, 1.2) - 1.0));
  CHECK_THROWS_AS(eval_f(l, -1.0), DomainError);
}

TEST_CASE("derivatives of the closed-form laws") {
  MaterialLaws l = saturating_linear();
  const double h = 1e-6;
  for (double xi : {0.5, 2.0, 10.0}) {
    CHECK(eval_gamma_prime(l, xi) == Approx((eval_gamma(l, xi + h) - eval_gamma(l, xi - h)) / (2 * h)).epsilon(1e-6));
    CHECK(eval_f_prime(l, xi) == Approx(1.0));
  }
  l.f_family = FFamily::power;
  l.alpha = 1.3;
  for (double xi : {0.5, 2.0})
    CHECK(eval_f_prime(l, xi) == Approx((eval_f(l, xi + h) - eval_f(l, xi - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("validate_hypotheses") {
  SECTION("saturating gamma with linear f passes") {
    const ValidationReport r = validate_hypotheses(saturating_linear(), 100.0, 2001);
    CHECK(r.passed());
    CHECK(r.first_failure().empty());
  }
  SECTION("alpha = 1.6 fails with the range reason") {
    MaterialLaws l = saturating_linear();
    l.f_family = FFamily::power;
    l.alpha = 1.6;
    const ValidationReport r = validate_hypotheses(l, 100.0, 2001);
    CHECK_FALSE(r.passed());
    CHECK(r.first_failure() == "alpha outside (0, 3/2)");
  }
  SECTION("tabulated gamma with an entry below gamma0 names the sample") {
    MaterialLaws l = saturating_linear();
    l.gamma_family = GammaFamily::tabulated;
    l.gamma_table = {{0.0, 1.0, 2.0, 5.0}, {1.0, 1.05, 0.9, 1.08}, ""};
    const ValidationReport r = validate_hypotheses(l, 10.0, 11);
    CHECK_FALSE(r.passed());
    CHECK(r.first_failure().find("gamma(2) = 0.9") != std::string::npos);
  }
  SECTION("linear f with alpha < 1 violates the growth bound") {
    MaterialLaws l = saturating_linear();
    l.alpha = 0.5;
    const ValidationReport r = validate_hypotheses(l, 100.0, 101);
    CHECK_FALSE(r.passed());
    CHECK(r.first_failure().find("exceeds K_f") != std::string::npos);
  }
  SECTION("tabulated f with f(0) != 0 fails") {
    MaterialLaws l = saturating_linear();
    l.f_family = FFamily::tabulated;
    l.f_table = {{0.0, 1.0}, {0.5, 1.0}, ""};
    const ValidationReport r = validate_hypotheses(l, 10.0, 11);
    CHECK_FALSE(r.passed());
  }
}

TEST_CASE("property: admissible families satisfy the hypothesis bounds") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> pos(0.1, 5.0), del(0.0, 2.0), alp(0.05, 1.49), xi(0.0, 1e3);
  for (int trial = 0; trial < 200; ++trial) {
    MaterialLaws l;
    l.gamma_family = trial % 2 ? GammaFamily::saturating : GammaFamily::constant;
    l.f_family = std::array{FFamily::zero, FFamily::power, FFamily::linear}[trial % 3];
    l.gamma0 = pos(rng);
    l.delta = del(rng);
    l.K_f = pos(rng);
    l.alpha = l.f_family == FFamily::linear ? 1.0 + 0.49 * (alp(rng) / 1.49) : alp(rng);
    CHECK(eval_f(l, 0.0) == 0.0);
    for (int k = 0; k < 50; ++k) {
      const double x = xi(rng);
      const double g = eval_gamma(l, x);
      CHECK(g >= l.gamma0);
      CHECK(g <= l.gamma0 + l.delta);
      CHECK(std::abs(eval_f(l, x)) <= l.K_f * std::pow(x + 1.0, l.alpha) * (1 + 1e-14));
    }
    CHECK(validate_hypotheses(l, 100.0, 201).passed());
  }
}

TEST_CASE("tables load, interpolate and clamp") {
  const auto path = std::filesystem::temp_directory_path() / "tve_test_table.txt";
  {
    std::ofstream out(path);
    out << "# xi value\n0 1.0\n1 1.2  # comment\n\n3 1.4\n";
  }
  const Table t = load_table(path.string(), "gamma_table");
  CHECK(t.xi.size() == 3);
  CHECK(t(0.5) == Approx(1.1));
  CHECK(t(2.0) == Approx(1.3));
  CHECK(t(10.0) == 1.4);
  CHECK(t.slope(0.5) == Approx(0.2));
  CHECK(t.slope(5.0) == 0.0);
  CHECK_THROWS_AS(load_table("/nonexistent/table.txt", "f_table"), ConfigError);
  {
    std::ofstream out(path);
    out << "0 1\n0 2\n";
  }
  CHECK_THROWS_AS(load_table(path.string(), "gamma_table"), ConfigError);
  std::filesystem::remove(path);
}

TEST_CASE("InitialData::check") {
  const Grid1D g(1.0, 5);
  InitialData d{Field(5), Field(5), Field(5, 1.0), Regularity::smooth};
  CHECK_NOTHROW(d.check(g));
  d.u0[0] = 1e-3;
  CHECK_THROWS_AS(d.check(g), ConfigError);
  d.u0[0] = 0.0;
  d.theta0[2] = -0.1;
  CHECK_THROWS_AS(d.check(g), ConfigError);
  d.theta0 = Field(4, 1.0);
  CHECK_THROWS_AS(d.check(g), ConfigError);
}

TEST_CASE("data_bound_M examples") {
  const Grid1D g(1.0, 201);
  const Field z(201);
  CHECK(data_bound_M({z, z, z, Regularity::smooth}, g).M == 0.0);
  CHECK(data_bound_M({z, z, Field(201, 1.0), Regularity::smooth}, g).M == Approx(1.0).epsilon(1e-14));

  const Field u0 = sample(g, [](double x) { return x * (1.0 - x); });
  const DataBoundM m = data_bound_M({u0, z, z, Regularity::smooth}, g);
  CHECK(m.terms[0] == Approx(0.25).epsilon(1e-12));
  CHECK(m.terms[1] == Approx(1.0).epsilon(1e-12));
  CHECK(m.terms[2] == Approx(2.0).epsilon(1e-10));
  CHECK(m.M == Approx(3.25).epsilon(1e-4));
  for (double t : m.terms) CHECK(m.M >= t);

  CHECK_THROWS_AS(data_bound_M({Field(3), z, z, Regularity::smooth}, g), ConfigError);
}

TEST_CASE("data_bound_M is monotone under scaling") {
  const Grid1D g(1.0, 65);
  const Field u0 = sample(g, [](double x) { return std::sin(M_PI * x); });
  const Field v0 = sample(g, [](double x) { return 0.3 * std::sin(2 * M_PI * x); });
  const Field th = sample(g, [](double x) { return 1.0 + 0.5 * std::cos(M_PI * x); });
  double prev = 0.0;
  for (double lam : {1.0, 1.5, 2.0, 4.0}) {
    const auto sc = [lam](const Field& f) { return map(f, [lam](double x) { return lam * x; }); };
    const double M = data_bound_M({sc(u0), sc(v0), sc(th), Regularity::smooth}, g).M;
    CHECK(M >= prev);
    prev = M;
  }
}

TEST_CASE("lambda1_bound examples and monotonicity") {
  const Lambda1 z = lambda1_bound(0.0, 1.0, 1.0);
  CHECK(z.B == 0.0);
  CHECK(z.v2_bound == 0.0);
  const Lambda1 one = lambda1_bound(1.0, 1.0, 1.0);
  CHECK(one.B == 2.0);
  CHECK(one.v2_bound == 4.0);
  CHECK(one.ux2_bound == 4.0);
  CHECK(one.theta_bound == 2.0);
  const Lambda1 two = lambda1_bound(2.0, 2.0, 1.0);
  CHECK(two.B == 8.0);
  CHECK(two.v2_bound == 16.0);
  CHECK(two.ux2_bound == 8.0);
  CHECK(two.theta_bound == 8.0);

  CHECK(lambda1_bound(3.0, 1.0, 1.0).B > lambda1_bound(2.0, 1.0, 1.0).B);
  CHECK(lambda1_bound(2.0, 1.0, 2.0).B > lambda1_bound(2.0, 1.0, 1.0).B);
  CHECK(lambda1_bound(2.0, 4.0, 1.0).ux2_bound <= lambda1_bound(2.0, 1.0, 1.0).ux2_bound);
  CHECK_THROWS_AS(lambda1_bound(1.0, 0.0, 1.0), DomainError);
}
