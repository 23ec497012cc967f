#include <doctest.h>

#include "mfl/inequalities.hpp"

#include <cmath>

using namespace mfl;

namespace {

constexpr double kE = 2.718281828459045;

MatX diag2(double a, double b) {
  MatX M = MatX::Zero(2, 2);
  M(0, 0) = a;
  M(1, 1) = b;
  return M;
}

void check_monotone(const std::vector<double>& v) {
  double prev = -INFINITY;
  for (double x : v) {
    if (std::isnan(x)) continue;
    CHECK(x >= prev - 1e-15);
    prev = x;
  }
}

}  // namespace

TEST_SUITE("inequalities") {

TEST_CASE("log grid") {
  const auto g = log_grid(1e-3, 1, 10);
  REQUIRE(g.size() == 31);
  CHECK(g.front() == doctest::Approx(1e-3));
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(g[10] == doctest::Approx(1e-2));
  CHECK_THROWS_AS(log_grid(1, 0.5, 10), Error);
}

TEST_CASE("pure confinement profiles") {
  for (int d : {1, 2}) {
    for (double kappa : {1.0, 2.5}) {
      const auto spec = make_quadratic(kappa, d);
      const auto r = log_grid(1e-6, 1, 5);
      const InequalityProfile p = lojasiewicz_profile(spec, cube(d, 2.0), 11, r);
      CHECK(p.tight);
      CHECK(p.pl_holds);
      CHECK(p.theta_at_zero == 0.0);
      for (size_t i = 0; i < r.size(); ++i) {
        CHECK(std::abs(p.theta1[i] - r[i] / (2 * kappa)) <= 1e-8 * std::max(1.0, r[i]));
        CHECK(std::abs(p.phi1[i] - r[i]) <= 1e-8 * std::max(1.0, r[i]));
        CHECK(std::abs(p.theta_tilde[i] - r[i] / (2 * kappa)) <= 1e-8 * std::max(1.0, r[i]));
      }
      CHECK(p.theta_exponent == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(p.phi_exponent == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("degenerate pca profile") {
  const auto spec = make_pca(diag2(1, 0.25), 1.0);
  const InequalityProfile p = lojasiewicz_profile(spec, cube(4, 1.5), 15);
  CHECK(p.tight);
  CHECK_FALSE(p.pl_holds);
  CHECK(p.theta_exponent == doctest::Approx(2.0 / 3).epsilon(0.075));
  CHECK(p.phi_exponent == doctest::Approx(2.0).epsilon(0.05));
  check_monotone(p.theta1);
  check_monotone(p.phi1);
  for (size_t i = 1; i < p.r.size(); ++i)
    CHECK(p.theta_tilde[i] - p.r[i] / (2 * p.kappa) >= p.theta_tilde[i - 1] - p.r[i - 1] / (2 * p.kappa) - 1e-15);
  for (size_t i = 0; i < p.r.size(); ++i) CHECK(p.theta_tilde[i] >= p.theta1[i] - 1e-15);

  // The same tabulated Theta carries the coercivity order through g and Phi.
  std::vector<double> r, th;
  for (size_t i = 0; i < p.r.size(); ++i)
    if (p.theta1[i] > 0) {
      r.push_back(p.r[i]);
      th.push_back(p.theta1[i]);
    }
  const GPhi gp = g_and_phi_from_theta(r, th, p.kappa);
  std::vector<double> xs, ph;
  for (double x : log_grid(gp.phi_x[2], 10 * gp.phi_x[2], 10)) {
    xs.push_back(x);
    ph.push_back(gp.phi_at(x));
  }
  CHECK(loglog_fit(xs, ph).slope == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("double well profile is defective") {
  const auto spec = make_quartic1d(1.0);
  const InequalityProfile p = lojasiewicz_profile(spec, cube(1, 2.0), 41);
  CHECK(p.theta_at_zero == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.theta1.front() >= 0.25 - 1e-12);
  CHECK_FALSE(p.tight);
  CHECK_FALSE(p.pl_holds);
  CHECK(p.min_value == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(p.minimizers.size() == 2);
  check_monotone(p.theta1);
  check_monotone(p.phi1);
}

TEST_CASE("tightness is equivalent to a vanishing defect") {
  const MatX M = diag2(1, 0.25);
  for (double kappa : {0.5, 1.0, 2.0}) {
    const InequalityProfile p = lojasiewicz_profile(make_pca(M, kappa), cube(4, 1.5), 7, log_grid(1e-6, 1, 2));
    CHECK(p.tight == (kappa >= 1.0));
    CHECK((p.theta_at_zero == 0.0) == p.tight);
  }
}

TEST_CASE("profile inputs") {
  CHECK_THROWS_AS(lojasiewicz_profile(make_quartic1d(1.0), cube(1, 0.5), 11), Error);
  CHECK_THROWS_AS(lojasiewicz_profile(make_quadratic(1.0, 1), cube(1, 1.0), 11, {1.0, 0.5}), Error);
}

TEST_CASE("grid PL constant") {
  const PlConstant flat = pl_constant(make_quadratic(2.0, 1), cube(1, 2.0), 41);
  CHECK(std::abs(flat.value - 0.5) <= 1e-12);
  CHECK_FALSE(flat.diverged);
  const PlConstant pca = pl_constant(make_pca(diag2(1, 0.25), 2.0), cube(4, 1.0), 21);
  CHECK(std::isfinite(pca.value));
  CHECK_FALSE(pca.diverged);
  CHECK(pca.refined_value == doctest::Approx(pca.value).epsilon(0.02));
  const PlConstant dw = pl_constant(make_quartic1d(1.0), cube(1, 2.0), 41);
  CHECK(dw.diverged);
  CHECK(std::abs(dw.argmax[0]) < 0.2);
}

TEST_CASE("log-Sobolev constant bundle") {
  const LsiConstantBundle b = lsi_constant_bundle(12, 12, 4, 1, 1.0, 100, 2);
  CHECK(b.upper_tight == doctest::Approx(2 * kE / std::sqrt(1200.0)).epsilon(1e-14));
  CHECK(b.upper_tight == doctest::Approx(0.1569).epsilon(1e-3));
  CHECK(b.rho_R == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(b.A == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(b.B == doctest::Approx(6 * std::log(37.0) + 24).epsilon(1e-14));
  REQUIRE(b.degenerate_available);
  CHECK(b.c3 == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(b.theta_constant == doctest::Approx(256.0 / 12).epsilon(1e-14));
  CHECK(b.theta_exponent == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(b.xi_exponent == doctest::Approx(0.5).epsilon(1e-14));
  for (double r : {1e-6, 0.5, 1.0, 7.0}) {
    CHECK(b.theta(r) == doctest::Approx(b.theta_constant * std::max(r, std::pow(r, 2.0 / 3))).epsilon(1e-14));
    CHECK(b.theta_tilde(r) >= b.theta(r) - 1e-15);
    CHECK(b.xi(r) == doctest::Approx(b.xi_constant * std::max(r, std::sqrt(r))).epsilon(1e-14));
  }
  for (double kappa : {0.5, 3.0}) {
    const LsiConstantBundle be = lsi_constant_bundle(kappa, kappa, 2, 1, kappa, 50, 1);
    CHECK(be.upper_tight == doctest::Approx(2 * kE / (50 * kappa)).epsilon(1e-14));
    CHECK_FALSE(be.degenerate_available);
    CHECK_THROWS_AS(be.theta(1.0), Error);
  }
  try {
    lsi_constant_bundle(12, 12, 4, 1, 1.0, 0.01, 2);
    FAIL("expected a parameter error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parameter);
    CHECK(std::string(e.what()).find("N >= 1") != std::string::npos);
  }
  CHECK_THROWS_AS(lsi_constant_bundle(1, 12, 4, 1, 1.0, 100, 2), Error);
}

TEST_CASE("Poincaré lower bound") {
  const double b2 = std::tgamma(0.75) / std::tgamma(0.25);
  const std::vector<double> N = {10, 30, 100, 300, 1000, 3000, 10000};
  const PoincareBound q = poincare_lower_bound([](double x) { return x * x * x * x; }, N);
  CHECK(q.fit.slope == doctest::Approx(-0.5).epsilon(0.04));
  for (size_t i = 0; i < N.size(); ++i) {
    CHECK(q.bound[i] == doctest::Approx(b2 / std::sqrt(N[i])).epsilon(1e-9));
    CHECK(q.bound[i] <= lsi_constant_bundle(12, 12, 4, 1, 1.0, N[i], 2).upper_tight);
  }
  const PoincareBound g = poincare_lower_bound([](double x) { return x * x / 2; }, N);
  for (size_t i = 0; i < N.size(); ++i) CHECK(g.bound[i] == doctest::Approx(1 / N[i]).epsilon(1e-10));
}

TEST_CASE("g and Phi from a linear Theta") {
  const double kappa = 1.5;
  std::vector<double> r = log_grid(1e-8, 1, 10), th;
  for (double x : r) th.push_back(x / (2 * kappa));
  const GPhi gp = g_and_phi_from_theta(r, th, kappa);
  CHECK(gp.left_exponent == doctest::Approx(1.0).epsilon(1e-10));
  for (double u : {1e-8, 1e-5, 0.01, 0.3}) CHECK(gp.g_at(u) == doctest::Approx(std::sqrt(2 * u / kappa)).epsilon(1e-10));
  for (double x : {1e-7, 1e-4, 0.1}) CHECK(gp.phi_at(x) == doctest::Approx(x).epsilon(1e-8));
}

TEST_CASE("g and Phi from Theta = r^(2/3)") {
  std::vector<double> r = log_grid(1e-12, 1, 10), th;
  for (double x : r) th.push_back(std::pow(x, 2.0 / 3));
  const GPhi gp = g_and_phi_from_theta(r, th, 1.0);
  for (double u : {1e-6, 1e-3, 0.5}) CHECK(gp.g_at(u) == doctest::Approx(4 * std::pow(u, 0.25)).epsilon(1e-8));
  // Phi(x) = (2x)^2 / 256 in closed form.
  for (double x : {1e-3, 0.1, 1.0}) CHECK(gp.phi_at(x) == doctest::Approx(4 * x * x / 256).epsilon(1e-8));
  for (double s = gp.g.front(); s < gp.g.back(); s *= 1.7) CHECK(gp.g_at(gp.g_inverse(s)) == doctest::Approx(s).epsilon(1e-8));
}

TEST_CASE("g is undefined when Theta is too flat at 0") {
  std::vector<double> r = log_grid(1e-8, 1, 10), th;
  for (double x : r) th.push_back(std::pow(x, 0.4));
  try {
    g_and_phi_from_theta(r, th, 1.0);
    FAIL("expected an analytic error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::analytic);
  }
}

TEST_CASE("Curie–Weiss suite") {
  const CurieWeissSuite s = curie_weiss_suite(1.0, {16, 256, 4096, 65536, 1048576});
  CHECK(s.sigma2_c >= 0.45);
  CHECK(s.sigma2_c <= 0.47);
  CHECK(s.lsi_fit.slope == doctest::Approx(0.5).epsilon(0.06));
  CHECK(s.entropy_fit.slope == doctest::Approx(0.25).epsilon(0.08));
  CHECK(std::abs(s.omega_d2) <= 1e-4);
  CHECK(s.omega_d4 > 0);
  CHECK(s.omega_convex_off_zero);
  CHECK(s.omega_degenerate);
  CHECK(s.theta_exponent == doctest::Approx(2.0 / 3).epsilon(0.075));
  for (size_t i = 0; i < s.N.size(); ++i) CHECK(s.lsi_lower[i] == doctest::Approx(s.N[i] * s.barycenter_moment[i]));
}

}  // TEST_SUITE
