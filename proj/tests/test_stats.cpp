#include <doctest.h>

#include "mfl/stats.hpp"

#include <cmath>
#include <random>

using namespace mfl;

TEST_SUITE("stats") {

TEST_CASE("least squares recovers an exact line") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(0.25 * v - 3);
  const LinearFit f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(-3).epsilon(1e-14));
  CHECK(f.residual < 1e-14);
  CHECK(f.n == 5);
  std::vector<double> p;
  for (double v : x) p.push_back(2 * std::pow(v, -0.5));
  CHECK(loglog_fit(x, p).slope == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("slope interval covers the truth") {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> nd;
  int covered = 0;
  for (int t = 0; t < 400; ++t) {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
      x.push_back(i);
      y.push_back(1.5 * i + nd(gen));
    }
    const LinearFit f = linear_fit(x, y);
    covered += f.ci_lo <= 1.5 && 1.5 <= f.ci_hi;
  }
  CHECK(covered / 400.0 == doctest::Approx(0.95).epsilon(0.04));
}

TEST_CASE("Student quantiles") {
  CHECK(student_t975(1) == doctest::Approx(12.706).epsilon(2e-2));
  CHECK(student_t975(10) == doctest::Approx(2.228).epsilon(1e-3));
  CHECK(student_t975(30) == doctest::Approx(2.042).epsilon(1e-3));
  CHECK(student_t975(100000) == doctest::Approx(1.960).epsilon(1e-3));
}

TEST_CASE("mean and standard errors") {
  const MeanSE m = mean_se({1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.se == doctest::Approx(std::sqrt(5.0 / 3 / 4)).epsilon(1e-14));
  // AR(1) series: batch means see the inflation (1 + a) / (1 - a) of the variance of the mean.
  const double a = 0.9;
  double ratio = 0;
  for (int seed = 0; seed < 10; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    std::vector<double> v(200000);
    double x = 0;
    for (double& s : v) s = x = a * x + nd(gen);
    ratio += batch_means(v).se / mean_se(v).se / 10;
  }
  CHECK(ratio == doctest::Approx(std::sqrt((1 + a) / (1 - a))).epsilon(0.1));
}

TEST_CASE("Kolmogorov–Smirnov statistics") {
  CHECK(kolmogorov_q(0.0) == 1.0);
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.0494).epsilon(1e-2));
  std::mt19937_64 gen(3);
  std::exponential_distribution<double> ed(1.0);
  std::vector<double> e(2000);
  for (double& s : e) s = ed(gen);
  const KsResult k = ks_exponential(e);
  CHECK(k.p_value > 0.01);
  CHECK(k.statistic < 0.05);
  const KsResult point = ks_exponential(std::vector<double>(500, 1.0));
  CHECK(point.statistic == doctest::Approx(1 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(point.p_value < 1e-6);
  CHECK(ks_two_sample(e, e).statistic == 0.0);
  const KsResult disjoint = ks_two_sample({1, 2, 3}, {4, 5, 6});
  CHECK(disjoint.statistic == 1.0);
}

}  // TEST_SUITE
