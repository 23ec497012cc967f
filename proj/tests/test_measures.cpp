#include <doctest.h>

#include "mfl/gibbs.hpp"
#include "mfl/inequalities.hpp"
#include "mfl/measures.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace mfl;

namespace {

constexpr double kPi = 3.14159265358979323846;

Fn1 gaussian_pdf(double m, double s2) {
  return [=](double x) { return std::exp(-(x - m) * (x - m) / (2 * s2)) / std::sqrt(2 * kPi * s2); };
}

// Brute force over all permutations; the oracle for the exact assignment.
double w2_brute(const MatX& a, const MatX& b) {
  std::vector<int> perm(a.rows());
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double c = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i) c += (a.row(i) - b.row(perm[i])).squaredNorm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best / a.rows());
}

std::vector<double> normal_samples(int n, double m, double s, std::mt19937_64& gen) {
  std::normal_distribution<double> nd(m, s);
  std::vector<double> v(n);
  for (double& x : v) x = nd(gen);
  return v;
}

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("Gaussian entropy and Fisher information") {
  const GaussianSpec rho = local_equilibrium(VecX::Zero(1), 1.0);
  const EntropyFisher a = gaussian_entropy_fisher(GaussianSpec(VecX::Zero(1), 2.0), rho);
  CHECK(a.H == doctest::Approx((1 - std::log(2.0)) / 2).epsilon(1e-14));
  CHECK(a.H == doctest::Approx(0.153426).epsilon(1e-6));
  CHECK(a.I == doctest::Approx(0.5).epsilon(1e-14));
  VecX m = VecX::Zero(2), mp = VecX::Zero(2);
  mp[1] = 3;
  const EntropyFisher b = gaussian_entropy_fisher(local_equilibrium(m, 2.0), local_equilibrium(mp, 2.0));
  CHECK(b.H == doctest::Approx(9.0).epsilon(1e-14));
  CHECK(b.I == doctest::Approx(36.0).epsilon(1e-14));  // |kappa (m - m')|^2
  const EntropyFisher c = gaussian_entropy_fisher(rho, rho);
  CHECK(c.H == 0.0);
  CHECK(c.I == 0.0);
}

TEST_CASE("Gaussian entropy is nonnegative and vanishes only on equal inputs") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.1, 3);
  for (int k = 0; k < 200; ++k) {
    const GaussianSpec a(VecX::Constant(2, u(gen) - 1.5), u(gen)), b(VecX::Constant(2, u(gen) - 1.5), u(gen));
    const EntropyFisher e = gaussian_entropy_fisher(a, b);
    CHECK(e.H > 0);
    CHECK(e.I > 0);
  }
}

TEST_CASE("closed forms match quadrature on tabulated Gaussians") {
  for (double s2 : {0.5, 2.0}) {
    for (double dm : {0.0, 0.7}) {
      const Density1D mu = tabulate(gaussian_pdf(dm, s2), -20, 20, 20000);
      const Density1D rho = tabulate(gaussian_pdf(0, 1), -20, 20, 20000);
      const EntropyFisher q = entropy_fisher(mu, rho);
      const EntropyFisher c = gaussian_entropy_fisher(GaussianSpec(VecX::Constant(1, dm), s2),
                                                      GaussianSpec(VecX::Zero(1), 1.0));
      CHECK(std::abs(q.H - c.H) <= 1e-8);
      CHECK(std::abs(q.I - c.I) <= 1e-8);
    }
  }
}

TEST_CASE("anisotropic Gaussians are rejected") {
  MatX cov = MatX::Identity(2, 2);
  cov(1, 1) = 2;
  CHECK_THROWS_AS(GaussianSpec::from_covariance(VecX::Zero(2), cov), Error);
  CHECK(GaussianSpec::from_covariance(VecX::Zero(2), 3 * MatX::Identity(2, 2)).s2 == 3.0);
}

TEST_CASE("W2 examples") {
  VecX m3 = VecX::Zero(1);
  m3[0] = 3;
  CHECK(w2(local_equilibrium(VecX::Zero(1), 2.0), local_equilibrium(m3, 2.0)) == doctest::Approx(3.0));
  CHECK(w2(std::vector<double>{0, 1}, std::vector<double>{0, 1}) == 0.0);
  const double sorted = w2(std::vector<double>{0, 2}, std::vector<double>{1, 3});
  CHECK(sorted == doctest::Approx(1.0).epsilon(1e-15));
  MatX a(2, 1), b(2, 1);
  a << 0, 2;
  b << 1, 3;
  CHECK(sorted == doctest::Approx(w2_brute(a, b)).epsilon(1e-15));
  CHECK(w2(a, b) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("exact assignment against brute force") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 6, d = 1 + trial % 3;
    MatX a(n, d), b(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        a(i, j) = nd(gen);
        b(i, j) = nd(gen) + 0.5;
      }
    CHECK(w2(a, b) == doctest::Approx(w2_brute(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("capacity limit of the exact assignment") {
  const MatX big = MatX::Zero(513, 2);
  try {
    w2(big, big);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::capacity);
  }
}

TEST_CASE("W2 metric axioms") {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int k = 0; k < 30; ++k) {
    const auto x = normal_samples(40 + k, u(gen), 1 + 0.5 * std::abs(u(gen)), gen);
    const auto y = normal_samples(55, u(gen), 1, gen);
    const auto z = normal_samples(33, u(gen), 0.5, gen);
    const double xy = w2(x, y), yx = w2(y, x), xz = w2(x, z), zy = w2(z, y);
    CHECK(xy >= 0);
    CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
    CHECK(xy <= xz + zy + 1e-12);
    CHECK(w2(x, x) == 0.0);

    const GaussianSpec ga(VecX::Constant(2, u(gen)), 0.5 + std::abs(u(gen)));
    const GaussianSpec gb(VecX::Constant(2, u(gen)), 0.5 + std::abs(u(gen)));
    const GaussianSpec gc(VecX::Constant(2, u(gen)), 0.5 + std::abs(u(gen)));
    CHECK(w2(ga, gb) == doctest::Approx(w2(gb, ga)).epsilon(1e-14));
    CHECK(w2(ga, gb) <= w2(ga, gc) + w2(gc, gb) + 1e-12);
    CHECK(w2(ga, ga) == 0.0);

    const Density1D da = tabulate(gaussian_pdf(u(gen), 0.3 + std::abs(u(gen))), -10, 10, 400);
    const Density1D db = tabulate(gaussian_pdf(u(gen), 0.3 + std::abs(u(gen))), -10, 10, 400);
    const Density1D dc = tabulate([&](double t) { return std::exp(-std::abs(t - 1)); }, -10, 10, 400);
    CHECK(w2(da, db) >= 0);
    CHECK(w2(da, db) == doctest::Approx(w2(db, da)).epsilon(1e-9));
    CHECK(w2(da, db) <= w2(da, dc) + w2(dc, db) + 1e-10);
    CHECK(w2(da, da) < 1e-12);

    MatX pa(6, 2), pb(6, 2), pc(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        pa(i, j) = u(gen);
        pb(i, j) = u(gen);
        pc(i, j) = u(gen);
      }
    CHECK(w2(pa, pb) == doctest::Approx(w2(pb, pa)).epsilon(1e-12));
    CHECK(w2(pa, pb) <= w2(pa, pc) + w2(pc, pb) + 1e-12);
    CHECK(w2(pa, pa) == 0.0);
  }
}

TEST_CASE("W2 of tabulated and empirical measures against Gaussians") {
  const Density1D a = tabulate(gaussian_pdf(0, 1), -12, 12, 24000);
  const Density1D b = tabulate(gaussian_pdf(1.5, 4), -12, 18, 30000);
  CHECK(w2(a, b) == doctest::Approx(w2(GaussianSpec(VecX::Zero(1), 1), GaussianSpec(VecX::Constant(1, 1.5), 4)))
                       .epsilon(1e-4));
  std::mt19937_64 gen(4);
  const auto s = normal_samples(20000, 0.3, 1.0, gen);
  CHECK(w2_to_gaussian(s, 0.3, 1.0) < 0.03);
  CHECK(w2_to_gaussian({0.0}, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("normal quantile and cdf") {
  for (double p : {1e-10, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9}) CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-9));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("free energy on the Gaussian family") {
  const auto s = make_quadratic(2 * kPi, 1);
  CHECK(std::abs(free_energy(local_equilibrium(VecX::Zero(1), s.kappa), s).value) < 1e-14);
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  MatX M = MatX::Zero(2, 2);
  M(0, 0) = 1;
  M(1, 1) = 0.25;
  for (const auto& spec : {make_quartic1d(1.0), make_pca(M, 0.5), make_quadratic(0.7, 3)}) {
    for (int k = 0; k < 20; ++k) {
      VecX m(spec.d), mp(spec.d);
      for (int i = 0; i < spec.d; ++i) {
        m[i] = nd(gen);
        mp[i] = nd(gen);
      }
      const double dF = free_energy(local_equilibrium(m, spec.kappa), spec).value -
                        free_energy(local_equilibrium(mp, spec.kappa), spec).value;
      CHECK(dF == doctest::Approx(value(spec, m) - value(spec, mp)).epsilon(1e-12).scale(1));
    }
  }
}

TEST_CASE("free energy of tabulated densities") {
  const auto cw = make_curie_weiss(1.0, 1.0);
  const Fn1 V = curie_weiss_V(1.0, 1.0);
  const auto rho = [&](double x) { return std::exp(-V(x)); };
  const double f1 = free_energy(tabulate(rho, -6, 6, 2000), cw).value;
  const double f2 = free_energy(tabulate(rho, -6, 6, 4000), cw).value;
  CHECK(std::abs(f1 - f2) <= 1e-8);
  // Against the Gaussian closed form on a tabulated Gaussian.
  const auto q = make_quartic1d(1.0);
  const Density1D g = tabulate(gaussian_pdf(0.4, 0.8), -12, 12, 6000);
  CHECK(free_energy(g, q).value == doctest::Approx(free_energy(GaussianSpec(VecX::Constant(1, 0.4), 0.8), q).value).epsilon(1e-9));
  const Density1D raw = make_density({0.0, 1.0}, {2.0, 2.0});
  CHECK(raw.normalized);
  CHECK(free_energy(raw, q).normalization_applied);
}

TEST_CASE("local equilibrium minimizes the free energy at fixed barycenter") {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0, 1);
  const auto spec = make_quartic1d(1.0);
  for (int k = 0; k < 30; ++k) {
    const double a = u(gen) * 2 - 1, b = u(gen) * 2 - 1, w = u(gen);
    const double s1 = 0.1 + u(gen), s2 = 0.1 + u(gen);
    const Density1D mu = tabulate(
        [&](double x) { return w * gaussian_pdf(a, s1)(x) + (1 - w) * gaussian_pdf(b, s2)(x); }, -15, 15, 6000);
    const double m = mu.mean();
    const double fg = free_energy(local_equilibrium(VecX::Constant(1, m), spec.kappa), spec).value;
    CHECK(fg <= free_energy(mu, spec).value + 1e-9);
  }
}

TEST_CASE("PL ratio over the Gaussian family") {
  std::vector<VecX> mg;
  for (double x = -2; x <= 2 + 1e-12; x += 0.1) mg.push_back(VecX::Constant(1, x));
  const std::vector<double> s2g = log_grid(1e-2, 1e2, 10);
  const PlScan flat = pl_ratio_gaussian_scan(make_quadratic(1.0, 1), mg, s2g);
  CHECK(flat.sup == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(flat.pl_flag);

  MatX M = MatX::Zero(2, 2);
  M(0, 0) = 1;
  M(1, 1) = 0.25;
  const auto pca = make_pca(M, 2.0);
  std::vector<VecX> mg4;
  for (int i = 0; i < 81; ++i) {
    VecX m(4);
    int r = i;
    for (int j = 0; j < 4; ++j) {
      m[j] = -1 + (r % 3);
      r /= 3;
    }
    mg4.push_back(m);
  }
  const int n = 9;
  for (int i = 0; i < n * n * n * n; ++i) {
    VecX m(4);
    int r = i;
    for (int j = 0; j < 4; ++j) {
      m[j] = -2 + 4.0 * (r % n) / (n - 1);
      r /= n;
    }
    mg4.push_back(m);
  }
  const PlScan scan = pl_ratio_gaussian_scan(pca, mg4, s2g);
  const PlConstant grid = pl_constant(pca, cube(4, 2.0), n);
  CHECK(scan.sup == doctest::Approx(std::max(1 / pca.kappa, grid.value)).epsilon(0.02));

  // Variance-only scan at the minimizer of the double well: ratio increases to 1/kappa.
  const auto dw = make_quartic1d(1.0);
  const double kappa = dw.kappa;
  double prev = 0;
  for (double s2 : log_grid(2.0, 1e6, 5)) {
    const PlScan one = pl_ratio_gaussian_scan(dw, {VecX::Constant(1, 1.0)}, {s2});
    CHECK(one.sup >= prev);
    CHECK(one.sup < 1 / kappa);
    prev = one.sup;
  }
  CHECK(prev == doctest::Approx(1 / kappa).epsilon(1e-4));
  CHECK_FALSE(pl_ratio_gaussian_scan(dw, mg, s2g).pl_flag);
}

}  // TEST_SUITE
