#include <doctest.h>

#include "mfl/dynamics.hpp"
#include "mfl/stats.hpp"

#include <algorithm>
#include <cmath>

using namespace mfl;

namespace {

SimConfig toy_config(const PotentialSpec<double>& spec, int N, double dt, double horizon, std::uint64_t seed) {
  SimConfig c;
  c.spec = spec;
  c.N = N;
  c.dt = dt;
  c.horizon = horizon;
  c.seed = seed;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("noiseless particles follow explicit Euler on the N-particle energy") {
  for (Model model : {Model::toy, Model::curie_weiss}) {
    const auto spec = model == Model::toy ? make_quartic1d(1.0) : make_curie_weiss(0.3, 1.0);
    SimConfig c = toy_config(spec, 16, 1e-3, 0.5, 1);
    c.model = model;
    c.noise = false;
    MatX cloud(1, 16);
    for (int i = 0; i < 16; ++i) cloud(0, i) = -1.5 + 0.2 * i;
    c.init.kind = InitKind::cloud;
    c.init.cloud = cloud;
    const TrajectoryBatch b = simulate_particles(c);
    MatX X = cloud;
    for (long long k = 0; k < c.steps(); ++k) {
      const double xbar = X.mean();
      MatX Y = X;
      for (int i = 0; i < 16; ++i) {
        const double x = X(0, i);
        double drift;
        if (model == Model::toy) {
          double g;
          gradient_base_raw(spec, &xbar, &g);
          drift = g + spec.kappa * x;
        } else {
          double g;
          gradient_base_raw(spec, &x, &g);
          drift = g - spec.kappa * xbar;
        }
        Y(0, i) = x + -drift * c.dt;
      }
      X = Y;
    }
    CHECK((b.terminal_state - X).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("barycenter closure under shared increments") {
  MatX M = MatX::Zero(1, 1);
  M(0, 0) = 1;
  for (const auto& spec : {make_quartic1d(1.0), make_quadratic(0.5, 2), make_pca(M, 0.5)}) {
    SimConfig c = toy_config(spec, 64, 1e-3, 10, 42);
    c.record_increments = true;
    c.thin = 1;
    c.init.s2 = 0.3;
    c.init.mean = VecX::Constant(spec.d, -0.8);
    const TrajectoryBatch full = simulate_particles(c);
    SimConfig r = c;
    r.init.kind = InitKind::cloud;
    r.init.cloud = full.states[0];
    const TrajectoryBatch red = simulate_barycenter(r, &full.increments);
    REQUIRE(full.barycenter.size() == red.barycenter.size());
    REQUIRE(full.barycenter.size() == 10001);
    double err = 0;
    for (size_t k = 0; k < red.barycenter.size(); ++k)
      err = std::max(err, (full.barycenter[k] - red.barycenter[k]).cwiseAbs().maxCoeff());
    CHECK(err <= 1e-12);
  }
}

TEST_CASE("noiseless barycenter solves the gradient flow to first order") {
  const auto spec = make_quartic1d(1.0);
  double prev = 0;
  for (double dt : {2e-3, 1e-3}) {
    SimConfig c = toy_config(spec, 1000000, dt, 5, 0);
    c.noise = false;
    c.thin = 1;
    c.init.mean = VecX::Constant(1, 0.1);
    const TrajectoryBatch b = simulate_barycenter(c);
    const auto ode = gradient_flow(spec, c.init.mean, dt / 10, c.steps() * 10);
    double err = 0;
    for (size_t k = 0; k < b.barycenter.size(); ++k) err = std::max(err, std::abs(b.barycenter[k][0] - ode[k * 10][0]));
    CHECK(err <= 5 * dt);
    if (prev > 0) CHECK(err / prev == doctest::Approx(0.5).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("stationary Ornstein–Uhlenbeck variance") {
  const auto spec = make_quadratic(1.0, 1);
  SimConfig c = toy_config(spec, 20, 1e-2, 2000, 3);
  c.init.s2 = 1.0;
  c.thin = 10;
  const TrajectoryBatch b = simulate_particles(c);
  std::vector<double> series;
  for (size_t k = 100; k < b.states.size(); ++k) series.push_back(b.states[k].array().square().mean());
  const MeanSE v = batch_means(series);
  // Euler–Maruyama bias: the discrete stationary variance is 1 / (1 - dt / 2).
  CHECK(std::abs(v.mean - 1 / (1 - c.dt / 2)) <= 3 * v.se);
  CHECK(std::abs(v.mean - 1) <= 3 * v.se + c.dt);
}

TEST_CASE("centered coordinates of the toy model") {
  const auto spec = make_quartic1d(1.0);
  const int N = 32;
  SimConfig c = toy_config(spec, N, 1e-2, 3000, 5);
  c.init.mean = VecX::Constant(1, -1.0);
  c.init.s2 = 1.0;
  c.thin = 10;
  const TrajectoryBatch b = simulate_particles(c);
  std::vector<double> series;
  for (size_t k = 100; k < b.states.size(); ++k) {
    const MatX& X = b.states[k];
    series.push_back((X.array() - X.mean()).square().sum() / N);
  }
  const MeanSE v = batch_means(series);
  // The empirical variance over particles carries the factor (1 - 1/N) in expectation.
  const double expected = (1 - 1.0 / N) / spec.kappa / (1 - c.dt * spec.kappa / 2);
  CHECK(std::abs(v.mean - expected) <= 3 * v.se);
}

TEST_CASE("double well barycenter stays in its well at N = 64") {
  const auto spec = make_quartic1d(1.0);
  int stayed = 0;
  for (int r = 0; r < 100; ++r) {
    SimConfig c = toy_config(spec, 64, 1e-3, 10, 99);
    c.replica_id = r;
    c.init.mean = VecX::Constant(1, -1.0);
    bool crossed = false;
    simulate_barycenter(c, nullptr, [&](const StepView& v) {
      crossed = crossed || v.xbar[0] > 0;
      return crossed;
    });
    stayed += !crossed;
  }
  CHECK(stayed >= 99);
}

TEST_CASE("determinism and replica independence of scheduling") {
  const auto spec = make_quartic1d(1.0);
  auto run = [&](int workers) {
    std::vector<VecX> terminal(16);
    for_each_replica(16, workers, [&](int r) {
      SimConfig c = toy_config(spec, 8, 1e-3, 1, 1234);
      c.replica_id = r;
      c.init.s2 = 0.5;
      terminal[r] = simulate_particles(c).terminal_state.reshaped();
    });
    return terminal;
  };
  const auto a = run(1), b = run(4), c = run(1);
  for (int r = 0; r < 16; ++r) {
    CHECK(a[r] == b[r]);
    CHECK(a[r] == c[r]);
  }
  CHECK(a[0] != a[1]);
  auto e1 = replica_engine(7, 3), e2 = replica_engine(7, 3), e3 = replica_engine(7, 3, 1);
  CHECK(e1() == e2());
  CHECK(e1() != e3());
}

TEST_CASE("simulation errors") {
  SimConfig c = toy_config(make_curie_weiss(0.5, 1.0), 4, 1e-3, 1, 0);
  c.model = Model::curie_weiss;
  try {
    simulate_barycenter(c);
    FAIL("expected an unsupported-model error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::unsupported);
  }
  SimConfig d = toy_config(make_quartic1d(1.0), 4, 1.0, 100, 0);
  d.init.mean = VecX::Constant(1, 3.0);
  try {
    simulate_particles(d);
    FAIL("expected a divergence error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::divergence);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("empirical measure of stationary OU particles approaches the Gaussian") {
  const auto spec = make_quadratic(1.0, 1);
  std::vector<double> medians;
  for (int N : {64, 256, 1024}) {
    std::vector<double> sup(20);
    for (int seed = 0; seed < 20; ++seed) {
      SimConfig c = toy_config(spec, N, 2e-2, 3 * std::log(double(N)), 500 + seed);
      c.init.s2 = 1.0;
      c.thin = 10;
      const TrajectoryBatch b = simulate_particles(c);
      double m = 0;
      for (const MatX& X : b.states) {
        std::vector<double> pts(X.data(), X.data() + X.size());
        m = std::max(m, w2_to_gaussian(pts, 0.0, 1.0));
      }
      sup[seed] = m;
    }
    medians.push_back(median(sup));
  }
  CHECK(medians[0] > medians[1]);
  CHECK(medians[1] > medians[2]);
}

TEST_CASE("mean-field PDE for the toy model") {
  const auto spec = make_quartic1d(1.0);
  const double dt = 1e-3;
  const double L = pde_half_width(spec, -1, 1.5);
  const double m0 = 0.5, s0 = 0.25;
  const Density1D rho0 =
      tabulate([&](double x) { return std::exp(-(x - m0) * (x - m0) / (2 * s0)); }, -L, L, 800);
  const PdeResult r = solve_mckean_vlasov_1d(spec, rho0, dt, 3);
  CHECK(r.max_mass_error <= 1e-12);
  CHECK(r.max_free_energy_increase <= 1e-8);
  CHECK(r.min_density >= 0);
  const auto ode = gradient_flow(spec, VecX::Constant(1, rho0.mean()), dt / 10, (long long)(r.times.size() - 1) * 10);
  double em = 0, ev = 0;
  const double k = spec.kappa, v0 = rho0.variance();
  for (size_t i = 0; i < r.times.size(); ++i) {
    em = std::max(em, std::abs(r.mean[i] - ode[i * 10][0]));
    const double closed = std::exp(-2 * k * r.times[i]) * v0 + (1 - std::exp(-2 * k * r.times[i])) / k;
    ev = std::max(ev, std::abs(r.variance[i] - closed));
  }
  CHECK(em <= 5 * dt);
  CHECK(ev <= 5 * dt);
  // Gaussian profile at the end, against the closed-form Gaussian.
  const Density1D& end = r.snapshots.back();
  const double vt = std::exp(-2 * k * 3.0) * v0 + (1 - std::exp(-2 * k * 3.0)) / k;
  const double mt = r.mean.back();
  const Density1D gauss =
      tabulate([&](double x) { return std::exp(-(x - mt) * (x - mt) / (2 * vt)); }, end.x.front(), end.x.back(), 4000);
  CHECK(w2(end, gauss) < 5 * dt);
}

TEST_CASE("mean-field PDE time-step guard") {
  const auto spec = make_curie_weiss(1.0, 1.0);
  const double L = pde_half_width(spec, -1, 1);
  const Density1D rho0 = tabulate([](double x) { return std::exp(-x * x); }, -L, L, 800);
  try {
    solve_mckean_vlasov_1d(spec, rho0, 0.1, 1);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
    CHECK(std::string(e.what()).find("use dt <=") != std::string::npos);
  }
}

TEST_CASE("PDE box confines the frozen-drift potential") {
  const auto spec = make_curie_weiss(1.0, 1.0);
  const double L = pde_half_width(spec, -1, 1);
  for (double m : {-1.0, 0.0, 0.5, 1.0}) {
    const auto phi = [&](double x) { return base_value(spec, x) - spec.kappa * m * x; };
    double mn = 1e300;
    for (int i = 0; i <= 4000; ++i) mn = std::min(mn, phi(-L + 2 * L * i / 4000.0));
    CHECK(phi(-L) - mn >= 40);
    CHECK(phi(L) - mn >= 40);
  }
  CHECK(L < 10);
}

}  // TEST_SUITE
