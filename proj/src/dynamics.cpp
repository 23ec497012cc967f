#include "mfl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mfl {

const char* to_string(Model m) { return m == Model::toy ? "toy" : "curie_weiss"; }

long long SimConfig::steps() const { return std::llround(horizon / dt); }

int SimConfig::thin_stride() const { return thin > 0 ? thin : std::max(1, int(std::ceil(0.1 / dt - 1e-9))); }

int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t replica) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(replica),
                    std::uint32_t(replica >> 32)};
  return std::mt19937_64(seq);
}

std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t replica, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed),   std::uint32_t(seed >> 32),   std::uint32_t(replica),
                    std::uint32_t(replica >> 32), std::uint32_t(stream), std::uint32_t(stream >> 32)};
  return std::mt19937_64(seq);
}

namespace {

void check_config(const SimConfig& cfg, const char* where) {
  if (!(cfg.dt > 0)) throw Error(ErrorKind::configuration, where, "dt must be positive");
  if (cfg.N < 1) throw Error(ErrorKind::configuration, where, "N must be at least 1");
  if (!(cfg.horizon >= 0)) throw Error(ErrorKind::configuration, where, "horizon must be non-negative");
}

MatX read_cloud(const std::string& path, int d, const char* where) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, where, "cannot open initial cloud file " + path);
  std::vector<double> vals;
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorKind::input, where, "non-numeric entry in " + path);
      }
      ++cols;
    }
    if (cols != d) throw Error(ErrorKind::input, where, "cloud file rows must have d columns");
    ++rows;
  }
  MatX X(d, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) X(j, i) = vals[size_t(i) * d + j];
  return X;
}

BaseGradient resolve_gradient(const SimConfig& cfg) {
  if (cfg.base_gradient) return cfg.base_gradient;
  const PotentialSpec<double> spec = cfg.spec;
  return [spec](const double* m, double* out) { gradient_base_raw(spec, m, out); };
}

void check_finite(const double* x, int n, long long step, const char* where) {
  for (int i = 0; i < n; ++i)
    if (!(std::abs(x[i]) <= 1e8))
      throw Error(ErrorKind::divergence, where, "state exceeded 1e8 at step " + std::to_string(step));
}

}  // namespace

MatX initial_cloud(const SimConfig& cfg, std::mt19937_64& gen) {
  const char* where = "dynamics.initial_cloud";
  const int d = cfg.spec.d, N = cfg.N;
  const VecX mean = cfg.init.mean.size() ? cfg.init.mean : VecX::Zero(d);
  if (mean.size() != d) throw Error(ErrorKind::input, where, "initial mean has the wrong dimension");
  MatX X;
  switch (cfg.init.kind) {
    case InitKind::gaussian: {
      X = mean.replicate(1, N);
      if (cfg.init.s2 > 0) {
        std::normal_distribution<double> nd;
        const double s = std::sqrt(cfg.init.s2);
        for (int i = 0; i < N; ++i)
          for (int j = 0; j < d; ++j) X(j, i) += s * nd(gen);
      }
      break;
    }
    case InitKind::cloud:
      X = cfg.init.cloud;
      break;
    case InitKind::file:
      X = read_cloud(cfg.init.path, d, where);
      break;
  }
  if (X.rows() != d || X.cols() != N)
    throw Error(ErrorKind::input, where, "initial cloud must be d x N");
  if (cfg.init.center) X.colwise() += mean - X.rowwise().mean();
  return X;
}

TrajectoryBatch simulate_particles(const SimConfig& cfg, const Observer& observer) {
  const char* where = "dynamics.simulate_particles";
  check_config(cfg, where);
  const int d = cfg.spec.d, N = cfg.N;
  const double dt = cfg.dt, kappa = cfg.spec.kappa;
  const double sq = cfg.noise ? std::sqrt(2 * dt) : 0.0;
  const double inv_sqrt_n = 1.0 / std::sqrt(double(N));
  const long long steps = cfg.steps();
  const int stride = cfg.thin_stride();
  const BaseGradient grad = resolve_gradient(cfg);

  std::mt19937_64 gen = replica_engine(cfg.seed, cfg.replica_id);
  std::normal_distribution<double> nd;
  MatX X = initial_cloud(cfg, gen);
  VecX xbar = X.rowwise().mean();
  VecX g(d), inc(d);

  TrajectoryBatch out;
  auto record = [&](long long k) {
    out.times.push_back(double(k) * dt);
    out.barycenter.push_back(xbar);
    if (cfg.store_states) out.states.push_back(X);
  };
  record(0);
  bool stopped = observer && observer(StepView{0, 0.0, X, xbar});
  long long k = 0;
  for (; k < steps && !stopped; ++k) {
    inc.setZero();
    if (cfg.model == Model::toy) {
      grad(xbar.data(), g.data());
      for (int i = 0; i < N; ++i) {
        double* x = X.col(i).data();
        for (int j = 0; j < d; ++j) {
          const double xi = cfg.noise ? nd(gen) : 0.0;
          inc[j] += xi;
          x[j] += -(g[j] + kappa * x[j]) * dt + sq * xi;
        }
      }
    } else {
      for (int i = 0; i < N; ++i) {
        double* x = X.col(i).data();
        grad(x, g.data());
        for (int j = 0; j < d; ++j) {
          const double xi = cfg.noise ? nd(gen) : 0.0;
          inc[j] += xi;
          x[j] += -(g[j] - kappa * xbar[j]) * dt + sq * xi;
        }
      }
    }
    xbar = X.rowwise().mean();
    check_finite(xbar.data(), d, k + 1, where);
    if (cfg.record_increments) out.increments.push_back(inc * inv_sqrt_n);
    if ((k + 1) % stride == 0) {
      check_finite(X.data(), int(X.size()), k + 1, where);
      record(k + 1);
    }
    if (observer && observer(StepView{k + 1, double(k + 1) * dt, X, xbar})) {
      stopped = true;
      out.events.push_back(Event{"stop", k + 1, double(k + 1) * dt, xbar});
    }
  }
  check_finite(X.data(), int(X.size()), k, where);
  if (out.times.back() != double(k) * dt) record(k);
  out.steps_taken = k;
  out.terminal_state = X;
  out.terminal_mean = xbar;
  out.terminal_variance = (X.colwise() - xbar).rowwise().squaredNorm() / double(N);
  return out;
}

TrajectoryBatch simulate_barycenter(const SimConfig& cfg, const std::vector<VecX>* shared,
                                    const Observer& observer) {
  const char* where = "dynamics.simulate_barycenter";
  check_config(cfg, where);
  if (cfg.model != Model::toy)
    throw Error(ErrorKind::unsupported, where, "the Curie-Weiss barycenter is not an autonomous diffusion");
  const int d = cfg.spec.d;
  const double dt = cfg.dt;
  const double sq = cfg.noise ? std::sqrt(2 * dt / cfg.N) : 0.0;
  const long long steps = cfg.steps();
  if (shared && (long long)shared->size() < steps)
    throw Error(ErrorKind::input, where, "fewer shared increments than steps");
  const int stride = cfg.thin_stride();
  const BaseGradient grad = resolve_gradient(cfg);

  std::mt19937_64 gen = replica_engine(cfg.seed, cfg.replica_id);
  std::normal_distribution<double> nd;
  VecX xbar;
  if (cfg.init.kind == InitKind::gaussian)
    xbar = cfg.init.mean.size() ? cfg.init.mean : VecX::Zero(d);
  else
    xbar = initial_cloud(cfg, gen).rowwise().mean();
  if (xbar.size() != d) throw Error(ErrorKind::input, where, "initial mean has the wrong dimension");
  const MatX empty;
  VecX g(d);

  TrajectoryBatch out;
  auto record = [&](long long k) {
    out.times.push_back(double(k) * dt);
    out.barycenter.push_back(xbar);
  };
  record(0);
  bool stopped = observer && observer(StepView{0, 0.0, empty, xbar});
  long long k = 0;
  for (; k < steps && !stopped; ++k) {
    grad(xbar.data(), g.data());
    for (int j = 0; j < d; ++j) {
      const double xi = shared ? (*shared)[k][j] : (cfg.noise ? nd(gen) : 0.0);
      xbar[j] += -(g[j] + cfg.spec.kappa * xbar[j]) * dt + sq * xi;
    }
    check_finite(xbar.data(), d, k + 1, where);
    if ((k + 1) % stride == 0) record(k + 1);
    if (observer && observer(StepView{k + 1, double(k + 1) * dt, empty, xbar})) {
      stopped = true;
      out.events.push_back(Event{"stop", k + 1, double(k + 1) * dt, xbar});
    }
  }
  if (out.times.back() != double(k) * dt) record(k);
  out.steps_taken = k;
  out.terminal_mean = xbar;
  out.terminal_variance = VecX::Zero(d);
  return out;
}

std::vector<VecX> gradient_flow(const PotentialSpec<double>& spec, const VecX& m0, double dt, long long steps) {
  std::vector<VecX> path{m0};
  VecX m = m0;
  auto f = [&](const VecX& x) { return VecX(-gradient(spec, x)); };
  for (long long k = 0; k < steps; ++k) {
    const VecX k1 = f(m), k2 = f(m + 0.5 * dt * k1), k3 = f(m + 0.5 * dt * k2), k4 = f(m + dt * k3);
    m += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    path.push_back(m);
  }
  return path;
}

// ---------------------------------------------------------------------------

namespace {

bool is_toy(const PotentialSpec<double>& spec) { return spec.kind != PotentialKind::curie_weiss; }

/// Frozen-drift potential Phi_m(x): d_t rho = d_x(rho Phi') + d_xx rho for a fixed barycenter m.
struct FrozenPotential {
  const PotentialSpec<double>& spec;
  double operator()(double x, double m) const {
    if (is_toy(spec)) {
      double g;
      gradient_base_raw(spec, &m, &g);
      return g * x + 0.5 * spec.kappa * x * x;
    }
    return base_value(spec, x) - spec.kappa * m * x;
  }
};

/// z / (e^z - 1) with the removable singularity filled in.
double bernoulli(double z) {
  if (std::abs(z) < 1e-10) return 1 - 0.5 * z;
  return z / std::expm1(z);
}

}  // namespace

double pde_half_width(const PotentialSpec<double>& spec, double m_lo, double m_hi, double tail) {
  if (spec.d != 1) throw Error(ErrorKind::input, "dynamics.pde_half_width", "one-dimensional specs only");
  const FrozenPotential phi{spec};
  double L = 1;
  for (int it = 0; it < 200; ++it, L *= 1.05) {
    bool ok = true;
    for (int a = 0; a <= 40 && ok; ++a) {
      const double m = m_lo + (m_hi - m_lo) * a / 40.0;
      double mn = HUGE_VAL;
      for (int i = 0; i <= 2000; ++i) mn = std::min(mn, phi(-L + 2 * L * i / 2000.0, m));
      ok = phi(-L, m) - mn >= tail && phi(L, m) - mn >= tail;
    }
    if (ok) return L;
  }
  throw Error(ErrorKind::configuration, "dynamics.pde_half_width", "frozen-drift potential is not confining");
}

PdeResult solve_mckean_vlasov_1d(const PotentialSpec<double>& spec, const Density1D& rho0, double dt,
                                 double horizon, const PdeOptions& opts) {
  const char* where = "dynamics.solve_mckean_vlasov_1d";
  if (spec.d != 1) throw Error(ErrorKind::input, where, "one-dimensional specs only");
  if (!(dt > 0)) throw Error(ErrorKind::configuration, where, "dt must be positive");
  const int n = int(rho0.x.size());
  if (n < 3) throw Error(ErrorKind::input, where, "need at least three cells");
  const double h = rho0.h();
  const std::vector<double>& x = rho0.x;
  const bool toy = is_toy(spec);
  const double kappa = spec.kappa;

  std::vector<double> vx(n);
  for (int j = 0; j < n; ++j) vx[j] = toy ? 0.0 : base_value(spec, x[j]);
  auto mean_of = [&](const std::vector<double>& p) {
    double s = 0;
    for (int j = 0; j < n; ++j) s += x[j] * p[j];
    return s * h;
  };
  auto energy = [&](const std::vector<double>& p) {
    double ent = 0, e2 = 0, ev = 0;
    for (int j = 0; j < n; ++j) {
      ent += p[j] * std::log(std::max(p[j], 1e-300));
      e2 += p[j] * x[j] * x[j];
      ev += p[j] * vx[j];
    }
    const double m = mean_of(p);
    if (toy) {
      double v = base_value(spec, m);
      return v + 0.5 * kappa * e2 * h + ent * h;
    }
    return ev * h - 0.5 * kappa * m * m + ent * h;
  };

  std::vector<double> z(n - 1), lower(n), diag(n), upper(n), cp(n), sol(n);
  // Phi_m(x) = phi0(x) + slope(m) x on the cell centres.
  std::vector<double> phi0(n);
  for (int j = 0; j < n; ++j) phi0[j] = toy ? 0.5 * kappa * x[j] * x[j] : vx[j];
  auto slope = [&](double m) {
    if (!toy) return -kappa * m;
    double g;
    gradient_base_raw(spec, &m, &g);
    return g;
  };
  auto build = [&](double m) {
    double zmax = 0;
    const double c = slope(m);
    for (int j = 0; j + 1 < n; ++j) {
      z[j] = (phi0[j + 1] + c * x[j + 1]) - (phi0[j] + c * x[j]);
      zmax = std::max(zmax, std::abs(z[j]));
    }
    const double peclet = dt * zmax / (h * h);
    if (peclet > opts.max_cell_peclet) {
      std::ostringstream msg;
      msg.precision(3);
      msg << "dt * max|b| / h = " << peclet << " exceeds " << opts.max_cell_peclet << "; use dt <= "
          << 0.9 * opts.max_cell_peclet * h * h / zmax;
      throw Error(ErrorKind::configuration, where, msg.str());
    }
    const double r = dt / (h * h);
    for (int j = 0; j < n; ++j) {
      diag[j] = 1;
      lower[j] = upper[j] = 0;
    }
    for (int j = 0; j + 1 < n; ++j) {
      const double bp = bernoulli(z[j]), bm = bernoulli(-z[j]);
      // flux F_{j+1/2} = (bp rho_j - bm rho_{j+1}) / h leaves cell j and enters cell j+1
      diag[j] += r * bp;
      upper[j] -= r * bm;
      diag[j + 1] += r * bm;
      lower[j + 1] -= r * bp;
    }
  };
  auto solve = [&](const std::vector<double>& rhs) {
    cp[0] = upper[0] / diag[0];
    sol[0] = rhs[0] / diag[0];
    for (int j = 1; j < n; ++j) {
      const double den = diag[j] - lower[j] * cp[j - 1];
      cp[j] = upper[j] / den;
      sol[j] = (rhs[j] - lower[j] * sol[j - 1]) / den;
    }
    for (int j = n - 2; j >= 0; --j) sol[j] -= cp[j] * sol[j + 1];
  };

  std::vector<double> rho = rho0.p;
  PdeResult out;
  const long long steps = std::llround(horizon / dt);
  double F = energy(rho);
  double mass = 0;
  for (double v : rho) mass += v * h;
  out.min_density = *std::min_element(rho.begin(), rho.end());
  auto log_step = [&](long long k, const std::vector<double>& p, double Fk, double mk) {
    out.times.push_back(double(k) * dt);
    out.mean.push_back(mk);
    double var = 0;
    for (int j = 0; j < n; ++j) var += (x[j] - mk) * (x[j] - mk) * p[j];
    out.variance.push_back(var * h);
    out.free_energy.push_back(Fk);
    double ms = 0;
    for (double v : p) ms += v * h;
    out.mass.push_back(ms);
  };
  auto snapshot = [&](long long k, const std::vector<double>& p) {
    Density1D s;
    s.x = x;
    s.p = p;
    out.snapshot_times.push_back(double(k) * dt);
    out.snapshots.push_back(std::move(s));
  };
  double m = mean_of(rho);
  log_step(0, rho, F, m);
  snapshot(0, rho);
  for (long long k = 0; k < steps; ++k) {
    double mk = m, change = HUGE_VAL;
    int it = 0;
    for (; it < opts.picard_max; ++it) {
      build(mk);
      solve(rho);
      const double mn = mean_of(sol);
      const double c = std::abs(mn - mk);
      mk = mn;
      if (c <= opts.picard_tol * (1 + std::abs(mk)) || (it > 3 && c >= change)) {
        change = c;
        break;
      }
      change = c;
    }
    if (change > 1e-10 * (1 + std::abs(mk)))
      throw Error(ErrorKind::numeric, where, "Picard iteration on the barycenter did not converge");
    out.max_picard = std::max(out.max_picard, it + 1);
    // Re-solve with the converged barycenter so that the stored density matches it.
    build(mk);
    solve(rho);
    rho = sol;
    m = mean_of(rho);
    double new_mass = 0, mn = HUGE_VAL;
    for (double v : rho) {
      new_mass += v * h;
      mn = std::min(mn, v);
    }
    out.max_mass_error = std::max(out.max_mass_error, std::abs(new_mass - mass));
    mass = new_mass;
    out.min_density = std::min(out.min_density, mn);
    const double Fn = energy(rho);
    out.max_free_energy_increase = std::max(out.max_free_energy_increase, Fn - F);
    F = Fn;
    log_step(k + 1, rho, F, m);
    if ((opts.record_every > 0 && (k + 1) % opts.record_every == 0) || k + 1 == steps) snapshot(k + 1, rho);
  }
  return out;
}

}  // namespace mfl
