#include "mfl/metastability.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace mfl {

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Fraction s in [0, 1] where the segment p -> q meets the sphere |y - c| = r. `entering` picks
/// the root for an outside-to-inside crossing.
double sphere_crossing(const double* p, const double* q, const double* c, int d, double r, bool entering) {
  double a = 0, b = 0, c0 = -r * r;
  for (int j = 0; j < d; ++j) {
    const double dq = q[j] - p[j], dp = p[j] - c[j];
    a += dq * dq;
    b += 2 * dp * dq;
    c0 += dp * dp;
  }
  if (a <= 0) return 1.0;
  const double disc = std::sqrt(std::max(b * b - 4 * a * c0, 0.0));
  const double s = entering ? (-b - disc) / (2 * a) : (-b + disc) / (2 * a);
  return std::clamp(s, 0.0, 1.0);
}

struct Hit {
  double time = kNaN;
  VecX point;
};

/// Reduced barycenter SDE from `start` until it enters (or leaves) the ball B(center, r).
Hit reduced_hit(const PotentialSpec<double>& spec, const VecX& start, const VecX& center, double r, bool entering,
                double dt, double N, long long max_steps, std::mt19937_64& gen) {
  const int d = spec.d;
  const double sq = std::sqrt(2 * dt / N), r2 = r * r;
  std::normal_distribution<double> nd;
  Hit h;
  if (d == 1) {
    double x = start[0], g;
    const double c = center[0];
    for (long long k = 0; k < max_steps; ++k) {
      gradient_raw(spec, &x, &g);
      const double xp = x;
      x += -g * dt + sq * nd(gen);
      const double y = x - c;
      if ((y * y < r2) == entering) {
        const double s = sphere_crossing(&xp, &x, &c, 1, r, entering);
        h.time = (double(k) + s) * dt;
        h.point = VecX::Constant(1, xp + s * (x - xp));
        if (!std::isfinite(h.time)) throw Error(ErrorKind::numeric, "metastability.hit", "non-finite hitting time");
        return h;
      }
      if (!(std::abs(x) <= 1e8))
        throw Error(ErrorKind::divergence, "metastability.hit", "state exceeded 1e8 at step " + std::to_string(k + 1));
    }
    return h;
  }
  VecX x = start, xp(d), g(d);
  for (long long k = 0; k < max_steps; ++k) {
    gradient_raw(spec, x.data(), g.data());
    xp = x;
    double y2 = 0;
    for (int j = 0; j < d; ++j) {
      x[j] += -g[j] * dt + sq * nd(gen);
      y2 += (x[j] - center[j]) * (x[j] - center[j]);
    }
    if ((y2 < r2) == entering) {
      const double s = sphere_crossing(xp.data(), x.data(), center.data(), d, r, entering);
      h.time = (double(k) + s) * dt;
      h.point = xp + s * (x - xp);
      return h;
    }
    if (!(x.cwiseAbs().maxCoeff() <= 1e8))
      throw Error(ErrorKind::divergence, "metastability.hit", "state exceeded 1e8 at step " + std::to_string(k + 1));
  }
  return h;
}

/// Full particle system; the barycenter event and final cloud are reported.
Hit particle_hit(const SimConfig& cfg, const VecX& center, double r, bool entering, MatX* cloud_at_hit) {
  Hit h;
  const int d = cfg.spec.d;
  VecX prev;
  SimConfig c = cfg;
  c.store_states = false;
  c.thin = std::numeric_limits<int>::max();
  simulate_particles(c, [&](const StepView& s) {
    const double y2 = (s.xbar - center).squaredNorm();
    if (s.step > 0 && (y2 < r * r) == entering) {
      const double f = sphere_crossing(prev.data(), s.xbar.data(), center.data(), d, r, entering);
      h.time = (double(s.step - 1) + f) * cfg.dt;
      h.point = prev + f * (s.xbar - prev);
      if (cloud_at_hit) *cloud_at_hit = s.X;
      return true;
    }
    prev = s.xbar;
    return false;
  });
  return h;
}

}  // namespace

EyringKramers eyring_kramers_predict(const PotentialSpec<double>& spec, const VecX& x0, const VecX& z, double N) {
  const char* where = "metastability.eyring_kramers_predict";
  const CriticalPoint<double> a = classify(spec, x0), s = classify(spec, z);
  if (!a.is_minimizer()) throw Error(ErrorKind::prediction, where, "x0 is not a non-degenerate minimizer");
  if (s.index != 1 || s.degenerate)
    throw Error(ErrorKind::prediction, where, "z is not a non-degenerate index-1 saddle");
  EyringKramers e;
  e.lambda1 = -s.spectrum[0];
  e.det_saddle = s.spectrum.prod();
  e.det_minimum = a.spectrum.prod();
  e.barrier = s.value - a.value;
  e.prefactor = 2 * kPi / e.lambda1 * std::sqrt(std::abs(e.det_saddle) / e.det_minimum);
  e.time = e.prefactor * std::exp(N * e.barrier);
  return e;
}

void verify_transition_geometry(const PotentialSpec<double>& spec, const VecX& x0, const VecX& x1, const VecX& z,
                                double delta) {
  const char* where = "metastability.transition_study";
  auto crit = [&](const VecX& m, const char* name) {
    if (m.size() != spec.d) throw Error(ErrorKind::input, where, std::string(name) + " has the wrong dimension");
    const double g = gradient(spec, m).norm();
    if (g > 1e-8 * (1 + m.norm()))
      throw Error(ErrorKind::geometry, where, std::string(name) + " is not a critical point of V_kappa");
    return classify(spec, m);
  };
  const auto a = crit(x0, "x0"), b = crit(x1, "x1"), s = crit(z, "z");
  if (!a.is_minimizer() || !b.is_minimizer())
    throw Error(ErrorKind::geometry, where, "x0 and x1 must be non-degenerate minimizers");
  if (s.index != 1 || s.degenerate) throw Error(ErrorKind::geometry, where, "z must be a non-degenerate index-1 saddle");
  if ((x0 - x1).norm() <= 2 * delta) throw Error(ErrorKind::geometry, where, "balls around x0 and x1 intersect");
  if ((z - x0).norm() <= delta || (z - x1).norm() <= delta)
    throw Error(ErrorKind::geometry, where, "z lies inside a target ball");
  if (spec.d <= 4) {
    VecX lo = x0.cwiseMin(x1).cwiseMin(z), hi = x0.cwiseMax(x1).cwiseMax(z);
    const VecX pad = ((hi - lo) * 0.25).cwiseMax(2 * delta);
    const auto found = find_critical_points(spec, Box<double>{lo - pad, hi + pad}, spec.d == 1 ? 81 : spec.d == 2 ? 21 : 9);
    if (found.points.size() != 3)
      throw Error(ErrorKind::geometry, where,
                  "expected exactly three critical points near the transition, found " +
                      std::to_string(found.points.size()));
  }
}

std::vector<double> HittingStudy::uncensored(int N) const {
  for (size_t i = 0; i < N_list.size(); ++i)
    if (N_list[i] == N) {
      std::vector<double> out;
      for (double t : samples[i])
        if (std::isfinite(t)) out.push_back(t);
      return out;
    }
  return {};
}

HittingStudy transition_study(const PotentialSpec<double>& spec, const VecX& x0, const VecX& x1, const VecX& z,
                              double delta, const std::vector<int>& N_list, int replicas, std::uint64_t seed,
                              const TransitionOptions& opts) {
  const char* where = "metastability.transition_study";
  if (N_list.empty() || replicas < 1) throw Error(ErrorKind::configuration, where, "need N values and replicas");
  if (!(opts.dt > 0)) throw Error(ErrorKind::configuration, where, "dt must be positive");
  verify_transition_geometry(spec, x0, x1, z, delta);
  HittingStudy st;
  st.N_list = N_list;
  st.samples.resize(N_list.size());
  for (size_t iN = 0; iN < N_list.size(); ++iN) {
    const int N = N_list[iN];
    int R = replicas;
    for (size_t k = 0; k < opts.replicas_override_N.size() && k < opts.replicas_override.size(); ++k)
      if (opts.replicas_override_N[k] == N) R = opts.replicas_override[k];
    const EyringKramers ek = eyring_kramers_predict(spec, x0, z, N);
    const double horizon = opts.horizon > 0 ? opts.horizon : opts.horizon_factor * ek.time;
    const int probes = int(std::ceil(opts.bias_probe_fraction * R - 1e-9));
    std::vector<double> tau(R, kNaN), probe(probes, kNaN);
    auto run = [&](int r, double dt, std::uint64_t stream) {
      std::mt19937_64 gen = replica_engine(seed, std::uint64_t(r), stream);
      const long long max_steps = std::llround(horizon / dt);
      if (!opts.full_particles) return reduced_hit(spec, x0, x1, delta, true, dt, N, max_steps, gen).time;
      SimConfig cfg;
      cfg.spec = spec;
      cfg.N = N;
      cfg.dt = dt;
      cfg.horizon = horizon;
      cfg.seed = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
      cfg.replica_id = std::uint64_t(r);
      cfg.init.mean = x0;
      cfg.init.s2 = opts.init_s2;
      cfg.init.center = true;
      return particle_hit(cfg, x1, delta, true, nullptr).time;
    };
    const std::uint64_t stream = std::uint64_t(N);
    for_each_replica(R + probes, opts.workers, [&](int k) {
      if (k < R)
        tau[k] = run(k, opts.dt, stream);
      else
        probe[k - R] = run(k - R, 0.5 * opts.dt, stream | (1ULL << 32));
    });
    TransitionRow row;
    row.N = N;
    row.replicas = R;
    row.prediction = ek.time;
    std::vector<double> ok;
    for (double t : tau) {
      if (std::isfinite(t))
        ok.push_back(t);
      else
        ++row.censored;
    }
    row.mean = mean_se(ok);
    if (!ok.empty()) {
      std::vector<double> s = ok;
      std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
      row.median = s[s.size() / 2];
    }
    double a = 0, b = 0;
    int pc = 0;
    for (int k = 0; k < probes; ++k)
      if (std::isfinite(tau[k]) && std::isfinite(probe[k])) {
        a += tau[k];
        b += probe[k];
        ++pc;
      }
    row.probe_count = pc;
    row.probe_mean_dt = pc ? a / pc : kNaN;
    row.probe_mean_half = pc ? b / pc : kNaN;
    if (row.censored > opts.censor_threshold * R) {
      row.excluded = true;
      st.warnings.push_back("N=" + std::to_string(N) + ": " + std::to_string(row.censored) +
                            " censored replicas exceed the threshold; excluded from fits");
    } else if (ok.size() < 30) {
      row.excluded = true;
      st.warnings.push_back("N=" + std::to_string(N) + ": fewer than 30 samples; excluded from fits");
    }
    st.samples[iN] = std::move(tau);
    st.rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& row : st.rows)
    if (!row.excluded) {
      xs.push_back(row.N);
      ys.push_back(std::log(row.mean.mean));
    }
  if (xs.size() >= 2) {
    st.arrhenius = linear_fit(xs, ys);
    const auto& last = *std::max_element(st.rows.begin(), st.rows.end(), [](const auto& p, const auto& q) {
      return (p.excluded ? -1 : p.N) < (q.excluded ? -1 : q.N);
    });
    st.prefactor_N = last.N;
    st.ek = eyring_kramers_predict(spec, x0, z, last.N);
    st.prefactor_fit = last.mean.mean / std::exp(last.N * st.arrhenius.slope);
    st.prefactor_barrier = last.mean.mean / std::exp(last.N * st.ek.barrier);
  } else {
    st.warnings.push_back("fewer than two usable N values; no Arrhenius fit");
  }
  return st;
}

KsResult exponentiality_test(const std::vector<double>& samples) {
  const char* where = "metastability.exponentiality_test";
  if (samples.size() < 200) throw Error(ErrorKind::input, where, "need at least 200 samples");
  double s = 0;
  for (double t : samples) {
    if (!std::isfinite(t)) throw Error(ErrorKind::input, where, "censored samples present");
    s += t;
  }
  const double mean = s / samples.size();
  if (!(mean > 0)) throw Error(ErrorKind::input, where, "samples must have a positive mean");
  std::vector<double> u(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) u[i] = samples[i] / mean;
  return ks_exponential(u);
}

HeteroclinicData compute_heteroclinic(const GradientField& grad, const MatX& H, const VecX& z, double delta,
                                      const HeteroclinicOptions& opts) {
  const char* where = "metastability.compute_heteroclinic";
  Eigen::SelfAdjointEigenSolver<MatX> es(H);
  const VecX& lam = es.eigenvalues();
  const double tol = eigen_tolerance<double>(lam);
  int negative = 0;
  for (int i = 0; i < lam.size(); ++i) {
    if (lam[i] < -tol) ++negative;
    if (std::abs(lam[i]) <= tol) throw Error(ErrorKind::geometry, where, "saddle Hessian is degenerate");
  }
  if (negative != 1) throw Error(ErrorKind::geometry, where, "z is not an index-1 saddle");
  HeteroclinicData h;
  h.z = z;
  h.lambda1 = -lam[0];
  h.v1 = es.eigenvectors().col(0);
  for (int i = 0; i < h.v1.size(); ++i)
    if (std::abs(h.v1[i]) > 1e-12) {
      if (h.v1[i] < 0) h.v1 = -h.v1;
      break;
    }
  auto f = [&](const VecX& y) { return VecX(-grad(y)); };
  auto rk4 = [&](const VecX& y, double dt) {
    const VecX k1 = f(y), k2 = f(y + 0.5 * dt * k1), k3 = f(y + 0.5 * dt * k2), k4 = f(y + dt * k3);
    return VecX(y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
  };
  const double u0 = opts.u_start > 0 ? opts.u_start : delta / 4;
  for (int k = 0; u0 / std::pow(2.0, k) >= 100 * opts.epsilon && k <= opts.max_halvings; ++k)
    h.u_schedule.push_back(u0 / std::pow(2.0, k));
  for (int side = 0; side < 2; ++side) {
    const double s = side ? 1.0 : -1.0;
    VecX y = z + s * opts.epsilon * h.v1;
    double t = 0;
    std::vector<VecX>& path = h.curve[side];
    std::vector<double>& times = h.curve_time[side];
    path = {y};
    times = {0.0};
    while (true) {
      VecX yn = rk4(y, opts.ode_dt);
      if ((yn - z).norm() >= delta) {
        double lo = 0, hi = opts.ode_dt;
        for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
          const double mid = 0.5 * (lo + hi);
          if ((rk4(y, mid) - z).norm() >= delta)
            hi = mid;
          else
            lo = mid;
        }
        yn = rk4(y, hi);
        t += hi;
        path.push_back(yn);
        times.push_back(t);
        break;
      }
      y = yn;
      t += opts.ode_dt;
      path.push_back(y);
      times.push_back(t);
      if (t > opts.ode_horizon)
        throw Error(ErrorKind::geometry, where, "unstable manifold does not leave the ball within the ODE horizon");
    }
    h.exit_point[side] = path.back();
    const double t_exit = times.back();
    // Time at which the projection on s v1 first reaches u, linear between stored samples.
    auto time_at = [&](double u) {
      double prev = s * h.v1.dot(path[0] - z);
      for (size_t i = 1; i < path.size(); ++i) {
        const double cur = s * h.v1.dot(path[i] - z);
        if (cur >= u) return times[i - 1] + (times[i] - times[i - 1]) * (u - prev) / (cur - prev);
        prev = cur;
      }
      return kNaN;
    };
    double last = kNaN;
    for (double u : h.u_schedule) {
      const double tu = time_at(u);
      if (!std::isfinite(tu)) continue;
      const double F = t_exit - tu + std::log(u) / h.lambda1;
      h.T_u[side].push_back(F);
      if (std::isfinite(last) && std::abs(F - last) < opts.cauchy_tol) {
        h.converged[side] = true;
        h.T[side] = F;
        break;
      }
      last = F;
      h.T[side] = F;
    }
  }
  return h;
}

HeteroclinicData compute_heteroclinic(const PotentialSpec<double>& spec, const VecX& z, double delta,
                                      const HeteroclinicOptions& opts) {
  return compute_heteroclinic([&](const VecX& y) { return gradient(spec, y); }, hessian(spec, z), z, delta, opts);
}

std::vector<double> saddle_reference_sample(const HeteroclinicData& h, int n, double sign, std::uint64_t seed) {
  std::mt19937_64 gen = replica_engine(seed, 0, 0x5AD0ULL);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  std::vector<double> out(n);
  const double c = std::sqrt(2 * h.lambda1);
  for (int i = 0; i < n; ++i) {
    const double T = coin(gen) ? h.T[1] : h.T[0];
    const double Z = nd(gen);
    out[i] = T + sign * std::log(std::abs(Z) / c) / h.lambda1;
  }
  return out;
}

SaddleExitStudy saddle_exit_study(const PotentialSpec<double>& spec, const VecX& z, double delta,
                                  const std::vector<int>& N_list, int replicas, std::uint64_t seed,
                                  const SaddleExitOptions& opts) {
  const char* where = "metastability.saddle_exit_study";
  if (N_list.empty() || replicas < 1) throw Error(ErrorKind::configuration, where, "need N values and replicas");
  SaddleExitStudy st;
  st.geometry = compute_heteroclinic(spec, z, delta, opts.heteroclinic);
  const HeteroclinicData& g = st.geometry;
  st.reference_stated = saddle_reference_sample(g, opts.reference_samples, +1.0, seed);
  st.reference_linearized = saddle_reference_sample(g, opts.reference_samples, -1.0, seed);
  for (int N : N_list) {
    SaddleExitRow row;
    row.N = N;
    row.tau.assign(replicas, kNaN);
    row.side.assign(replicas, 0);
    std::vector<VecX> exit_pt(replicas);
    if (opts.full_particles) row.w2.assign(replicas, kNaN);
    const std::uint64_t stream = std::uint64_t(N) | (2ULL << 32);
    for_each_replica(replicas, opts.workers, [&](int r) {
      Hit hit;
      if (!opts.full_particles) {
        std::mt19937_64 gen = replica_engine(seed, std::uint64_t(r), stream);
        hit = reduced_hit(spec, z, z, delta, false, opts.dt, N, std::llround(opts.horizon / opts.dt), gen);
      } else {
        SimConfig cfg;
        cfg.spec = spec;
        cfg.N = N;
        cfg.dt = opts.dt;
        cfg.horizon = opts.horizon;
        cfg.seed = seed ^ (stream * 0x9E3779B97F4A7C15ULL);
        cfg.replica_id = std::uint64_t(r);
        cfg.init.mean = z;
        cfg.init.s2 = 1 / spec.kappa;
        cfg.init.center = true;
        MatX cloud;
        hit = particle_hit(cfg, z, delta, false, &cloud);
        if (std::isfinite(hit.time)) {
          const int side = g.v1.dot(hit.point - z) >= 0 ? 1 : -1;
          const VecX& target = g.exit_of(side);
          double worst = 0;
          for (int j = 0; j < spec.d; ++j) {
            std::vector<double> col(cloud.cols());
            for (int i = 0; i < cloud.cols(); ++i) col[i] = cloud(j, i);
            worst = std::max(worst, w2_to_gaussian(col, target[j], 1 / spec.kappa));
          }
          row.w2[r] = worst;
        }
      }
      row.tau[r] = hit.time;
      if (std::isfinite(hit.time)) {
        row.side[r] = g.v1.dot(hit.point - z) >= 0 ? 1 : -1;
        exit_pt[r] = hit.point;
      }
    });
    const double shift = std::log(N / 2.0) / (2 * g.lambda1);
    int plus = 0, n = 0, below = 0, nw = 0;
    for (int r = 0; r < replicas; ++r) {
      if (!std::isfinite(row.tau[r])) {
        ++row.censored;
        continue;
      }
      ++n;
      if (row.side[r] > 0) ++plus;
      const VecX& p = exit_pt[r];
      if (!((p - g.exit_of(row.side[r])).norm() < (p - g.exit_of(-row.side[r])).norm())) ++row.side_violations;
      row.centered.push_back(row.tau[r] - shift);
      if (opts.full_particles && std::isfinite(row.w2[r])) {
        ++nw;
        if (row.w2[r] < st.w2_threshold) ++below;
      }
    }
    if (n == 0) throw Error(ErrorKind::numeric, where, "no replica left the ball within the horizon");
    row.p_plus = double(plus) / n;
    row.p_plus_se = std::sqrt(0.25 / n);
    row.centered_mean = mean_se(row.centered);
    row.ks_stated = ks_two_sample(row.centered, st.reference_stated);
    row.ks_linearized = ks_two_sample(row.centered, st.reference_linearized);
    row.w2_fraction_below = nw ? double(below) / nw : 0.0;
    st.rows.push_back(std::move(row));
  }
  return st;
}

CoincidenceStudy coupled_local_coincidence(const PotentialSpec<double>& spec, const LocalizedSpec<double>& loc,
                                           int N, double horizon, int replicas, std::uint64_t seed, double dt,
                                           int workers) {
  const char* where = "metastability.coupled_local_coincidence";
  if (replicas < 1) throw Error(ErrorKind::configuration, where, "need at least one replica");
  CoincidenceStudy st;
  st.replicas = replicas;
  st.divergence_time.assign(replicas, kNaN);
  st.exit_time.assign(replicas, kNaN);
  std::vector<char> identical(replicas, 1);
  for_each_replica(replicas, workers, [&](int r) {
    SimConfig cfg;
    cfg.spec = spec;
    cfg.N = N;
    cfg.dt = dt;
    cfg.horizon = horizon;
    cfg.seed = seed;
    cfg.replica_id = std::uint64_t(r);
    cfg.init.mean = loc.center;
    cfg.init.s2 = 1 / spec.kappa;
    cfg.init.center = true;
    cfg.store_states = false;
    cfg.thin = std::numeric_limits<int>::max();
    std::vector<MatX> path;
    double exit_t = kNaN;
    simulate_particles(cfg, [&](const StepView& s) {
      path.push_back(s.X);
      if (!std::isfinite(exit_t) && (s.xbar - loc.center).norm() > loc.delta) exit_t = s.time;
      return false;
    });
    SimConfig mod = cfg;
    const LocalizedSpec<double> l = loc;
    mod.base_gradient = [l](const double* m, double* out) { gradient_base_raw(l, m, out); };
    double div_t = kNaN;
    simulate_particles(mod, [&](const StepView& s) {
      const MatX& ref = path[size_t(s.step)];
      if (std::memcmp(ref.data(), s.X.data(), sizeof(double) * size_t(ref.size())) != 0) {
        div_t = s.time;
        return true;
      }
      return false;
    });
    st.exit_time[r] = exit_t;
    st.divergence_time[r] = div_t;
    identical[r] = std::isfinite(div_t) ? 0 : 1;
  });
  int same = 0;
  for (int r = 0; r < replicas; ++r) {
    same += identical[r];
    const double dv = st.divergence_time[r], ex = st.exit_time[r];
    if (std::isfinite(dv) && (!std::isfinite(ex) || dv <= ex)) ++st.divergence_before_exit;
  }
  st.fraction_identical = double(same) / replicas;
  return st;
}

}  // namespace mfl
