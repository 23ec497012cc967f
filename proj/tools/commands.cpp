#include "commands.hpp"

#include "mfl/critical_points.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/gibbs.hpp"
#include "mfl/inequalities.hpp"
#include "mfl/measures.hpp"
#include "mfl/metastability.hpp"

#include <cmath>
#include <limits>

namespace mfl::cli {

namespace fs = std::filesystem;

namespace {

VecX to_vec(const std::vector<double>& v) { return Eigen::Map<const VecX>(v.data(), Eigen::Index(v.size())); }

json to_json(const VecX& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json fit_json(const LinearFit& f) {
  return {{"slope", f.slope},   {"intercept", f.intercept}, {"slope_se", f.slope_se}, {"ci_lo", f.ci_lo},
          {"ci_hi", f.ci_hi},   {"residual", f.residual},   {"n", f.n}};
}

json ks_json(const KsResult& k) { return {{"statistic", k.statistic}, {"p_value", k.p_value}, {"n", k.n}}; }

std::vector<std::string> prefixed(const std::string& p, int d) {
  std::vector<std::string> h;
  for (int j = 0; j < d; ++j) h.push_back(p + std::to_string(j));
  return h;
}

template <class... V>
std::vector<std::string> header(std::initializer_list<std::string> a, V&&... rest) {
  std::vector<std::string> h(a);
  (h.insert(h.end(), rest.begin(), rest.end()), ...);
  return h;
}

Summary potential_report(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const int d = spec.d;
  Summary s;
  CsvWriter w(out / "potential.csv",
              header({"point"}, prefixed("m", d), std::vector<std::string>{"value"}, prefixed("grad", d),
                     prefixed("hess_eig", d)));
  int i = 0;
  for (const auto& p : c.potential_report.points) {
    const VecX m = to_vec(p);
    const auto e = evaluate(spec, m);
    Eigen::SelfAdjointEigenSolver<MatX> es(e.hessian, Eigen::EigenvaluesOnly);
    w << i++;
    for (int j = 0; j < d; ++j) w << m[j];
    w << e.value;
    for (int j = 0; j < d; ++j) w << e.gradient[j];
    for (int j = 0; j < d; ++j) w << es.eigenvalues()[j];
    w.end_row();
  }
  s.results["kind"] = c.potential.kind;
  s.results["d"] = d;
  s.results["kappa"] = spec.kappa;
  s.results["points"] = i;
  return s;
}

Summary critical_points(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const int d = spec.d;
  const auto& p = c.critical_points;
  const auto search = find_critical_points(spec, cube(d, p.box_half_width), p.grid_per_axis);
  CsvWriter w(out / "critical_points.csv",
              header({}, prefixed("m", d),
                     std::vector<std::string>{"value", "index", "degenerate", "min_eigenvalue", "max_eigenvalue"}));
  for (const auto& cp : search.points) {
    for (int j = 0; j < d; ++j) w << cp.location[j];
    w << cp.value << cp.index << (cp.degenerate ? 1 : 0) << cp.min_eigenvalue() << cp.max_eigenvalue();
    w.end_row();
  }
  Summary s;
  s.results["count"] = int(search.points.size());
  s.results["seeds"] = search.seeds;
  s.results["non_converged"] = search.non_converged;
  if (spec.kind == PotentialKind::pca) {
    const auto closed = pca_critical_set(spec.M, spec.kappa, spec.c);
    json cl = json::array();
    double worst = 0;
    for (const auto& q : closed) {
      cl.push_back({{"location", to_json(q.location)}, {"value", q.value}, {"index", q.index}});
      double best = INFINITY;
      for (const auto& f : search.points) best = std::min(best, (f.location - q.location).norm());
      worst = std::max(worst, best);
    }
    s.results["closed_form"] = cl;
    s.rules.push_back(within("newton_matches_closed_form", worst, 0, 1e-8, "max distance to the nearest found point"));
    s.rules.push_back(within("critical_count", double(search.points.size()), double(closed.size()),
                             double(closed.size())));
  }
  return s;
}

Summary gibbs(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.gibbs;
  const Fn1 V = [spec](double x) { return base_value(spec, x); };
  const double kappa = spec.kappa;
  const auto tab = tabulate_omega(V, kappa, p.omega_lo, p.omega_hi, p.omega_points);
  {
    CsvWriter w(out / "omega.csv", {"xi", "omega", "omega_d1", "omega_d2"});
    for (size_t i = 0; i < tab.xi.size(); ++i) {
      w << tab.xi[i] << tab.omega[i] << tab.d1[i] << tab.d2[i];
      w.end_row();
    }
  }
  std::vector<double> moment, scaled;
  for (double N : p.N) {
    const double m2 = gibbs_barycenter_variance(V, kappa, N);
    moment.push_back(m2);
    scaled.push_back(N * m2);
  }
  const LinearFit fit = loglog_fit(p.N, scaled);
  {
    CsvWriter w(out / "scaling.csv", {"N", "moment", "N_times_moment", "fitted_slope"});
    for (size_t i = 0; i < p.N.size(); ++i) {
      w << p.N[i] << moment[i] << scaled[i] << fit.slope;
      w.end_row();
    }
  }
  const TiltedMeasure t0 = tilted_measure(V, 0.0);
  Summary s;
  s.results["kappa"] = kappa;
  s.results["omega_d2_at_zero"] = 1 / kappa - t0.variance;
  s.results["omega_d4_at_zero"] = -t0.cumulant4();
  s.results["scaling_fit"] = fit_json(fit);
  if (spec.kind == PotentialKind::curie_weiss) {
    const auto fp = curie_weiss_fixed_points(spec.sigma2, spec.kappa0);
    s.results["fixed_points"] = fp.fixed_points;
    s.results["f_prime_at_zero"] = fp.derivative_at_zero;
  }
  return s;
}

Summary simulate(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.simulate;
  const int d = spec.d;
  SimConfig base;
  base.spec = spec;
  base.model = p.model == "toy" ? Model::toy : Model::curie_weiss;
  base.N = p.N;
  base.dt = p.dt;
  base.horizon = p.horizon;
  base.seed = c.seed;
  base.noise = p.noise;
  base.thin = p.thin;
  base.store_states = !p.reduced;
  base.init.kind = p.init.kind == "file" ? InitKind::file : InitKind::gaussian;
  base.init.mean = to_vec(p.init.mean);
  base.init.s2 = p.init.s2;
  base.init.center = p.init.center;
  base.init.path = p.init.path;
  std::vector<TrajectoryBatch> runs(p.replicas);
  for_each_replica(p.replicas, c.workers, [&](int r) {
    SimConfig cfg = base;
    cfg.replica_id = std::uint64_t(r);
    runs[r] = p.reduced ? simulate_barycenter(cfg) : simulate_particles(cfg);
  });
  {
    auto h = header({"replica", "t"}, prefixed("mean", d));
    if (!p.reduced) {
      auto v = prefixed("var", d);
      h.insert(h.end(), v.begin(), v.end());
    }
    CsvWriter w(out / "moments.csv", h);
    for (int r = 0; r < p.replicas; ++r) {
      const auto& b = runs[r];
      for (size_t k = 0; k < b.times.size(); ++k) {
        w << r << b.times[k];
        for (int j = 0; j < d; ++j) w << b.barycenter[k][j];
        if (!p.reduced) {
          const MatX& X = b.states[k];
          for (int j = 0; j < d; ++j) {
            const double m = X.row(j).mean();
            w << (X.row(j).array() - m).square().mean();
          }
        }
        w.end_row();
      }
    }
  }
  {
    CsvWriter w(out / "events.csv", {"replica_id", "event", "time", "payload"});
    for (int r = 0; r < p.replicas; ++r)
      for (const auto& e : runs[r].events) {
        std::string pay;
        for (int j = 0; j < e.payload.size(); ++j) pay += (j ? ";" : "") + format_double(e.payload[j]);
        w << r << e.name << e.time << pay;
        w.end_row();
      }
  }
  if (p.write_states && !p.reduced) {
    CsvWriter w(out / "states.csv", header({"replica", "t", "particle"}, prefixed("x", d)));
    for (int r = 0; r < p.replicas; ++r)
      for (size_t k = 0; k < runs[r].times.size(); ++k) {
        const MatX& X = runs[r].states[k];
        for (int i = 0; i < X.cols(); ++i) {
          w << r << runs[r].times[k] << i;
          for (int j = 0; j < d; ++j) w << X(j, i);
          w.end_row();
        }
      }
  }
  Summary s;
  json term = json::array();
  for (int r = 0; r < p.replicas; ++r) {
    json t = {{"replica", r}, {"steps", runs[r].steps_taken}, {"mean", to_json(runs[r].terminal_mean)}};
    if (!p.reduced) t["variance"] = to_json(runs[r].terminal_variance);
    term.push_back(t);
  }
  s.results["terminal"] = term;
  return s;
}

Summary pde(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.pde;
  const bool cw = spec.kind == PotentialKind::curie_weiss;
  const double sd = std::sqrt(p.init_s2);
  const double L = p.half_width > 0 ? p.half_width
                                    : pde_half_width(spec, std::min(-1.0, p.init_mean - 2 * sd),
                                                     std::max(1.0, p.init_mean + 2 * sd));
  const Density1D rho0 = tabulate(
      [&](double x) { return std::exp(-(x - p.init_mean) * (x - p.init_mean) / (2 * p.init_s2)); }, -L, L, p.cells);
  PdeOptions opts;
  const PdeResult r = solve_mckean_vlasov_1d(spec, rho0, p.dt, p.horizon, opts);
  Summary s;
  std::vector<double> ode_mean(r.times.size(), NAN), closed_var(r.times.size(), NAN);
  if (!cw) {
    const long long sub = 10;
    const auto path = gradient_flow(spec, VecX::Constant(1, rho0.mean()), p.dt / sub,
                                    (long long)(r.times.size() - 1) * sub);
    for (size_t k = 0; k < r.times.size(); ++k) ode_mean[k] = path[k * sub][0];
    const double v0 = rho0.variance(), k = spec.kappa;
    for (size_t i = 0; i < r.times.size(); ++i)
      closed_var[i] = 1 / k + (v0 - 1 / k) * std::exp(-2 * k * r.times[i]);
  }
  {
    CsvWriter w(out / "pde.csv", {"t", "mean", "variance", "free_energy", "mass", "ode_mean", "gaussian_variance"});
    for (size_t k = 0; k < r.times.size(); ++k) {
      w << r.times[k] << r.mean[k] << r.variance[k] << r.free_energy[k] << r.mass[k] << ode_mean[k] << closed_var[k];
      w.end_row();
    }
  }
  s.results["half_width"] = L;
  s.results["cells"] = p.cells;
  s.results["max_mass_error"] = r.max_mass_error;
  s.results["max_free_energy_increase"] = r.max_free_energy_increase;
  s.results["min_density"] = r.min_density;
  s.results["max_picard"] = r.max_picard;
  s.rules.push_back(within("free_energy_monotone", r.max_free_energy_increase, 0, 1e-10));
  if (!cw) {
    double em = 0, ev = 0;
    for (size_t k = 0; k < r.times.size(); ++k) {
      em = std::max(em, std::abs(r.mean[k] - ode_mean[k]));
      ev = std::max(ev, std::abs(r.variance[k] - closed_var[k]));
    }
    s.results["mean_sup_error"] = em;
    s.results["variance_sup_error"] = ev;
    s.rules.push_back(within("mean_matches_reduced_ode", em, 0, p.mean_tol_factor * p.dt));
    s.rules.push_back(within("variance_matches_closed_form", ev, 0, p.mean_tol_factor * p.dt));
  } else {
    const auto fp = curie_weiss_fixed_points(spec.sigma2, spec.kappa0);
    double mstar = fp.fixed_points.front();
    for (double m : fp.fixed_points)
      if (std::abs(m - r.mean.back()) < std::abs(mstar - r.mean.back())) mstar = m;
    const double k = spec.kappa;
    const Density1D star =
        tabulate([&](double x) { return std::exp(-base_value(spec, x) + k * mstar * x); }, -L, L, p.cells);
    const double dist = w2(r.snapshots.back(), star);
    s.results["fixed_point"] = mstar;
    s.results["w2_to_stationary"] = dist;
    s.rules.push_back(within("w2_to_stationary", dist, 0, p.w2_tol));
  }
  return s;
}

Summary transition(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.transition;
  TransitionOptions o;
  o.dt = p.dt;
  o.horizon = p.horizon;
  o.horizon_factor = p.horizon_factor;
  o.censor_threshold = p.censor_threshold;
  o.bias_probe_fraction = p.bias_probe_fraction;
  o.workers = c.workers;
  o.full_particles = p.full_particles;
  o.init_s2 = p.init_s2;
  for (const auto& [k, v] : p.replicas_override) {
    o.replicas_override_N.push_back(std::stoi(k));
    o.replicas_override.push_back(v);
  }
  const VecX x0 = to_vec(p.x0), x1 = to_vec(p.x1), z = to_vec(p.z);
  const HittingStudy st = transition_study(spec, x0, x1, z, p.delta, p.N, p.replicas, c.seed, o);
  {
    CsvWriter w(out / "samples.csv", {"N", "replica", "tau", "censored"});
    for (size_t i = 0; i < st.N_list.size(); ++i)
      for (size_t r = 0; r < st.samples[i].size(); ++r) {
        const double t = st.samples[i][r];
        w << st.N_list[i] << int(r) << t << (std::isfinite(t) ? 0 : 1);
        w.end_row();
      }
  }
  {
    CsvWriter w(out / "rows.csv", {"N", "replicas", "censored", "excluded", "mean", "se", "median", "prediction",
                                   "probe_count", "probe_mean_dt", "probe_mean_half_dt"});
    for (const auto& r : st.rows) {
      w << r.N << r.replicas << r.censored << (r.excluded ? 1 : 0) << r.mean.mean << r.mean.se << r.median
        << r.prediction << r.probe_count << r.probe_mean_dt << r.probe_mean_half;
      w.end_row();
    }
  }
  Summary s;
  s.warnings = st.warnings;
  const EyringKramers& ek = st.ek;
  s.results["barrier"] = ek.barrier;
  s.results["prefactor_predicted"] = ek.prefactor;
  s.results["lambda1"] = ek.lambda1;
  s.results["arrhenius_fit"] = fit_json(st.arrhenius);
  s.results["prefactor_N"] = st.prefactor_N;
  s.results["prefactor_fit"] = st.prefactor_fit;
  s.results["prefactor_barrier"] = st.prefactor_barrier;
  const double b = ek.barrier;
  s.rules.push_back(within("arrhenius_slope", st.arrhenius.slope, b * (1 - p.slope_rel_tol), b * (1 + p.slope_rel_tol)));
  s.rules.push_back(within("eyring_kramers_prefactor", st.prefactor_barrier / ek.prefactor, p.prefactor_lo,
                           p.prefactor_hi, "mean tau / e^{N barrier} over the predicted prefactor"));
  const auto samples = st.uncensored(p.exponential_N);
  if (samples.size() >= 200) {
    const KsResult ks = exponentiality_test(samples);
    s.results["exponential_ks"] = ks_json(ks);
    s.rules.push_back(within("exponential_ks", ks.statistic, 0, p.ks_max));
  } else {
    s.warnings.push_back("fewer than 200 samples at exponential_N; exponential test skipped");
  }
  return s;
}

Summary saddle_exit(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.saddle_exit;
  SaddleExitOptions o;
  o.dt = p.dt;
  o.horizon = p.horizon;
  o.workers = c.workers;
  o.full_particles = p.full_particles;
  o.reference_samples = p.reference_samples;
  const SaddleExitStudy st = saddle_exit_study(spec, to_vec(p.z), p.delta, p.N, p.replicas, c.seed, o);
  {
    CsvWriter w(out / "exits.csv", {"N", "replica", "tau", "side", "centered", "w2"});
    for (const auto& row : st.rows) {
      size_t k = 0;
      for (int r = 0; r < int(row.tau.size()); ++r) {
        const bool ok = std::isfinite(row.tau[r]);
        w << row.N << r << row.tau[r] << row.side[r] << (ok ? row.centered[k++] : NAN)
          << (row.w2.empty() ? NAN : row.w2[r]);
        w.end_row();
      }
    }
  }
  Summary s;
  const auto& g = st.geometry;
  s.results["lambda1"] = g.lambda1;
  s.results["T_minus"] = g.T[0];
  s.results["T_plus"] = g.T[1];
  s.results["heteroclinic_converged"] = g.converged[0] && g.converged[1];
  json rows = json::array();
  for (const auto& row : st.rows) {
    json x = {{"N", row.N},
              {"censored", row.censored},
              {"side_violations", row.side_violations},
              {"p_plus", row.p_plus},
              {"p_plus_se", row.p_plus_se},
              {"centered_mean", row.centered_mean.mean},
              {"ks_stated", ks_json(row.ks_stated)},
              {"ks_linearized", ks_json(row.ks_linearized)}};
    if (p.full_particles) x["w2_fraction_below"] = row.w2_fraction_below;
    rows.push_back(x);
    const std::string n = std::to_string(row.N);
    s.rules.push_back(within("sides_balanced_N" + n, row.p_plus, 0.5 - p.side_se * row.p_plus_se,
                             0.5 + p.side_se * row.p_plus_se));
    s.rules.push_back(within("exit_law_ks_N" + n, row.ks_stated.statistic, 0, p.ks_max,
                             "reference T_Q + ln(|Z|/sqrt(2 lambda1))/lambda1; linearized-sign KS " +
                                 format_double(row.ks_linearized.statistic)));
  }
  s.results["rows"] = rows;
  return s;
}

Summary inequalities(const ExperimentConfig& c, const fs::path& out) {
  const auto spec = c.potential.build();
  const auto& p = c.inequalities;
  const Box<double> box = cube(spec.d, p.box_half_width);
  const auto prof = lojasiewicz_profile(spec, box, p.grid_per_axis, log_grid(p.r_lo, p.r_hi, p.per_decade));
  {
    CsvWriter w(out / "profile.csv", {"r", "theta1", "phi1", "theta_tilde"});
    for (size_t i = 0; i < prof.r.size(); ++i) {
      w << prof.r[i] << prof.theta1[i] << prof.phi1[i] << prof.theta_tilde[i];
      w.end_row();
    }
  }
  Summary s;
  s.results["theta_at_zero"] = prof.theta_at_zero;
  s.results["theta_exponent"] = prof.theta_exponent;
  s.results["phi_exponent"] = prof.phi_exponent;
  s.results["theta_fit"] = fit_json(prof.theta_fit);
  s.results["phi_fit"] = fit_json(prof.phi_fit);
  s.results["tight"] = prof.tight;
  s.results["pl_holds"] = prof.pl_holds;
  if (p.pl) {
    const auto pl = pl_constant(spec, box, p.grid_per_axis);
    s.results["pl_constant"] = {{"value", pl.value}, {"refined_value", pl.refined_value}, {"diverged", pl.diverged}};
  }
  if (p.bundle.enabled) {
    const auto& q = p.bundle;
    const auto b = lsi_constant_bundle(q.c1, q.c2, q.beta, q.d, spec.kappa, q.N, q.R);
    json j = {{"c1", b.c1},
              {"c2", b.c2},
              {"beta", b.beta},
              {"d", b.d},
              {"kappa", b.kappa},
              {"N", b.N},
              {"R", b.R},
              {"upper_tight", b.upper_tight},
              {"rho_R", b.rho_R},
              {"A", b.A},
              {"B", b.B},
              {"degenerate_available", b.degenerate_available}};
    if (b.degenerate_available) {
      j["theta_constant"] = b.theta_constant;
      j["theta_exponent"] = b.theta_exponent;
      j["c3"] = b.c3;
      j["xi_constant"] = b.xi_constant;
      j["xi_exponent"] = b.xi_exponent;
    } else {
      j["degenerate_note"] = b.degenerate_note;
    }
    write_json(out / "bundle.json", j);
    s.results["bundle"] = j;
  }
  if (p.poincare.enabled) {
    const auto& q = p.poincare;
    const Fn1 u = q.u == "x4" ? Fn1([](double x) { return x * x * x * x; }) : Fn1([](double x) { return x * x / 2; });
    const auto pb = poincare_lower_bound(u, q.N);
    CsvWriter w(out / "poincare.csv", {"N", "lower_bound", "upper_tight"});
    double worst = -INFINITY;
    for (size_t i = 0; i < pb.N.size(); ++i) {
      double up = NAN;
      if (pb.N[i] >= 1 / q.c2) {
        up = 2 * std::exp(1.0) * std::pow(pb.N[i] * q.c2, -2 / q.beta);
        worst = std::max(worst, pb.bound[i] - up);
      }
      w << pb.N[i] << pb.bound[i] << up;
      w.end_row();
    }
    s.results["poincare_fit"] = fit_json(pb.fit);
    s.rules.push_back(within("poincare_below_upper", worst, -std::numeric_limits<double>::max(), 0, "max of lower minus upper"));
  }
  return s;
}

Summary curie_weiss(const ExperimentConfig& c, const fs::path& out) {
  const auto& p = c.curie_weiss;
  const auto st = curie_weiss_suite(p.kappa0, p.N);
  {
    CsvWriter w(out / "scaling.csv", {"N", "moment", "lsi_lower", "entropy"});
    for (size_t i = 0; i < st.N.size(); ++i) {
      w << st.N[i] << st.barycenter_moment[i] << st.lsi_lower[i] << st.entropy[i];
      w.end_row();
    }
  }
  {
    const auto& pr = st.omega_profile;
    CsvWriter w(out / "omega_profile.csv", {"r", "theta1"});
    for (size_t i = 0; i < pr.r.size(); ++i) {
      w << pr.r[i] << pr.theta1[i];
      w.end_row();
    }
  }
  Summary s;
  s.results["sigma2_c"] = st.sigma2_c;
  s.results["kappa"] = st.kappa;
  s.results["lsi_fit"] = fit_json(st.lsi_fit);
  s.results["entropy_fit"] = fit_json(st.entropy_fit);
  s.results["omega_d2_at_zero"] = st.omega_d2;
  s.results["omega_d4_at_zero"] = st.omega_d4;
  s.results["omega_convex_off_zero"] = st.omega_convex_off_zero;
  s.results["theta_exponent"] = st.theta_exponent;
  s.rules.push_back(within("sigma2_c", st.sigma2_c, p.sigma2_lo, p.sigma2_hi));
  s.rules.push_back(within("lsi_lower_exponent", st.lsi_fit.slope, p.lsi_exponent - p.lsi_tol,
                           p.lsi_exponent + p.lsi_tol));
  s.rules.push_back(within("entropy_slope", st.entropy_fit.slope, p.entropy_slope - p.entropy_tol,
                           p.entropy_slope + p.entropy_tol));
  s.rules.push_back(within("omega_degenerate", st.omega_degenerate ? 1 : 0, 1, 1, "omega''(0) ~ 0 and omega''''(0) > 0"));
  s.rules.push_back(within("theta_exponent", st.theta_exponent, p.theta_exponent - p.theta_tol,
                           p.theta_exponent + p.theta_tol));
  return s;
}

}  // namespace

Summary run_command(const ExperimentConfig& c, const fs::path& out) {
  Summary s;
  const std::string& cmd = c.command;
  if (cmd == "potential-report")
    s = potential_report(c, out);
  else if (cmd == "critical-points")
    s = critical_points(c, out);
  else if (cmd == "gibbs")
    s = gibbs(c, out);
  else if (cmd == "simulate")
    s = simulate(c, out);
  else if (cmd == "pde")
    s = pde(c, out);
  else if (cmd == "transition")
    s = transition(c, out);
  else if (cmd == "saddle-exit")
    s = saddle_exit(c, out);
  else if (cmd == "inequalities")
    s = inequalities(c, out);
  else if (cmd == "curie-weiss")
    s = curie_weiss(c, out);
  else
    throw Error(ErrorKind::configuration, "cli.run", "unknown command " + cmd);
  s.command = cmd;
  return s;
}

}  // namespace mfl::cli
