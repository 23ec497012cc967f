#include "mfl/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfl {

namespace {

constexpr double kE = 2.71828182845904523536;
const double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Every point of the tensor grid with n points per axis.
template <class F>
void for_each_grid_point(const Box<double>& box, int n, F&& f) {
  const int d = int(box.lo.size());
  std::vector<int> idx(d, 0);
  VecX m(d);
  while (true) {
    for (int j = 0; j < d; ++j) m[j] = n == 1 ? 0.5 * (box.lo[j] + box.hi[j])
                                               : box.lo[j] + (box.hi[j] - box.lo[j]) * idx[j] / (n - 1);
    f(m);
    int j = 0;
    while (j < d && ++idx[j] == n) idx[j++] = 0;
    if (j == d) return;
  }
}

std::vector<VecX> search_directions(const ScalarField& f, const VecX& at) {
  const int d = f.d;
  std::vector<VecX> dirs;
  for (int j = 0; j < d; ++j) dirs.push_back(VecX::Unit(d, j));
  if (f.hessian) {
    Eigen::SelfAdjointEigenSolver<MatX> es(f.hessian(at));
    for (int j = 0; j < d; ++j) dirs.push_back(es.eigenvectors().col(j));
  }
  if (d <= 4) {
    std::vector<int> c(d, -1);
    while (true) {
      VecX v(d);
      for (int j = 0; j < d; ++j) v[j] = c[j];
      if (v.squaredNorm() > 1) dirs.push_back(v.normalized());
      int j = 0;
      while (j < d && ++c[j] == 2) c[j++] = -1;
      if (j == d) break;
    }
  }
  return dirs;
}

struct Candidate {
  VecX m;
  double value, grad2;
};

size_t nearest(const std::vector<VecX>& pts, const VecX& m) {
  size_t best = 0;
  double bd = kInf;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double dd = (pts[i] - m).squaredNorm();
    if (dd < bd) {
      bd = dd;
      best = i;
    }
  }
  return best;
}

/// Compass search with expansion on the best feasible point; infeasible trials are mapped back
/// onto the feasible set by `project` (which may return false to reject).
template <class Obj, class Proj>
void compass_search(VecX& x, double& fx, const std::vector<VecX>& dirs, double step, double min_step, Obj&& obj,
                    Proj&& project, int budget) {
  int evals = 0;
  while (step > min_step && evals < budget) {
    bool improved = false;
    for (const VecX& dir : dirs) {
      for (double sg : {1.0, -1.0}) {
        double h = step;
        while (evals < budget) {
          VecX y = x + sg * h * dir;
          if (!project(y)) break;
          const double fy = obj(y);
          ++evals;
          if (!(fy > fx)) break;
          x = y;
          fx = fy;
          improved = true;
          h *= 2;
        }
        if (improved) break;
      }
      if (improved) break;
    }
    if (!improved) step *= 0.5;
  }
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int per_decade) {
  if (!(lo > 0) || !(hi > lo) || per_decade < 1)
    throw Error(ErrorKind::input, "inequalities.log_grid", "need 0 < lo < hi and per_decade >= 1");
  const double decades = std::log10(hi / lo);
  const int n = std::max(1, int(std::lround(decades * per_decade)));
  std::vector<double> r(n + 1);
  for (int i = 0; i <= n; ++i) r[i] = lo * std::pow(10.0, decades * i / n);
  r[n] = hi;
  return r;
}

ScalarField field_of(const PotentialSpec<double>& spec, const std::vector<CriticalPoint<double>>& critical) {
  ScalarField f;
  f.d = spec.d;
  f.kappa = spec.kappa;
  f.value = [spec](const VecX& m) { return value(spec, m); };
  f.gradient = [spec](const VecX& m) {
    VecX g(spec.d);
    gradient_raw(spec, m.data(), g.data());
    return g;
  };
  f.hessian = [spec](const VecX& m) { return hessian(spec, m); };
  f.critical = critical;
  return f;
}

InequalityProfile lojasiewicz_profile(const ScalarField& f, const Box<double>& box, int grid_per_axis,
                                      const std::vector<double>& r_grid) {
  const char* where = "inequalities.lojasiewicz_profile";
  if (f.critical.empty()) throw Error(ErrorKind::dependency, where, "no critical points supplied");
  if (r_grid.empty() || !std::is_sorted(r_grid.begin(), r_grid.end()) || !(r_grid.front() > 0))
    throw Error(ErrorKind::input, where, "r grid must be positive and increasing");
  const int d = f.d;
  InequalityProfile p;
  p.kappa = f.kappa;
  p.r = r_grid;

  double vmin = kInf;
  for (const auto& c : f.critical) vmin = std::min(vmin, c.value);
  const double vtol = 1e-10 * (1 + std::abs(vmin));
  // Global minimizers; Newton leaves near-copies of a degenerate minimizer, keep the one with
  // the smallest gradient within each cluster.
  std::vector<VecX> mins;
  std::vector<double> mins_g;
  std::vector<char> mins_deg;
  for (const auto& c : f.critical) {
    if (c.value > vmin + vtol || c.index != 0) continue;
    const double gn = f.gradient(c.location).norm();
    bool merged = false;
    for (size_t i = 0; i < mins.size(); ++i)
      if ((mins[i] - c.location).norm() < 1e-3 * (1 + c.location.norm())) {
        if (gn < mins_g[i]) {
          mins[i] = c.location;
          mins_g[i] = gn;
          mins_deg[i] = c.degenerate;
        }
        merged = true;
      }
    if (!merged) {
      mins.push_back(c.location);
      mins_g.push_back(gn);
      mins_deg.push_back(c.degenerate);
    }
  }
  if (mins.empty()) throw Error(ErrorKind::dependency, where, "no global minimizer among the critical points");
  p.min_value = vmin;
  p.minimizers = mins;
  p.theta_at_zero = 0;
  for (const auto& c : f.critical) p.theta_at_zero = std::max(p.theta_at_zero, c.value - vmin);
  p.tight = p.theta_at_zero <= vtol;
  p.pl_holds = p.tight && std::none_of(mins_deg.begin(), mins_deg.end(), [](char c) { return c != 0; });
  if (p.tight) p.theta_at_zero = 0;

  auto vbar = [&](const VecX& m) { return f.value(m) - vmin; };
  auto dist2 = [&](const VecX& m) { return (mins[nearest(mins, m)] - m).squaredNorm(); };

  // Candidate set: tensor grid plus graded rays out of every critical point.
  std::vector<Candidate> cand;
  for_each_grid_point(box, grid_per_axis, [&](const VecX& m) {
    cand.push_back({m, vbar(m), f.gradient(m).squaredNorm()});
  });
  double lowest = kInf;
  for (const auto& c : cand) lowest = std::min(lowest, c.value);
  if (lowest < -1e-8 * (1 + std::abs(vmin)))
    throw Error(ErrorKind::dependency, where, "grid value below every critical value: global minimizer missed");
  std::vector<VecX> crit_pts;
  for (const auto& c : f.critical) crit_pts.push_back(c.location);
  for (const VecX& m : mins) crit_pts.push_back(m);
  const double L = 0.5 * (box.hi - box.lo).norm();
  std::vector<VecX> base_dirs;
  for (const VecX& c : crit_pts) {
    const auto dirs = search_directions(f, c);
    if (base_dirs.empty()) base_dirs = dirs;
    for (const VecX& u : dirs)
      for (double sg : {1.0, -1.0})
        for (int k = 0; k <= 64; ++k) {
          const VecX m = c + sg * L * std::pow(10.0, -8.0 * (64 - k) / 64) * u;
          cand.push_back({m, vbar(m), f.gradient(m).squaredNorm()});
        }
    cand.push_back({c, vbar(c), f.gradient(c).squaredNorm()});
  }
  std::vector<double> cand_d2(cand.size());
  for (size_t i = 0; i < cand.size(); ++i) cand_d2[i] = dist2(cand[i].m);

  const int n = int(r_grid.size());
  p.theta1.assign(n, 0);
  p.phi1.assign(n, 0);
  const double min_step_rel = 1e-13;

  // Theta_1, increasing r: the previous optimum stays feasible.
  VecX prev;
  double prev_val = -kInf;
  for (int i = 0; i < n; ++i) {
    const double r = r_grid[i];
    auto feasible = [&](const VecX& m) { return f.gradient(m).squaredNorm() <= r; };
    VecX x;
    double fx = -kInf;
    for (const auto& c : cand)
      if (c.grad2 <= r && c.value > fx) {
        fx = c.value;
        x = c.m;
      }
    if (prev_val > fx) {
      fx = prev_val;
      x = prev;
    }
    if (!std::isfinite(fx)) throw Error(ErrorKind::search, where, "no feasible point for r = " + std::to_string(r));
    // Push outward along the ray from the nearest critical point to the constraint boundary.
    auto push = [&](VecX& y) {
      const VecX c = crit_pts[nearest(crit_pts, y)];
      const VecX dir = y - c;
      if (dir.norm() == 0) return;
      double lo = 1, hi = 2;
      while (feasible(c + hi * dir) && hi < 1e6) {
        lo = hi;
        hi *= 2;
      }
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(c + mid * dir) ? lo : hi) = mid;
      }
      const VecX z = c + lo * dir;
      const double fz = vbar(z);
      if (fz > fx) {
        y = z;
        fx = fz;
      }
    };
    push(x);
    if (d > 1) {
      auto project = [&](VecX& y) {
        if (feasible(y)) return true;
        const VecX c = crit_pts[nearest(crit_pts, y)];
        double lo = 0, hi = 1;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          (feasible(c + mid * (y - c)) ? lo : hi) = mid;
        }
        if (lo == 0) return false;
        y = c + lo * (y - c);
        return true;
      };
      const double step = std::max(0.25 * (x - crit_pts[nearest(crit_pts, x)]).norm(), 1e-12);
      compass_search(x, fx, base_dirs, step, min_step_rel * (1 + x.norm()), vbar, project, 20000);
      push(x);
    }
    p.theta1[i] = std::max(fx, p.theta_at_zero);
    prev = x;
    prev_val = fx;
  }

  // Phi_1, decreasing r: the previous optimum stays feasible.
  prev_val = kInf;
  for (int i = n - 1; i >= 0; --i) {
    const double r = r_grid[i];
    const double rho2 = 2 * r / f.kappa;
    auto feasible = [&](const VecX& m) { return dist2(m) >= rho2; };
    VecX x;
    double fx = kInf;
    for (size_t k = 0; k < cand.size(); ++k)
      if (cand_d2[k] >= rho2 && cand[k].value < fx) {
        fx = cand[k].value;
        x = cand[k].m;
      }
    if (prev_val < fx) {
      fx = prev_val;
      x = prev;
    }
    if (!std::isfinite(fx)) {
      p.phi1[i] = kNaN;  // the constraint set misses the box
      continue;
    }
    auto project = [&](VecX& y) {
      if (feasible(y)) return true;
      const VecX& c = mins[nearest(mins, y)];
      const double nrm = (y - c).norm();
      if (nrm == 0) return false;
      y = c + (y - c) * (std::sqrt(rho2) * (1 + 1e-15) / nrm);
      return feasible(y);
    };
    // Pull inward along the ray to the sphere around the nearest minimizer.
    auto pull = [&](VecX& y) {
      VecX z = y;
      const VecX& c = mins[nearest(mins, z)];
      if ((z - c).norm() == 0) return;
      z = c + (z - c) * (std::sqrt(rho2) * (1 + 1e-15) / (z - c).norm());
      if (!feasible(z)) return;
      const double fz = vbar(z);
      if (fz < fx) {
        y = z;
        fx = fz;
      }
    };
    pull(x);
    if (d > 1) {
      double gx = -fx;
      auto neg = [&](const VecX& m) { return -vbar(m); };
      const double step = std::max(0.25 * std::sqrt(rho2), 1e-12);
      compass_search(x, gx, base_dirs, step, min_step_rel * (1 + x.norm()), neg, project, 20000);
      fx = -gx;
      pull(x);
    }
    p.phi1[i] = std::max(fx, 0.0);
    prev = x;
    prev_val = fx;
  }

  // Running-max construction, including s = 0.
  p.theta_tilde.assign(n, 0);
  double best = p.theta_at_zero;
  for (int i = 0; i < n; ++i) {
    best = std::max(best, p.theta1[i] - r_grid[i] / (2 * f.kappa));
    p.theta_tilde[i] = best + r_grid[i] / (2 * f.kappa);
  }

  // Exponent fits over the smallest decade (at least 8 points).
  std::vector<double> xs, yt, xp, yp;
  for (int i = 0; i < n; ++i) {
    if (r_grid[i] > 10 * r_grid[0] * (1 + 1e-12) && int(xs.size()) >= 8) break;
    const double t = p.tight ? p.theta1[i] : p.theta1[i] - p.theta_at_zero;
    if (t > 0) {
      xs.push_back(r_grid[i]);
      yt.push_back(t);
    }
    if (p.phi1[i] > 0) {
      xp.push_back(r_grid[i]);
      yp.push_back(p.phi1[i]);
    }
  }
  p.theta_exponent = kNaN;
  p.phi_exponent = kNaN;
  if (xs.size() >= 2) {
    p.theta_fit = loglog_fit(xs, yt);
    p.theta_exponent = p.theta_fit.slope;
  }
  if (xp.size() >= 2) {
    p.phi_fit = loglog_fit(xp, yp);
    p.phi_exponent = p.phi_fit.slope;
  }
  return p;
}

InequalityProfile lojasiewicz_profile(const PotentialSpec<double>& spec, const Box<double>& box, int grid_per_axis,
                                      const std::vector<double>& r_grid) {
  const auto search = find_critical_points(spec, box, spec.d == 1 ? 201 : spec.d == 2 ? 41 : 11);
  for (const auto& c : search.points)
    for (int j = 0; j < spec.d; ++j)
      if (c.location[j] < box.lo[j] || c.location[j] > box.hi[j])
        throw Error(ErrorKind::input, "inequalities.lojasiewicz_profile",
                    "critical point outside the grid box; enlarge the box");
  return lojasiewicz_profile(field_of(spec, search.points), box, grid_per_axis,
                             r_grid.empty() ? log_grid(1e-9, 1, 10) : r_grid);
}

PlConstant pl_constant(const PotentialSpec<double>& spec, const Box<double>& box, int grid_per_axis) {
  const char* where = "inequalities.pl_constant";
  if (grid_per_axis < 2) throw Error(ErrorKind::input, where, "need at least two points per axis");
  const auto search = find_critical_points(spec, box, spec.d == 1 ? 201 : spec.d == 2 ? 41 : 11);
  if (search.points.empty()) throw Error(ErrorKind::dependency, where, "no critical points found");
  double vmin = kInf;
  for (const auto& c : search.points) vmin = std::min(vmin, c.value);
  auto scan = [&](int n, VecX* at) {
    double sup = 0;
    VecX g(spec.d);
    for_each_grid_point(box, n, [&](const VecX& m) {
      gradient_raw(spec, m.data(), g.data());
      const double g2 = g.squaredNorm();
      if (g2 < 1e-14) return;
      const double q = 2 * std::max(value(spec, m) - vmin, 0.0) / g2;
      if (q > sup) {
        sup = q;
        if (at) *at = m;
      }
    });
    return sup;
  };
  PlConstant c;
  VecX at_fine;
  c.value = scan(grid_per_axis, &c.argmax);
  c.refined_value = scan(2 * grid_per_axis - 1, &at_fine);
  const double h = (box.hi - box.lo).maxCoeff() / (grid_per_axis - 1);
  bool near_bad = false;
  for (const auto& p : search.points)
    if (p.value > vmin + 1e-10 * (1 + std::abs(vmin)) && (p.location - at_fine).norm() <= 2 * h) near_bad = true;
  c.diverged = near_bad && c.refined_value > 1.5 * c.value;
  return c;
}

double LsiConstantBundle::theta(double r) const {
  if (!degenerate_available) throw Error(ErrorKind::parameter, "inequalities.lsi_constant_bundle", degenerate_note);
  if (r <= 0) return 0;
  return theta_constant * std::max(r, std::pow(r, theta_exponent));
}

double LsiConstantBundle::theta_tilde(double r) const {
  if (!degenerate_available) throw Error(ErrorKind::parameter, "inequalities.lsi_constant_bundle", degenerate_note);
  if (r <= 0) return 0;
  // h(s) = Theta(s) - s / (2 kappa) is concave on [0, 1] and affine on [1, inf).
  const double C = theta_constant, g = theta_exponent, k = 1 / (2 * kappa);
  std::vector<double> s = {0.0, std::min(r, 1.0), r};
  const double star = std::pow(k / (C * g), 1 / (g - 1));
  if (star < std::min(r, 1.0)) s.push_back(star);
  double best = -kInf;
  for (double v : s) best = std::max(best, theta(v) - k * v);
  return best + k * r;
}

double LsiConstantBundle::xi(double r) const {
  if (!degenerate_available) throw Error(ErrorKind::parameter, "inequalities.lsi_constant_bundle", degenerate_note);
  if (r <= 0) return 0;
  return xi_constant * std::max(r, std::pow(r, xi_exponent));
}

LsiConstantBundle lsi_constant_bundle(double c1, double c2, double beta, int d, double kappa, double N, double R) {
  const char* where = "inequalities.lsi_constant_bundle";
  if (!(c2 > 0)) throw Error(ErrorKind::parameter, where, "hypothesis c2 > 0 fails");
  if (!(c1 >= c2)) throw Error(ErrorKind::parameter, where, "hypothesis c1 >= c2 fails");
  if (!(beta >= 2)) throw Error(ErrorKind::parameter, where, "hypothesis beta >= 2 fails");
  if (!(N >= 1)) throw Error(ErrorKind::parameter, where, "hypothesis N >= 1 fails");
  if (d < 1) throw Error(ErrorKind::parameter, where, "hypothesis d >= 1 fails");
  if (!(kappa > 0)) throw Error(ErrorKind::parameter, where, "hypothesis kappa > 0 fails");
  if (!(R > 0)) throw Error(ErrorKind::parameter, where, "hypothesis R > 0 fails");
  if (!(N >= 1 / c2)) throw Error(ErrorKind::parameter, where, "hypothesis N >= 1/c2 fails");
  LsiConstantBundle b;
  b.c1 = c1;
  b.c2 = c2;
  b.beta = beta;
  b.d = d;
  b.kappa = kappa;
  b.N = N;
  b.R = R;
  b.upper_tight = 2 * kE * std::pow(N * c2, -2 / beta);
  b.rho_R = std::min(c1, c2 * std::pow(R / 2, beta - 2)) / 3;
  b.A = 12 / b.rho_R;
  b.B = 6 * std::log(1 + 4 * d + 2 * b.rho_R * R * R) + 0.75 * std::max(1.0 + 4 * d, 2 * b.rho_R * R * R);
  b.theta_exponent = beta / (2 * beta - 2);
  b.xi_exponent = 2 / beta;
  if (!(beta > 2)) {
    b.degenerate_note = "hypothesis beta > 2 fails for the degenerate constants";
    return b;
  }
  if (!(N >= 3 * (1 + 4.0 * d) / (8 * c2))) {
    b.degenerate_note = "hypothesis N >= 3(1+4d)/(8 c2) fails for the degenerate constants";
    return b;
  }
  b.degenerate_available = true;
  b.c3 = 3 * (1 + 4.0 * d) / (std::pow(2.0, 3 - beta) * c2);
  b.theta_constant = std::max({std::pow(2.0, beta + 4) / c2, std::pow(2.0, 4 - beta) * c2,
                               kE * std::pow(c2, -2 / beta) * std::pow(b.c3, (beta - 2) / beta),
                               36 / c2 + std::pow(2.0, 8 - 2 * beta) * c2 / 3});
  // C' = (sup g(u) / max(u^{1/2}, u^{1/beta}))^2 over the tabulated range of Theta-tilde.
  std::vector<double> r, t;
  for (double s : log_grid(1e-40, 1e8, 20)) {
    const double v = b.theta_tilde(s);
    if (v >= 1e-10) {
      r.push_back(s);
      t.push_back(v);
    }
  }
  const GPhi gp = g_and_phi_from_theta(r, t, kappa);
  double sup = 0;
  for (size_t i = 0; i < gp.u.size(); ++i)
    sup = std::max(sup, gp.g[i] / std::max(std::sqrt(gp.u[i]), std::pow(gp.u[i], 1 / beta)));
  b.xi_constant = sup * sup;
  return b;
}

PoincareBound poincare_lower_bound(const Fn1& u, const std::vector<double>& N_list) {
  const char* where = "inequalities.poincare_lower_bound";
  if (N_list.size() < 2) throw Error(ErrorKind::input, where, "need at least two N values");
  PoincareBound p;
  for (double N : N_list) {
    if (!(N > 0)) throw Error(ErrorKind::input, where, "N must be positive");
    const GibbsGrid g = gibbs_grid([&](double x) { return N * u(x); });
    p.N.push_back(N);
    p.bound.push_back(g.central_moment(2, g.mean()));
  }
  p.fit = loglog_fit(p.N, p.bound);
  return p;
}

GPhi g_and_phi_from_theta(const std::vector<double>& r, const std::vector<double>& theta, double kappa) {
  const char* where = "inequalities.g_and_phi_from_theta";
  if (r.size() != theta.size() || r.size() < 3) throw Error(ErrorKind::input, where, "need at least three pairs");
  if (!(kappa > 0)) throw Error(ErrorKind::input, where, "kappa must be positive");
  GPhi gp;
  gp.kappa = kappa;
  for (size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0) || !(theta[i] > 0)) throw Error(ErrorKind::input, where, "tabulation must be positive");
    if (i > 0 && (r[i] <= r[i - 1] || theta[i] < theta[i - 1]))
      throw Error(ErrorKind::input, where, "theta must be nondecreasing on an increasing grid");
    // Generalized inverse: the smallest r reaching each value.
    if (!gp.u.empty() && theta[i] == gp.u.back()) continue;
    gp.u.push_back(theta[i]);
    gp.theta_inv.push_back(r[i]);
  }
  if (gp.u.size() < 3) throw Error(ErrorKind::input, where, "need at least three distinct theta values");
  // Power law Theta^{-1}(u) ~ c u^p over the first decade of u.
  std::vector<double> fu, fr;
  for (size_t i = 0; i < gp.u.size(); ++i) {
    if (gp.u[i] > 10 * gp.u[0] && fu.size() >= 3) break;
    fu.push_back(gp.u[i]);
    fr.push_back(gp.theta_inv[i]);
  }
  const LinearFit lf = loglog_fit(fu, fr);
  gp.left_exponent = lf.slope;
  if (!(gp.left_exponent < 2))
    throw Error(ErrorKind::analytic, where,
                "Theta^{-1}(u)^{-1/2} is not integrable at 0 (small-u exponent of Theta at most 1/2)");
  // Match the power law to the first node exactly.
  gp.left_coeff = gp.theta_inv[0] / std::pow(gp.u[0], gp.left_exponent);
  const double q0 = gp.left_exponent;
  gp.g.assign(gp.u.size(), 0);
  gp.g[0] = std::pow(gp.left_coeff, -0.5) * std::pow(gp.u[0], 1 - q0 / 2) / (1 - q0 / 2);
  for (size_t i = 0; i + 1 < gp.u.size(); ++i) {
    const double q = std::log(gp.theta_inv[i + 1] / gp.theta_inv[i]) / std::log(gp.u[i + 1] / gp.u[i]);
    const double a = std::pow(gp.theta_inv[i], -0.5) * std::pow(gp.u[i], q / 2);
    const double e = 1 - q / 2;
    const double inc = std::abs(e) < 1e-12 ? a * std::log(gp.u[i + 1] / gp.u[i])
                                           : a * (std::pow(gp.u[i + 1], e) - std::pow(gp.u[i], e)) / e;
    gp.g[i + 1] = gp.g[i] + inc;
  }
  for (size_t i = 0; i < gp.u.size(); ++i) {
    gp.phi_x.push_back(kappa * gp.g[i] * gp.g[i] / 2);
    gp.phi.push_back(gp.u[i]);
  }
  return gp;
}

double GPhi::g_at(double v) const {
  if (v <= 0) return 0;
  if (v <= u[0]) {
    const double q = left_exponent;
    return std::pow(left_coeff, -0.5) * std::pow(v, 1 - q / 2) / (1 - q / 2);
  }
  if (v > u.back() * (1 + 1e-14))
    throw Error(ErrorKind::input, "inequalities.g_and_phi_from_theta", "argument beyond the tabulated range");
  size_t i = size_t(std::upper_bound(u.begin(), u.end(), v) - u.begin());
  if (i >= u.size()) return g.back();
  --i;
  const double q = std::log(theta_inv[i + 1] / theta_inv[i]) / std::log(u[i + 1] / u[i]);
  const double a = std::pow(theta_inv[i], -0.5) * std::pow(u[i], q / 2);
  const double e = 1 - q / 2;
  return g[i] + (std::abs(e) < 1e-12 ? a * std::log(v / u[i]) : a * (std::pow(v, e) - std::pow(u[i], e)) / e);
}

double GPhi::g_inverse(double s) const {
  if (s <= 0) return 0;
  if (s <= g[0]) {
    const double q = left_exponent;
    return std::pow(s * (1 - q / 2) * std::sqrt(left_coeff), 1 / (1 - q / 2));
  }
  if (s > g.back() * (1 + 1e-14))
    throw Error(ErrorKind::input, "inequalities.g_and_phi_from_theta", "argument beyond the tabulated range");
  size_t i = size_t(std::upper_bound(g.begin(), g.end(), s) - g.begin());
  if (i >= g.size()) return u.back();
  double lo = std::log(u[i - 1]), hi = std::log(u[i]);
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::abs(hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g_at(std::exp(mid)) < s ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

double GPhi::phi_at(double x) const {
  if (x <= 0) return 0;
  return g_inverse(std::sqrt(2 * x / kappa));
}

CurieWeissSuite curie_weiss_suite(double kappa0, const std::vector<double>& N_list) {
  const char* where = "inequalities.curie_weiss_suite";
  if (!(kappa0 > 0)) throw Error(ErrorKind::input, where, "kappa0 must be positive");
  if (N_list.size() < 2) throw Error(ErrorKind::input, where, "need at least two N values");
  CurieWeissSuite s;
  s.kappa0 = kappa0;
  s.sigma2_c = critical_temperature(kappa0, 1e-12);
  s.kappa = kappa0 / s.sigma2_c;
  const Fn1 V = curie_weiss_V(s.sigma2_c, kappa0);
  std::vector<double> lnN;
  for (double N : N_list) {
    s.N.push_back(N);
    const double m2 = gibbs_barycenter_variance(N, s.sigma2_c, kappa0);
    s.barycenter_moment.push_back(m2);
    s.lsi_lower.push_back(N * m2);
    s.entropy.push_back(stationary_entropy_curie_weiss(N, s.sigma2_c, kappa0));
    lnN.push_back(std::log(N));
  }
  s.lsi_fit = loglog_fit(s.N, s.lsi_lower);
  s.entropy_fit = linear_fit(lnN, s.entropy);

  const double k = s.kappa;
  const TiltedMeasure t0 = tilted_measure(V, 0.0);
  s.omega_d2 = 1 / k - t0.variance;
  s.omega_d4 = -t0.cumulant4();
  s.omega_convex_off_zero = true;
  for (int i = -40; i <= 40; ++i) {
    if (i == 0) continue;
    const double xi = 0.05 * i;
    if (!(1 / k - tilted_measure(V, xi).variance > 0)) s.omega_convex_off_zero = false;
  }
  s.omega_degenerate = std::abs(s.omega_d2) <= 1e-8 / k && s.omega_d4 > 0;

  ScalarField w;
  w.d = 1;
  w.kappa = k;
  w.value = [&](const VecX& x) { return x[0] * x[0] / (2 * k) - tilted_measure(V, x[0]).logZ; };
  w.gradient = [&](const VecX& x) { return VecX::Constant(1, x[0] / k - tilted_measure(V, x[0]).mean); };
  CriticalPoint<double> c0;
  c0.location = VecX::Zero(1);
  c0.value = w.value(c0.location);
  c0.spectrum = VecX::Constant(1, s.omega_d2);
  c0.degenerate = std::abs(s.omega_d2) <= eigen_tolerance<double>(c0.spectrum);
  c0.index = c0.degenerate || s.omega_d2 > 0 ? 0 : 1;
  w.critical = {c0};
  s.omega_profile = lojasiewicz_profile(w, cube(1, 1.0), 101, log_grid(1e-10, 1e-8, 10));
  s.theta_exponent = s.omega_profile.theta_exponent;
  return s;
}

}  // namespace mfl
