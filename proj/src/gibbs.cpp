#include "mfl/gibbs.hpp"

#include "mfl/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace mfl {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Scan {
  std::vector<double> x, e;
  int imin = 0;
};

/// n points symmetric about `mid` (n odd puts `mid` itself on the grid); mirrored inputs give
/// mirrored nodes exactly.
Scan scan(const std::function<double(double)>& E, double mid, double hw, int n) {
  Scan s;
  s.x.resize(n);
  s.e.resize(n);
  for (int i = 0; i < n; ++i) {
    const int k = 2 * i - (n - 1);
    s.x[i] = mid + hw * double(k) / double(n - 1);
    s.e[i] = E(s.x[i]);
    if (s.e[i] < s.e[s.imin]) s.imin = i;
  }
  return s;
}

/// Bisection for E(x) - level = 0 between x_in (below) and x_out (above).
double crossing(const std::function<double(double)>& E, double x_in, double x_out, double level) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (x_in + x_out);
    if (m == x_in || m == x_out) break;
    if (E(m) < level)
      x_in = m;
    else
      x_out = m;
  }
  return x_out;
}

/// Golden-section search for a local minimum of sign*E on [lo, hi].
double golden(const std::function<double(double)>& E, double lo, double hi, double sign) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = sign * E(c), fd = sign * E(d);
  for (int it = 0; it < 200 && std::abs(hi - lo) > 1e-14 * (1 + std::abs(lo) + std::abs(hi)); ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = sign * E(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = sign * E(d);
    }
  }
  return 0.5 * (lo + hi);
}

/// Moves outward from x (where E - level < 0) in direction dir until E >= level, then bisects.
double edge(const std::function<double(double)>& E, double x, double dir, double step, double level,
            const char* where) {
  double y = x;
  for (int it = 0; it < 200; ++it) {
    y = x + dir * step;
    if (E(y) >= level) return crossing(E, x, y, level);
    x = y;
    step *= 2;
  }
  throw Error(ErrorKind::numeric, where, "density is not integrable: exponent does not grow");
}

}  // namespace

double GibbsGrid::expect(const Fn1& f) const {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * f(x[i]);
  return s;
}

double GibbsGrid::mean() const {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

double GibbsGrid::central_moment(int k, double center) const {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i] - center, k);
  return s;
}

GibbsGrid gibbs_grid(const Fn1& E_in, const QuadratureOptions& o) {
  const char* where = "gibbs.tilted_measure";
  auto E = [&](double x) {
    const double e = E_in(x);
    if (std::isnan(e)) throw Error(ErrorKind::numeric, where, "exponent evaluated to NaN");
    return e;
  };

  // Bracket: grow the window until both ends sit far above the running minimum.
  double hw = o.half_width;
  Scan s;
  for (int it = 0;; ++it) {
    s = scan(E, o.hint, hw, 201);
    const double em = s.e[s.imin];
    if (s.e.front() - em >= o.tail + 1 && s.e.back() - em >= o.tail + 1) break;
    if (it > 60) throw Error(ErrorKind::numeric, where, "density is not integrable on the real line");
    hw *= 2;
  }
  double emin = s.e[s.imin];
  int il = 0, ir = int(s.x.size()) - 1;
  while (s.e[il] - emin >= o.tail) ++il;
  while (s.e[ir] - emin >= o.tail) --ir;
  double a = il > 0 ? crossing(E, s.x[il], s.x[il - 1], emin + o.tail) : s.x[0];
  double b = ir + 1 < int(s.x.size()) ? crossing(E, s.x[ir], s.x[ir + 1], emin + o.tail) : s.x.back();

  // Locate extrema of the exponent on [a, b]; they become panel boundaries.
  double tail = o.tail;
  GibbsGrid g;
  std::vector<double> extrema;
  double xmin = s.x[s.imin];
  for (int pass = 0; pass < 6; ++pass) {
    const Scan f = scan(E, 0.5 * (a + b), 0.5 * (b - a), o.scan_points);
    extrema.clear();
    if (f.e[f.imin] < emin) {
      emin = f.e[f.imin];
      xmin = f.x[f.imin];
    }
    for (size_t i = 1; i + 1 < f.x.size(); ++i) {
      const double l = f.e[i] - f.e[i - 1], r = f.e[i + 1] - f.e[i];
      if (l < 0 && r >= 0) {
        const double xm = golden(E, f.x[i - 1], f.x[i + 1], 1.0);
        extrema.push_back(xm);
        const double em = E(xm);
        if (em < emin) {
          emin = em;
          xmin = xm;
        }
      } else if (l > 0 && r <= 0) {
        extrema.push_back(golden(E, f.x[i - 1], f.x[i + 1], -1.0));
      }
    }
    const double step = (b - a) / double(o.scan_points);
    if (E(a) - emin < tail) a = edge(E, a, -1.0, step, emin + tail, where);
    if (E(b) - emin < tail) b = edge(E, b, 1.0, step, emin + tail, where);

    // Laplace estimate of the mass beyond each end, relative to the peak scale.
    auto tail_est = [&](double x, double h) {
      const double slope = std::abs(E(x + h) - E(x - h)) / (2 * std::abs(h));
      return std::exp(-(E(x) - emin)) / std::max(slope, 1e-300);
    };
    const double width = std::max(b - a, 1e-300);
    const double hd = 1e-6 * width;
    const double tl = tail_est(a, hd), tr = tail_est(b, hd);
    // Peak mass is at least of order width * exp(-tail); compare against a conservative scale.
    const double peak_scale = width * std::exp(-1.0) / double(o.scan_points);
    if (tl <= o.tail_mass * peak_scale && tr <= o.tail_mass * peak_scale) break;
    tail += 10;
    a = edge(E, a, -1.0, step, emin + tail, where);
    b = edge(E, b, 1.0, step, emin + tail, where);
    if (pass == 5) throw Error(ErrorKind::numeric, where, "tail mass above tolerance at truncation");
  }

  std::vector<double> splits{a};
  std::sort(extrema.begin(), extrema.end());
  for (double x : extrema)
    if (x > splits.back() + 1e-9 * (b - a) && x < b - 1e-9 * (b - a)) splits.push_back(x);
  splits.push_back(b);

  const auto& rule = gauss_legendre64<double>();
  struct Sums {
    double z = 0, m1 = 0, m2 = 0;
  };
  std::vector<double> nodes, weights;
  auto integrate = [&](int P, bool keep) {
    Sums r;
    if (keep) {
      nodes.clear();
      weights.clear();
    }
    for (size_t k = 0; k + 1 < splits.size(); ++k) {
      const double mid = 0.5 * (splits[k] + splits[k + 1]);
      const double hw_seg = 0.5 * (splits[k + 1] - splits[k]);
      const double hp = hw_seg / P;
      for (int p = 0; p < P; ++p) {
        const double c = mid + hw_seg * double(2 * p + 1 - P) / double(P);
        for (size_t j = 0; j < rule.x.size(); ++j) {
          const double x = c + hp * rule.x[j];
          const double wq = hp * rule.w[j] * std::exp(-(E(x) - emin));
          const double y = x - xmin;
          r.z += wq;
          r.m1 += wq * y;
          r.m2 += wq * y * y;
          if (keep) {
            nodes.push_back(x);
            weights.push_back(wq);
          }
        }
      }
    }
    return r;
  };
  // Panel doubling until Z and the first two moments settle. Exponents that are themselves
  // quadrature outputs carry a noise floor; a stalled change below 1e-8 is accepted as converged.
  int P = 2;
  Sums prev = integrate(P, false);
  double last_change = HUGE_VAL;
  while (true) {
    const Sums cur = integrate(2 * P, true);
    const double sd = std::sqrt(std::max(cur.m2 / cur.z, 0.0));
    const double change = std::max({std::abs(cur.z - prev.z) / cur.z,
                                    std::abs(cur.m1 - prev.m1) / (cur.z * sd + 1e-300) / 10,
                                    std::abs(cur.m2 - prev.m2) / (10 * cur.m2 + 1e-300)});
    P *= 2;
    const bool stalled = P >= 32 && change <= 1e-8 && change > 0.25 * last_change;
    prev = cur;
    if (change <= o.rel_tol || stalled) break;
    if (P >= 2048) throw Error(ErrorKind::numeric, where, "quadrature did not converge under panel doubling");
    last_change = change;
  }
  if (!(prev.z > 0) || !std::isfinite(prev.z))
    throw Error(ErrorKind::numeric, where, "partition function is not positive and finite");
  for (double& w : weights) w /= prev.z;
  g.x = std::move(nodes);
  g.w = std::move(weights);
  g.log_norm = std::log(prev.z) - emin;
  g.x_min = xmin;
  g.e_min = emin;
  g.a = a;
  g.b = b;
  g.splits = splits;
  g.panels = P * int(splits.size() - 1);
  return g;
}

TiltedMeasure tilted_measure(const Fn1& V, double xi, const QuadratureOptions& opts) {
  TiltedMeasure t;
  t.xi = xi;
  t.grid = gibbs_grid([&](double x) { return V(x) - xi * x; }, opts);
  t.logZ = t.grid.log_norm;
  t.mean = t.grid.mean();
  t.variance = t.grid.central_moment(2, t.mean);
  return t;
}

double omega(const Fn1& V, double kappa, double xi) {
  return xi * xi / (2 * kappa) - tilted_measure(V, xi).logZ;
}

OmegaDerivatives omega_derivatives(const Fn1& V, double kappa, double xi, double h) {
  const double fm2 = omega(V, kappa, xi - 2 * h), fm1 = omega(V, kappa, xi - h);
  const double f0 = omega(V, kappa, xi);
  const double fp1 = omega(V, kappa, xi + h), fp2 = omega(V, kappa, xi + 2 * h);
  OmegaDerivatives d;
  d.value = f0;
  d.d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
  d.d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h);
  d.d3 = (fp2 - 2 * fp1 + 2 * fm1 - fm2) / (2 * h * h * h);
  d.d4 = (fp2 - 4 * fp1 + 6 * f0 - 4 * fm1 + fm2) / (h * h * h * h);
  return d;
}

EffectivePotential tabulate_omega(const Fn1& V, double kappa, double lo, double hi, int n) {
  if (n < 2 || !(hi > lo))
    throw Error(ErrorKind::input, "gibbs.tabulate_omega", "need n >= 2 and hi > lo");
  const double h = (hi - lo) / (n - 1);
  std::vector<double> f(n + 4);
  for (int i = 0; i < n + 4; ++i) f[i] = omega(V, kappa, lo + (i - 2) * h);
  EffectivePotential t;
  t.kappa = kappa;
  for (int i = 0; i < n; ++i) {
    const int j = i + 2;
    t.xi.push_back(lo + i * h);
    t.omega.push_back(f[j]);
    t.d1.push_back((-f[j + 2] + 8 * f[j + 1] - 8 * f[j - 1] + f[j - 2]) / (12 * h));
    t.d2.push_back((-f[j + 2] + 16 * f[j + 1] - 30 * f[j] + 16 * f[j - 1] - f[j - 2]) / (12 * h * h));
  }
  return t;
}

NuMoments nu_moments(const Fn1& u, double N, const std::vector<int>& orders) {
  if (!(N >= 1)) throw Error(ErrorKind::input, "gibbs.nu_moments", "N must be at least 1");
  const GibbsGrid g = gibbs_grid([&](double x) { return N * u(x); });
  NuMoments r;
  r.minimizer = g.x_min;
  r.orders = orders;
  for (int k : orders) r.moments.push_back(g.central_moment(k, g.x_min));
  r.log_norm = g.log_norm;
  return r;
}

Fn1 curie_weiss_V(double sigma2, double kappa0) {
  if (!(sigma2 > 0) || !(kappa0 >= 0))
    throw Error(ErrorKind::input, "gibbs.curie_weiss_V", "sigma2 must be positive, kappa0 non-negative");
  const double b = kappa0 - 1.0;
  return [sigma2, b](double x) {
    const double x2 = x * x;
    return (0.25 * x2 * x2 + 0.5 * b * x2) / sigma2;
  };
}

double curie_weiss_f(double sigma2, double kappa0, double m) {
  const double kappa = kappa0 / sigma2;
  return tilted_measure(curie_weiss_V(sigma2, kappa0), kappa * m).mean;
}

double curie_weiss_fprime(double sigma2, double kappa0, double m) {
  const double kappa = kappa0 / sigma2;
  return kappa * tilted_measure(curie_weiss_V(sigma2, kappa0), kappa * m).variance;
}

double stationary_entropy(const Fn1& V, double kappa, double N) {
  if (!(N >= 1)) throw Error(ErrorKind::input, "gibbs.stationary_entropy", "N must be at least 1");
  const TiltedMeasure rho = tilted_measure(V, 0.0);
  const double w0 = omega(V, kappa, 0.0);
  const GibbsGrid nu = gibbs_grid([&](double xi) { return N * (omega(V, kappa, xi) - w0); });
  return -0.5 * kappa * (rho.variance + N * rho.mean * rho.mean) + 0.5 * std::log(N / (2 * kPi * kappa)) +
         nu.log_norm;
}

double stationary_entropy_curie_weiss(double N, double sigma2, double kappa0) {
  return stationary_entropy(curie_weiss_V(sigma2, kappa0), kappa0 / sigma2, N);
}

double gibbs_barycenter_variance(const Fn1& V, double kappa, double N) {
  if (!(N >= 1)) throw Error(ErrorKind::input, "gibbs.gibbs_barycenter_variance", "N must be at least 1");
  if (kappa == 0) {
    const TiltedMeasure rho = tilted_measure(V, 0.0);
    return rho.variance / N + rho.mean * rho.mean;
  }
  const double w0 = omega(V, kappa, 0.0);
  const GibbsGrid nu = gibbs_grid([&](double xi) { return N * (omega(V, kappa, xi) - w0); });
  double s = 0;
  for (size_t i = 0; i < nu.x.size(); ++i) {
    const TiltedMeasure mu = tilted_measure(V, nu.x[i]);
    s += nu.w[i] * (mu.variance / N + mu.mean * mu.mean);
  }
  return s;
}

double gibbs_barycenter_variance(double N, double sigma2, double kappa0) {
  return gibbs_barycenter_variance(curie_weiss_V(sigma2, kappa0), kappa0 / sigma2, N);
}

}  // namespace mfl
