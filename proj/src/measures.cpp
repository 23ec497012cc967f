#include "mfl/measures.hpp"

#include "mfl/critical_points.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mfl {

namespace {

constexpr double kPi = 3.14159265358979323846;

double phi(double z) { return std::isfinite(z) ? std::exp(-0.5 * z * z) / std::sqrt(2 * kPi) : 0.0; }

/// Minimum-cost perfect matching on a square cost matrix (potentials form of the Hungarian method).
double assignment_cost(const MatX& C) {
  const int n = int(C.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = C(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double cost = 0;
  for (int j = 1; j <= n; ++j) cost += C(p[j] - 1, j - 1);
  return cost;
}

struct Quantile {
  std::vector<double> t;  ///< CDF breakpoints
  std::vector<double> q;  ///< quantile at each breakpoint
};

}  // namespace

GaussianSpec::GaussianSpec(VecX m, double var) : mean(std::move(m)), s2(var) {
  if (!(var > 0)) throw Error(ErrorKind::input, "measures.gaussian", "variance must be positive");
}

GaussianSpec GaussianSpec::from_covariance(const VecX& m, const MatX& cov) {
  if (cov.rows() != m.size() || cov.cols() != m.size())
    throw Error(ErrorKind::input, "measures.gaussian", "covariance shape does not match the mean");
  const double s2 = cov(0, 0);
  const MatX iso = s2 * MatX::Identity(m.size(), m.size());
  if ((cov - iso).cwiseAbs().maxCoeff() > 1e-12 * (1 + std::abs(s2)))
    throw Error(ErrorKind::unsupported, "measures.gaussian", "only isotropic covariances are supported");
  return GaussianSpec(m, s2);
}

GaussianSpec local_equilibrium(const VecX& m, double kappa) { return GaussianSpec(m, 1.0 / kappa); }

double Density1D::mass() const {
  double s = 0;
  for (double v : p) s += v;
  return s * h();
}

double Density1D::mean() const {
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * p[i];
  return s * h();
}

double Density1D::variance() const {
  const double m = mean();
  double s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += (x[i] - m) * (x[i] - m) * p[i];
  return s * h();
}

Density1D make_density(std::vector<double> x, std::vector<double> p) {
  const char* where = "measures.density";
  if (x.size() < 2 || x.size() != p.size())
    throw Error(ErrorKind::input, where, "need at least two cells and matching value count");
  const double h = x[1] - x[0];
  for (size_t i = 1; i < x.size(); ++i)
    if (std::abs((x[i] - x[i - 1]) - h) > 1e-9 * std::abs(h) || !(h > 0))
      throw Error(ErrorKind::input, where, "cells must be uniform and ascending");
  for (double v : p)
    if (!(v >= 0)) throw Error(ErrorKind::input, where, "density values must be non-negative");
  Density1D d;
  d.x = std::move(x);
  d.p = std::move(p);
  const double mass = d.mass();
  if (!(mass > 0)) throw Error(ErrorKind::input, where, "density has zero mass");
  d.normalized = std::abs(mass - 1) > 1e-8;
  for (double& v : d.p) v /= mass;
  return d;
}

Density1D tabulate(const std::function<double(double)>& f, double lo, double hi, int n) {
  std::vector<double> x(n), p(n);
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    x[i] = lo + (i + 0.5) * h;
    p[i] = f(x[i]);
  }
  Density1D d = make_density(std::move(x), std::move(p));
  d.normalized = false;
  return d;
}

EntropyFisher gaussian_entropy_fisher(const GaussianSpec& mu, const GaussianSpec& rho) {
  if (mu.d() != rho.d())
    throw Error(ErrorKind::input, "measures.gaussian_entropy_fisher", "dimension mismatch");
  const double d = mu.d();
  const double r = mu.s2 / rho.s2;
  const double dm2 = (mu.mean - rho.mean).squaredNorm();
  EntropyFisher out;
  out.H = 0.5 * d * (r - 1 - std::log(r)) + dm2 / (2 * rho.s2);
  const double a = 1 / rho.s2 - 1 / mu.s2;
  out.I = d * mu.s2 * a * a + dm2 / (rho.s2 * rho.s2);
  return out;
}

EntropyFisher entropy_fisher(const Density1D& mu, const Density1D& rho) {
  if (mu.x.size() != rho.x.size() || std::abs(mu.x[0] - rho.x[0]) > 1e-12 * (1 + std::abs(mu.x[0])))
    throw Error(ErrorKind::input, "measures.entropy_fisher", "densities must share a grid");
  const size_t n = mu.x.size();
  const double h = mu.h();
  std::vector<double> lr(n);
  for (size_t i = 0; i < n; ++i) lr[i] = std::log(std::max(mu.p[i], 1e-300)) - std::log(std::max(rho.p[i], 1e-300));
  EntropyFisher out;
  for (size_t i = 0; i < n; ++i) {
    if (mu.p[i] <= 1e-300) continue;
    out.H += h * mu.p[i] * lr[i];
    if (i == 0 || i + 1 == n) continue;
    const double g = (lr[i + 1] - lr[i - 1]) / (2 * h);
    out.I += h * mu.p[i] * g * g;
  }
  return out;
}

double w2(const GaussianSpec& mu, const GaussianSpec& nu) {
  if (mu.d() != nu.d()) throw Error(ErrorKind::input, "measures.w2", "dimension mismatch");
  const double ds = std::sqrt(mu.s2) - std::sqrt(nu.s2);
  return std::sqrt((mu.mean - nu.mean).squaredNorm() + mu.d() * ds * ds);
}

double w2(const std::vector<double>& a_in, const std::vector<double>& b_in) {
  if (a_in.empty() || b_in.empty()) throw Error(ErrorKind::input, "measures.w2", "empty sample set");
  std::vector<double> a = a_in, b = b_in;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n = a.size(), m = b.size();
  if (n == m) {
    double s = 0;
    for (size_t i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / double(n));
  }
  // Merge the quantile breakpoints i/n and j/m with integer arithmetic on the common grid n*m.
  double s = 0;
  size_t i = 0, j = 0;
  long long pos = 0;
  while (i < n && j < m) {
    const long long ea = (long long)(i + 1) * (long long)m, eb = (long long)(j + 1) * (long long)n;
    const long long next = std::min(ea, eb);
    s += double(next - pos) * (a[i] - b[j]) * (a[i] - b[j]);
    pos = next;
    if (ea == next) ++i;
    if (eb == next) ++j;
  }
  return std::sqrt(s / (double(n) * double(m)));
}

double w2(const MatX& a, const MatX& b) {
  if (a.cols() != b.cols()) throw Error(ErrorKind::input, "measures.w2", "dimension mismatch");
  if (a.cols() == 1) {
    return w2(std::vector<double>(a.data(), a.data() + a.rows()), std::vector<double>(b.data(), b.data() + b.rows()));
  }
  if (a.rows() != b.rows())
    throw Error(ErrorKind::input, "measures.w2", "multivariate sample sets must have equal sizes");
  if (a.rows() > 512)
    throw Error(ErrorKind::capacity, "measures.w2", "exact assignment is limited to 512 points; subsample");
  if (a.rows() == 0) throw Error(ErrorKind::input, "measures.w2", "empty sample set");
  const int n = int(a.rows());
  MatX C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return std::sqrt(std::max(assignment_cost(C), 0.0) / n);
}

namespace {

Quantile quantile_of(const Density1D& d) {
  const double h = d.h();
  Quantile q;
  double c = 0;
  const double total = d.mass();
  q.t.push_back(0);
  q.q.push_back(d.x[0] - 0.5 * h);
  for (size_t k = 0; k < d.x.size(); ++k) {
    if (d.p[k] <= 0) continue;
    const double left = d.x[k] - 0.5 * h;
    if (std::abs(q.q.back() - left) > 1e-15 * (1 + std::abs(left))) {
      q.t.push_back(c);
      q.q.push_back(left);
    }
    c += d.p[k] * h / total;
    q.t.push_back(c);
    q.q.push_back(left + h);
  }
  q.t.back() = 1.0;
  return q;
}

/// Quantile value on the linear piece starting at breakpoint k, at level t.
double q_at(const Quantile& q, size_t k, double t) {
  const double t0 = q.t[k], t1 = q.t[k + 1];
  if (t1 <= t0) return q.q[k + 1];
  return q.q[k] + (q.q[k + 1] - q.q[k]) * (t - t0) / (t1 - t0);
}

}  // namespace

double w2(const Density1D& mu, const Density1D& nu) {
  const Quantile a = quantile_of(mu), b = quantile_of(nu);
  size_t i = 0, j = 0;
  double t = 0, s = 0;
  while (i + 1 < a.t.size() && j + 1 < b.t.size()) {
    const double next = std::min(a.t[i + 1], b.t[j + 1]);
    if (next > t) {
      const double tm = 0.5 * (t + next);
      const double d0 = q_at(a, i, t) - q_at(b, j, t);
      const double dm = q_at(a, i, tm) - q_at(b, j, tm);
      const double d1 = q_at(a, i, next) - q_at(b, j, next);
      s += (next - t) * (d0 * d0 + 4 * dm * dm + d1 * d1) / 6;
      t = next;
    }
    if (a.t[i + 1] <= t) ++i;
    if (b.t[j + 1] <= t) ++j;
  }
  return std::sqrt(std::max(s, 0.0));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0)) return -std::numeric_limits<double>::infinity();
  if (!(p < 1)) return std::numeric_limits<double>::infinity();
  // Rational initial guess followed by Halley steps on the erfc-based CDF.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                             1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                             6.680131188771972e+01, -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                             -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                             3.754408661907416e+00};
  const double pl = 0.02425;
  double x;
  if (p < pl) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - pl) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  for (int it = 0; it < 2; ++it) {
    const double e = (p < 0.5 ? normal_cdf(x) - p : (1 - p) - 0.5 * std::erfc(x / std::sqrt(2.0)));
    const double u = e * std::sqrt(2 * kPi) * std::exp(0.5 * x * x);
    x -= u / (1 + 0.5 * x * u);
  }
  return x;
}

double w2_to_gaussian(const std::vector<double>& samples, double mean, double s2) {
  if (samples.empty()) throw Error(ErrorKind::input, "measures.w2_to_gaussian", "empty sample set");
  if (!(s2 > 0)) throw Error(ErrorKind::input, "measures.w2_to_gaussian", "variance must be positive");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  const size_t n = x.size();
  const double s = std::sqrt(s2);
  double sum = 0, zprev = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    const double z = i + 1 == n ? std::numeric_limits<double>::infinity() : normal_quantile(double(i + 1) / n);
    // Integral of (x_i - Q(t))^2 over the i-th quantile cell, Q(t) = mean + s z(t).
    const double y = x[i] - mean;
    const double mass = 1.0 / n;
    const double first = phi(zprev) - phi(z);
    const double zp = std::isfinite(zprev) ? zprev * phi(zprev) : 0.0;
    const double zc = std::isfinite(z) ? z * phi(z) : 0.0;
    const double second = (normal_cdf(z) - normal_cdf(zprev)) - (zc - zp);
    sum += y * y * mass - 2 * y * s * first + s2 * second;
    zprev = z;
  }
  return std::sqrt(std::max(sum, 0.0));
}

namespace {

bool toy_family(const PotentialSpec<double>& spec) { return spec.kind != PotentialKind::curie_weiss; }

}  // namespace

FreeEnergy free_energy(const GaussianSpec& mu, const PotentialSpec<double>& spec) {
  if (mu.d() != spec.d) throw Error(ErrorKind::input, "measures.free_energy", "dimension mismatch");
  const double d = spec.d, s2 = mu.s2, k = spec.kappa;
  const double entropy = -0.5 * d * std::log(2 * kPi * std::exp(1.0) * s2);
  FreeEnergy f;
  if (toy_family(spec)) {
    f.value = evaluate_base(spec, mu.mean).value + 0.5 * k * (mu.mean.squaredNorm() + d * s2) + entropy;
  } else {
    const double m = mu.mean[0], m2 = m * m;
    const double ex2 = m2 + s2, ex4 = m2 * m2 + 6 * m2 * s2 + 3 * s2 * s2;
    const double ev = (0.25 * ex4 + 0.5 * (spec.kappa0 - 1) * ex2) / spec.sigma2;
    f.value = ev - 0.5 * k * m2 + entropy;
  }
  return f;
}

FreeEnergy free_energy(const Density1D& mu_in, const PotentialSpec<double>& spec) {
  if (spec.d != 1) throw Error(ErrorKind::input, "measures.free_energy", "tabulated densities need a 1-D spec");
  FreeEnergy f;
  f.normalization_applied = mu_in.normalized || std::abs(mu_in.mass() - 1) > 1e-8;
  Density1D mu = mu_in;
  const double mass = mu.mass();
  for (double& v : mu.p) v /= mass;
  const double h = mu.h();
  double ent = 0, e2 = 0, ev = 0;
  for (size_t i = 0; i < mu.x.size(); ++i) {
    const double p = mu.p[i], x = mu.x[i];
    ent += h * p * std::log(std::max(p, 1e-300));
    e2 += h * p * x * x;
    if (!toy_family(spec)) ev += h * p * base_value(spec, x);
  }
  const double m = mu.mean();
  if (toy_family(spec))
    f.value = base_value(spec, m) + 0.5 * spec.kappa * e2 + ent;
  else
    f.value = ev - 0.5 * spec.kappa * m * m + ent;
  return f;
}

GaussianSpec gaussian_local_equilibrium(const GaussianSpec& mu, const PotentialSpec<double>& spec) {
  if (!toy_family(spec))
    throw Error(ErrorKind::unsupported, "measures.gaussian_local_equilibrium", "toy model only");
  const VecX g = evaluate_base(spec, mu.mean).gradient;
  return GaussianSpec(-g / spec.kappa, 1.0 / spec.kappa);
}

PlScan pl_ratio_gaussian_scan(const PotentialSpec<double>& spec, const std::vector<VecX>& m_grid,
                              const std::vector<double>& s2_grid) {
  const char* where = "measures.pl_ratio_gaussian_scan";
  if (m_grid.empty() || s2_grid.empty()) throw Error(ErrorKind::input, where, "empty scan grid");
  if (!toy_family(spec)) throw Error(ErrorKind::unsupported, where, "toy model only");
  const int d = spec.d;
  VecX lo = m_grid[0], hi = m_grid[0];
  for (const auto& m : m_grid) {
    if (m.size() != d) throw Error(ErrorKind::input, where, "grid point dimension mismatch");
    lo = lo.cwiseMin(m);
    hi = hi.cwiseMax(m);
  }
  const VecX pad = (hi - lo).cwiseMax(1.0) * 0.25;
  const auto cps = find_critical_points(spec, Box<double>{lo - pad, hi + pad}, d <= 2 ? 21 : d == 3 ? 11 : 7);
  PlScan out;
  if (cps.points.empty()) throw Error(ErrorKind::dependency, where, "no critical point found");
  out.min_value = cps.points[0].value;
  for (const auto& c : cps.points) out.min_value = std::min(out.min_value, c.value);
  out.pl_flag = cps.points.size() == 1 && cps.points[0].is_minimizer();
  const double k = spec.kappa;
  for (const auto& m : m_grid) {
    const Evaluation<double> e = evaluate(spec, m);
    const double vbar = e.value - out.min_value;
    const double g2 = e.gradient.squaredNorm();
    for (double s2 : s2_grid) {
      const double ks = k * s2;
      const double fbar = vbar + 0.5 * d * (ks - 1 - std::log(ks));
      const double a = k - 1 / s2;
      const double I = d * s2 * a * a + g2;
      if (I < 1e-14) continue;
      const double ratio = 2 * fbar / I;
      if (ratio > out.sup) {
        out.sup = ratio;
        out.argmax_m = m;
        out.argmax_s2 = s2;
      }
    }
  }
  return out;
}

}  // namespace mfl
