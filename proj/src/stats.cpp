#include "mfl/stats.hpp"

#include "mfl/core.hpp"

#include <algorithm>
#include <cmath>

namespace mfl {

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw Error(ErrorKind::input, "stats.linear_fit", "need at least two paired points");
  const int n = int(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::input, "stats.linear_fit", "abscissae are all equal");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  if (n > 2) {
    f.slope_se = std::sqrt(ss / (n - 2) / sxx);
    const double t = student_t975(n - 2);
    f.ci_lo = f.slope - t * f.slope_se;
    f.ci_hi = f.slope + t * f.slope_se;
  } else {
    f.ci_lo = f.ci_hi = f.slope;
  }
  return f;
}

LinearFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0)) throw Error(ErrorKind::input, "stats.loglog_fit", "abscissae must be positive");
    lx[i] = std::log(x[i]);
  }
  for (size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0)) throw Error(ErrorKind::input, "stats.loglog_fit", "ordinates must be positive");
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

double student_t975(int dof) {
  const double z = 1.959963984540054;
  if (dof <= 0) return HUGE_VAL;
  static const double table[] = {12.706, 4.303, 3.182, 2.776, 2.571};
  if (dof <= 5) return table[dof - 1];
  const double v = dof, z2 = z * z;
  return z + (z2 * z + z) / (4 * v) + (5 * z2 * z2 * z + 16 * z2 * z + 3 * z) / (96 * v * v) +
         (3 * z2 * z2 * z2 * z + 19 * z2 * z2 * z + 17 * z2 * z - 15 * z) / (384 * v * v * v);
}

MeanSE mean_se(const std::vector<double>& v) {
  MeanSE r;
  r.n = int(v.size());
  if (v.empty()) return r;
  double s = 0;
  for (double x : v) s += x;
  r.mean = s / r.n;
  if (r.n > 1) {
    double ss = 0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.se = std::sqrt(ss / (r.n - 1) / r.n);
  }
  return r;
}

MeanSE batch_means(const std::vector<double>& v, int batches) {
  if (batches < 2 || int(v.size()) < batches)
    throw Error(ErrorKind::input, "stats.batch_means", "series shorter than the batch count");
  const size_t len = v.size() / batches;
  std::vector<double> b(batches);
  for (int k = 0; k < batches; ++k) {
    double s = 0;
    for (size_t i = 0; i < len; ++i) s += v[k * len + i];
    b[k] = s / len;
  }
  MeanSE r = mean_se(b);
  r.n = int(len * batches);
  return r;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0) return 1.0;
  if (lambda < 0.3) {
    // Small-argument form via the theta-function identity; Q is indistinguishable from 1 here.
    const double c = std::sqrt(2 * 3.14159265358979323846) / lambda;
    double s = 0;
    for (int k = 1; k <= 50; ++k) {
      const double t = (2 * k - 1) * 3.14159265358979323846 / (2 * lambda);
      s += std::exp(-0.5 * t * t);
    }
    return std::clamp(1 - c * s, 0.0, 1.0);
  }
  double s = 0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KsResult ks_exponential(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(ErrorKind::input, "stats.ks_exponential", "no samples");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  const int n = int(x.size());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    const double F = x[i] > 0 ? -std::expm1(-x[i]) : 0.0;
    d = std::max({d, double(i + 1) / n - F, F - double(i) / n});
  }
  KsResult r;
  r.n = n;
  r.statistic = d;
  const double sn = std::sqrt(double(n));
  r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

KsResult ks_two_sample(const std::vector<double>& a_in, const std::vector<double>& b_in) {
  if (a_in.empty() || b_in.empty()) throw Error(ErrorKind::input, "stats.ks_two_sample", "no samples");
  std::vector<double> a = a_in, b = b_in;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const size_t n = a.size(), m = b.size();
  size_t i = 0, j = 0;
  double d = 0;
  while (i < n && j < m) {
    const double t = std::min(a[i], b[j]);
    while (i < n && a[i] <= t) ++i;
    while (j < m && b[j] <= t) ++j;
    d = std::max(d, std::abs(double(i) / n - double(j) / m));
  }
  KsResult r;
  r.n = int(n);
  r.statistic = d;
  const double ne = std::sqrt(double(n) * double(m) / double(n + m));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

}  // namespace mfl
