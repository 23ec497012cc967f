#include "mfl/critical_points.hpp"

#include "mfl/gibbs.hpp"

#include <cmath>

namespace mfl {

FixedPointReport curie_weiss_fixed_points(double sigma2, double kappa0) {
  const char* where = "critical_points.curie_weiss_fixed_points";
  if (!(sigma2 > 0) || !(kappa0 > 0)) throw Error(ErrorKind::input, where, "sigma2 and kappa0 must be positive");
  const Fn1 V = curie_weiss_V(sigma2, kappa0);
  const double kappa = kappa0 / sigma2;
  auto h = [&](double m) { return tilted_measure(V, kappa * m).mean - m; };

  FixedPointReport r;
  r.sigma2 = sigma2;
  r.kappa0 = kappa0;
  const int n = 801;
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = 4.0 * double(2 * i - (n - 1)) / double(n - 1);
    y[i] = h(x[i]);
  }
  for (int i = 0; i < n; ++i) {
    if (std::abs(y[i]) <= 1e-13) {
      r.fixed_points.push_back(x[i]);
      continue;
    }
    if (i + 1 < n && std::abs(y[i + 1]) > 1e-13 && (y[i] < 0) != (y[i + 1] < 0)) {
      double lo = x[i], hi = x[i + 1], flo = y[i];
      while (hi - lo > 1e-12 * (1 + std::abs(lo))) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double fm = h(mid);
        if ((fm < 0) == (flo < 0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      const double root = 0.5 * (lo + hi);
      if (std::abs(h(root)) > 1e-9)
        throw Error(ErrorKind::numeric, where, "bisection did not reach the residual tolerance");
      r.fixed_points.push_back(root);
    }
  }
  r.derivative_at_zero = kappa * tilted_measure(V, 0.0).variance;
  return r;
}

double critical_temperature(double kappa0, double tol) {
  const char* where = "critical_points.critical_temperature";
  if (!(kappa0 > 0)) throw Error(ErrorKind::input, where, "kappa0 must be positive");
  auto g = [&](double s2) { return kappa0 / s2 * tilted_measure(curie_weiss_V(s2, kappa0), 0.0).variance - 1.0; };
  double lo = 1e-3, hi = 10.0;
  double glo = g(lo), ghi = g(hi);
  if ((glo < 0) == (ghi < 0)) throw Error(ErrorKind::search, where, "f'(0) - 1 does not change sign on [1e-3, 10]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    const double gm = g(mid);
    if ((gm < 0) == (glo < 0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace mfl
