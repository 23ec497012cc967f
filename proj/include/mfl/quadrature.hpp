#ifndef MFL_QUADRATURE_HPP
#define MFL_QUADRATURE_HPP

#include "mfl/core.hpp"

#include <cmath>
#include <vector>

namespace mfl {

template <class S>
struct GaussRule {
  std::vector<S> x;  // nodes on [-1, 1], ascending
  std::vector<S> w;
};

/// n-point Gauss–Legendre rule: Golub–Welsch eigenvalues, then Newton polish on P_n.
template <class S>
GaussRule<S> gauss_legendre(int n) {
  Mat<S> J = Mat<S>::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const S b = S(k) / std::sqrt(S(4) * S(k) * S(k) - S(1));
    J(k - 1, k) = J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(J, Eigen::EigenvaluesOnly);
  GaussRule<S> rule;
  rule.x.resize(n);
  rule.w.resize(n);
  for (int i = 0; i < n; ++i) {
    S z = es.eigenvalues()[i];
    S dp = 1;
    for (int it = 0; it < 3; ++it) {
      S p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const S p2 = ((S(2) * k - 1) * z * p1 - S(k - 1) * p0) / S(k);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1;
      dp = S(n) * (z * p1 - p0) / (z * z - S(1));
      z -= p1 / dp;
    }
    rule.x[i] = z;
    rule.w[i] = S(2) / ((S(1) - z * z) * dp * dp);
  }
  for (int i = 0; i < n / 2; ++i) {
    const S xs = (rule.x[n - 1 - i] - rule.x[i]) / S(2);
    const S ws = (rule.w[n - 1 - i] + rule.w[i]) / S(2);
    rule.x[i] = -xs;
    rule.x[n - 1 - i] = xs;
    rule.w[i] = rule.w[n - 1 - i] = ws;
  }
  if (n % 2 == 1) rule.x[n / 2] = S(0);
  return rule;
}

/// Shared 64-node rule used by every composite panel.
template <class S>
const GaussRule<S>& gauss_legendre64() {
  static const GaussRule<S> rule = gauss_legendre<S>(64);
  return rule;
}

}  // namespace mfl

#endif
