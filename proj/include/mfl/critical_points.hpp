/** @file critical_points.hpp
 *  Critical points of V_kappa: damped Newton from grid seeds, Hessian classification, the
 *  closed-form PCA critical set and the Curie–Weiss fixed-point problem.
 */
#ifndef MFL_CRITICAL_POINTS_HPP
#define MFL_CRITICAL_POINTS_HPP

#include "mfl/potentials.hpp"

#include <algorithm>
#include <vector>

namespace mfl {

template <class S>
struct CriticalPoint {
  Vec<S> location;
  S value = S(0);       ///< V_kappa(location)
  Vec<S> spectrum;      ///< ascending eigenvalues of the Hessian of V_kappa
  int index = 0;        ///< number of eigenvalues below -tol
  bool degenerate = false;

  bool is_minimizer() const { return index == 0 && !degenerate; }
  S min_eigenvalue() const { return spectrum[0]; }
  S max_eigenvalue() const { return spectrum[spectrum.size() - 1]; }
};

template <class S>
struct CriticalPointSearch {
  std::vector<CriticalPoint<S>> points;
  int seeds = 0;
  int non_converged = 0;  ///< seeds dropped because Newton stalled or left the box
};

template <class S>
struct Box {
  Vec<S> lo, hi;
};

template <class S>
Box<S> cube(int d, S half_width) {
  return {Vec<S>::Constant(d, -half_width), Vec<S>::Constant(d, half_width)};
}

/// Eigenvalue tolerance 1e-6 (1 + spectral radius).
template <class S>
S eigen_tolerance(const Vec<S>& spectrum) {
  return S(1e-6) * (S(1) + spectrum.cwiseAbs().maxCoeff());
}

template <class S>
CriticalPoint<S> classify(const PotentialSpec<S>& spec, const Vec<S>& m) {
  const Evaluation<S> e = evaluate(spec, m);
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(e.hessian, Eigen::EigenvaluesOnly);
  CriticalPoint<S> cp;
  cp.location = m;
  cp.value = e.value;
  cp.spectrum = es.eigenvalues();
  const S tol = eigen_tolerance(cp.spectrum);
  for (Eigen::Index i = 0; i < cp.spectrum.size(); ++i) {
    if (cp.spectrum[i] < -tol) ++cp.index;
    if (std::abs(cp.spectrum[i]) <= tol) cp.degenerate = true;
  }
  return cp;
}

namespace detail {

template <class S>
bool lex_less(const Vec<S>& a, const Vec<S>& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return a[i] < b[i];
  return false;
}

template <class S>
void canonicalize(std::vector<CriticalPoint<S>>& pts, S merge_radius) {
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return lex_less(a.location, b.location); });
  std::vector<CriticalPoint<S>> kept;
  for (auto& p : pts) {
    bool dup = false;
    for (const auto& k : kept)
      if ((k.location - p.location).norm() <= merge_radius) {
        dup = true;
        break;
      }
    if (!dup) kept.push_back(std::move(p));
  }
  pts = std::move(kept);
}

/// Damped Newton on grad V_kappa = 0 with an eigen pseudo-inverse and halving on |grad|^2.
/// Iterates past the residual tolerance until the step stalls, so degenerate points are pinned
/// well below the merge radius.
template <class S>
bool newton(const PotentialSpec<S>& spec, Vec<S>& m) {
  const int d = spec.d;
  Vec<S> g(d), gt(d);
  gradient_raw(spec, m.data(), g.data());
  S g2 = g.squaredNorm();
  for (int it = 0; it < 200; ++it) {
    const Mat<S> H = hessian(spec, m);
    Eigen::SelfAdjointEigenSolver<Mat<S>> es(H);
    const Vec<S>& lam = es.eigenvalues();
    const S cut = S(1e-14) * (S(1) + lam.cwiseAbs().maxCoeff());
    Vec<S> c = es.eigenvectors().transpose() * g;
    for (int i = 0; i < d; ++i) c[i] = std::abs(lam[i]) > cut ? c[i] / lam[i] : S(0);
    const Vec<S> p = -(es.eigenvectors() * c);
    S t = S(1);
    bool moved = false;
    for (int k = 0; k < 40; ++k) {
      const Vec<S> trial = m + t * p;
      gradient_raw(spec, trial.data(), gt.data());
      const S gt2 = gt.squaredNorm();
      if (gt2 < g2) {
        m = trial;
        g = gt;
        g2 = gt2;
        moved = true;
        break;
      }
      t /= S(2);
    }
    if (!moved || t * p.norm() <= S(1e-15) * (S(1) + m.norm())) break;
  }
  return std::sqrt(g2) <= S(1e-11) * (S(1) + m.norm());
}

}  // namespace detail

/// Grid-seeded search on the box. The search is limited to d <= 4.
template <class S>
CriticalPointSearch<S> find_critical_points(const PotentialSpec<S>& spec, const Box<S>& box,
                                            int grid_per_axis) {
  const int d = spec.d;
  if (d > 4)
    throw Error(ErrorKind::unsupported, "critical_points.find_critical_points",
                "grid seeding is limited to dimension 4");
  if (box.lo.size() != d || box.hi.size() != d)
    throw Error(ErrorKind::input, "critical_points.find_critical_points", "box dimension mismatch");
  if (grid_per_axis < 2)
    throw Error(ErrorKind::input, "critical_points.find_critical_points", "need at least 2 seeds per axis");
  CriticalPointSearch<S> out;
  const Vec<S> span = box.hi - box.lo;
  std::vector<int> idx(d, 0);
  while (true) {
    Vec<S> m(d);
    for (int i = 0; i < d; ++i) m[i] = box.lo[i] + span[i] * S(idx[i]) / S(grid_per_axis - 1);
    ++out.seeds;
    const bool ok = detail::newton(spec, m);
    bool inside = true;
    for (int i = 0; i < d; ++i)
      inside = inside && m[i] >= box.lo[i] - S(0.1) * span[i] && m[i] <= box.hi[i] + S(0.1) * span[i];
    if (ok && inside)
      out.points.push_back(classify(spec, m));
    else
      ++out.non_converged;
    int k = 0;
    while (k < d && ++idx[k] == grid_per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  detail::canonicalize(out.points, S(1e-6));
  return out;
}

/// Closed-form critical set of the PCA objective: 0 and +-sqrt(1 - kappa/lambda) (v, v) for each
/// unit eigenpair with lambda > kappa, where V_kappa - c = -(lambda - kappa)^2 / (2 lambda).
template <class S>
std::vector<CriticalPoint<S>> pca_critical_set(const Mat<S>& M, S kappa, S c = S(0)) {
  const PotentialSpec<S> spec = make_pca(M, kappa, c);
  if (M.rows() < 1 || M.rows() != M.cols())
    throw Error(ErrorKind::input, "critical_points.pca_critical_set", "M must be a non-empty square matrix");
  const int n = int(M.rows());
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(M);
  std::vector<CriticalPoint<S>> pts;
  pts.push_back(classify(spec, Vec<S>(Vec<S>::Zero(2 * n))));
  pts.back().value = c;
  for (int i = 0; i < n; ++i) {
    const S lam = es.eigenvalues()[i];
    if (!(lam > kappa)) continue;
    const S a = std::sqrt(S(1) - kappa / lam);
    const Vec<S> v = es.eigenvectors().col(i);
    for (int sign : {-1, 1}) {
      Vec<S> m(2 * n);
      m.head(n) = S(sign) * a * v;
      m.tail(n) = S(sign) * a * v;
      CriticalPoint<S> cp = classify(spec, m);
      cp.value = c - (lam - kappa) * (lam - kappa) / (S(2) * lam);
      pts.push_back(std::move(cp));
    }
  }
  std::sort(pts.begin(), pts.end(),
            [](const auto& x, const auto& y) { return detail::lex_less(x.location, y.location); });
  return pts;
}

struct FixedPointReport {
  double sigma2 = 0;
  double kappa0 = 0;
  std::vector<double> fixed_points;  ///< ascending roots of f(m) = m
  double derivative_at_zero = 0;     ///< f'(0) = kappa Var(gamma_0)
};

/// Roots of f(m) - m by sign changes on a symmetric grid of [-4, 4] refined by bisection.
FixedPointReport curie_weiss_fixed_points(double sigma2, double kappa0);

/// sigma^2 at which f'(0) = 1, by bisection on [1e-3, 10] to `tol` in sigma^2.
double critical_temperature(double kappa0, double tol = 1e-6);

}  // namespace mfl

#endif
