/** @file potentials.hpp
 *  Confined potentials V_kappa(m) = V(m) + kappa |m|^2 / 2 with analytic derivatives,
 *  and the localized convexification around a non-degenerate local minimum.
 */
#ifndef MFL_POTENTIALS_HPP
#define MFL_POTENTIALS_HPP

#include "mfl/core.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace mfl {

enum class PotentialKind { quadratic, quartic1d, pca, curie_weiss };

inline const char* to_string(PotentialKind k) {
  switch (k) {
    case PotentialKind::quadratic: return "quadratic";
    case PotentialKind::quartic1d: return "quartic1d";
    case PotentialKind::pca: return "pca";
    case PotentialKind::curie_weiss: return "curie_weiss";
  }
  return "?";
}

template <class S>
struct PotentialSpec {
  PotentialKind kind = PotentialKind::quadratic;
  S kappa = S(1);
  int d = 1;
  Mat<S> M;         // pca: data covariance, n x n
  S c = S(0);       // pca: additive constant
  S sigma2 = S(1);  // curie_weiss: temperature
  S kappa0 = S(1);  // curie_weiss: interaction

  int n() const { return kind == PotentialKind::pca ? int(M.rows()) : 0; }
};

template <class S>
struct Evaluation {
  S value;
  Vec<S> gradient;
  Mat<S> hessian;
};

template <class S>
PotentialSpec<S> make_quadratic(S kappa, int d) {
  PotentialSpec<S> s;
  s.kind = PotentialKind::quadratic;
  s.kappa = kappa;
  s.d = d;
  return s;
}

/// V(x) = x^4/4 - (1+kappa) x^2/2, so that V_kappa(x) = x^4/4 - x^2/2 for every kappa.
template <class S>
PotentialSpec<S> make_quartic1d(S kappa) {
  PotentialSpec<S> s;
  s.kind = PotentialKind::quartic1d;
  s.kappa = kappa;
  s.d = 1;
  return s;
}

/// Linear auto-encoder objective V(m0, m1) = c - m1' M m0 + |m1|^2 m0' M m0 / 2.
template <class S>
PotentialSpec<S> make_pca(const Mat<S>& M, S kappa, S c = S(0)) {
  PotentialSpec<S> s;
  s.kind = PotentialKind::pca;
  s.kappa = kappa;
  s.M = M;
  s.c = c;
  s.d = 2 * int(M.rows());
  return s;
}

/// V(x) = (x^4/4 - x^2/2 + kappa0 x^2/2) / sigma2 with kappa = kappa0 / sigma2.
template <class S>
PotentialSpec<S> make_curie_weiss(S sigma2, S kappa0) {
  PotentialSpec<S> s;
  s.kind = PotentialKind::curie_weiss;
  s.sigma2 = sigma2;
  s.kappa0 = kappa0;
  s.kappa = kappa0 / sigma2;
  s.d = 1;
  return s;
}

namespace detail {

template <class S>
void check_dim(const PotentialSpec<S>& s, Eigen::Index size, const char* op) {
  if (size != s.d)
    throw Error(ErrorKind::input, std::string("potentials.") + op,
                "point has dimension " + std::to_string(size) + ", spec expects " +
                    std::to_string(s.d));
}

}  // namespace detail

/// Gradient of the unconfined V into `out`, no allocation; used on the hot path of the simulators.
template <class S>
void gradient_base_raw(const PotentialSpec<S>& s, const S* m, S* out) {
  switch (s.kind) {
    case PotentialKind::quadratic:
      for (int i = 0; i < s.d; ++i) out[i] = S(0);
      return;
    case PotentialKind::quartic1d: {
      const S x = m[0];
      out[0] = x * x * x - (S(1) + s.kappa) * x;
      return;
    }
    case PotentialKind::curie_weiss: {
      const S x = m[0];
      out[0] = (x * x * x - x + s.kappa0 * x) / s.sigma2;
      return;
    }
    case PotentialKind::pca: {
      const int n = s.n();
      const S* m0 = m;
      const S* m1 = m + n;
      S q = 0, r = 0;
      for (int i = 0; i < n; ++i) {
        S a = 0;
        for (int j = 0; j < n; ++j) a += s.M(i, j) * m0[j];
        q += m0[i] * a;
        r += m1[i] * m1[i];
      }
      for (int i = 0; i < n; ++i) {
        S a0 = 0, a1 = 0;
        for (int j = 0; j < n; ++j) {
          a0 += s.M(i, j) * m0[j];
          a1 += s.M(i, j) * m1[j];
        }
        out[i] = -a1 + r * a0;
        out[n + i] = -a0 + q * m1[i];
      }
      return;
    }
  }
}

/// Gradient of V_kappa into `out`, no allocation.
template <class S>
void gradient_raw(const PotentialSpec<S>& s, const S* m, S* out) {
  gradient_base_raw(s, m, out);
  for (int i = 0; i < s.d; ++i) out[i] += s.kappa * m[i];
}

/// Value, gradient and Hessian of the unconfined V.
template <class S>
Evaluation<S> evaluate_base(const PotentialSpec<S>& s, const Vec<S>& m) {
  detail::check_dim(s, m.size(), "evaluate");
  Evaluation<S> e;
  e.gradient.setZero(s.d);
  e.hessian.setZero(s.d, s.d);
  switch (s.kind) {
    case PotentialKind::quadratic:
      e.value = S(0);
      break;
    case PotentialKind::quartic1d: {
      const S x = m[0];
      const S a = S(1) + s.kappa;
      e.value = x * x * x * x / S(4) - a * x * x / S(2);
      e.gradient[0] = x * x * x - a * x;
      e.hessian(0, 0) = S(3) * x * x - a;
      break;
    }
    case PotentialKind::curie_weiss: {
      const S x = m[0];
      const S b = s.kappa0 - S(1);
      e.value = (x * x * x * x / S(4) + b * x * x / S(2)) / s.sigma2;
      e.gradient[0] = (x * x * x + b * x) / s.sigma2;
      e.hessian(0, 0) = (S(3) * x * x + b) / s.sigma2;
      break;
    }
    case PotentialKind::pca: {
      const int n = s.n();
      const Vec<S> m0 = m.head(n), m1 = m.tail(n);
      const Vec<S> Mm0 = s.M * m0, Mm1 = s.M * m1;
      const S q = m0.dot(Mm0), r = m1.squaredNorm();
      e.value = s.c - m1.dot(Mm0) + r * q / S(2);
      e.gradient.head(n) = -Mm1 + r * Mm0;
      e.gradient.tail(n) = -Mm0 + q * m1;
      e.hessian.topLeftCorner(n, n) = r * s.M;
      e.hessian.topRightCorner(n, n) = -s.M + S(2) * Mm0 * m1.transpose();
      e.hessian.bottomLeftCorner(n, n) = -s.M + S(2) * m1 * Mm0.transpose();
      e.hessian.bottomRightCorner(n, n) = q * Mat<S>::Identity(n, n);
      break;
    }
  }
  return e;
}

/// Value, gradient and Hessian of V_kappa.
template <class S>
Evaluation<S> evaluate(const PotentialSpec<S>& s, const Vec<S>& m) {
  Evaluation<S> e = evaluate_base(s, m);
  e.value += s.kappa * m.squaredNorm() / S(2);
  e.gradient += s.kappa * m;
  e.hessian.diagonal().array() += s.kappa;
  return e;
}

template <class S>
S value(const PotentialSpec<S>& s, const Vec<S>& m) {
  return evaluate(s, m).value;
}

template <class S>
Vec<S> gradient(const PotentialSpec<S>& s, const Vec<S>& m) {
  detail::check_dim(s, m.size(), "gradient");
  Vec<S> g(s.d);
  gradient_raw(s, m.data(), g.data());
  return g;
}

template <class S>
Mat<S> hessian(const PotentialSpec<S>& s, const Vec<S>& m) {
  return evaluate(s, m).hessian;
}

/// Unconfined V at a scalar point of a one-dimensional spec.
template <class S>
S base_value(const PotentialSpec<S>& s, S x) {
  return evaluate_base(s, Vec<S>(Vec<S>::Constant(1, x))).value;
}

/// Checks the spec invariants; throws an input error naming the violated one.
template <class S>
void validate(const PotentialSpec<S>& s) {
  const std::string where = "potentials.validate";
  if (!(s.kappa > S(0))) throw Error(ErrorKind::input, where, "kappa must be positive");
  switch (s.kind) {
    case PotentialKind::quadratic:
      if (s.d < 1) throw Error(ErrorKind::input, where, "dimension must be at least 1");
      break;
    case PotentialKind::quartic1d:
      if (s.d != 1) throw Error(ErrorKind::input, where, "quartic1d is one-dimensional");
      break;
    case PotentialKind::curie_weiss:
      if (s.d != 1) throw Error(ErrorKind::input, where, "curie_weiss is one-dimensional");
      if (!(s.sigma2 > S(0)) || !(s.kappa0 > S(0)))
        throw Error(ErrorKind::input, where, "sigma2 and kappa0 must be positive");
      break;
    case PotentialKind::pca: {
      if (s.M.rows() < 1 || s.M.rows() != s.M.cols())
        throw Error(ErrorKind::input, where, "M must be a non-empty square matrix");
      if (s.d != 2 * s.M.rows()) throw Error(ErrorKind::input, where, "pca dimension must be 2n");
      const S scale = S(1) + s.M.cwiseAbs().maxCoeff();
      if ((s.M - s.M.transpose()).cwiseAbs().maxCoeff() > S(1e-12) * scale)
        throw Error(ErrorKind::input, where, "M must be symmetric");
      Eigen::SelfAdjointEigenSolver<Mat<S>> es(s.M, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -S(1e-12) * scale)
        throw Error(ErrorKind::input, where, "M must be non-negative");
      break;
    }
  }
  // Coercivity probe: 2d axis rays and 8 seeded random rays.
  std::vector<Vec<S>> rays;
  for (int i = 0; i < s.d; ++i)
    for (int sign : {-1, 1}) rays.push_back(Vec<S>::Unit(s.d, i) * S(sign));
  std::mt19937_64 gen(0x5eedULL);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 8; ++k) {
    Vec<S> u(s.d);
    for (int i = 0; i < s.d; ++i) u[i] = S(nd(gen));
    rays.push_back(u / u.norm());
  }
  const S v0 = value(s, Vec<S>(Vec<S>::Zero(s.d)));
  for (const auto& u : rays) {
    S prev = v0;
    for (S t : {S(10), S(100), S(1000)}) {
      const S v = value(s, Vec<S>(t * u));
      if (!(v > prev)) throw Error(ErrorKind::input, where, "V_kappa is not coercive along a probe ray");
      prev = v;
    }
  }
}

// ---------------------------------------------------------------------------
// Localized convexification

template <class S>
struct LocalizedSpec {
  PotentialSpec<S> base;
  Vec<S> center;
  S delta = S(0);
  S L = S(0);
  S lambda = S(0);        ///< achieved strong-convexity constant
  S center_value = S(0);  ///< V_kappa(center)
  bool identity = false;  ///< base already strongly convex, no modification applied
};

namespace detail {

/// C^2 smoothstep cutoff: 1 for r <= delta, 0 for r >= 2 delta. Returns chi, dchi/dr, d2chi/dr2.
template <class S>
void cutoff(S r, S delta, S& chi, S& d1, S& d2) {
  S s = (r - delta) / delta;
  if (s <= S(0)) {
    chi = S(1);
    d1 = d2 = S(0);
    return;
  }
  if (s >= S(1)) {
    chi = d1 = d2 = S(0);
    return;
  }
  const S s2 = s * s, s3 = s2 * s;
  chi = S(1) - (S(10) * s3 - S(15) * s2 * s2 + S(6) * s3 * s2);
  d1 = -(S(30) * s2 - S(60) * s3 + S(30) * s2 * s2) / delta;
  d2 = -(S(60) * s - S(180) * s2 + S(120) * s3) / (delta * delta);
}

}  // namespace detail

/// Value, gradient and Hessian of the modified confined potential. Inside B(center, delta) this is
/// exactly the base evaluation.
template <class S>
Evaluation<S> evaluate(const LocalizedSpec<S>& loc, const Vec<S>& m) {
  Evaluation<S> e = evaluate(loc.base, m);
  if (loc.identity) return e;
  const Vec<S> y = m - loc.center;
  const S r = y.norm();
  if (r <= loc.delta) return e;
  const int d = loc.base.d;
  S chi, c1, c2;
  detail::cutoff(r, loc.delta, chi, c1, c2);
  const Vec<S> u = y / r;
  const S w = e.value - loc.center_value;
  const Vec<S> gchi = c1 * u;
  const Mat<S> hchi = c2 * u * u.transpose() + (c1 / r) * (Mat<S>::Identity(d, d) - u * u.transpose());
  const S q = r * r - loc.delta * loc.delta;
  Evaluation<S> out;
  out.value = chi * w + loc.center_value + loc.L * q * q;
  out.gradient = chi * e.gradient + w * gchi + S(4) * loc.L * q * y;
  out.hessian = chi * e.hessian + gchi * e.gradient.transpose() + e.gradient * gchi.transpose() +
                w * hchi +
                S(4) * loc.L * (q * Mat<S>::Identity(d, d) + S(2) * y * y.transpose());
  return out;
}

/// Gradient of the modified unconfined potential (modified V_kappa minus kappa|m|^2/2). Inside the
/// ball it calls the same routine as the base, so coupled simulations stay bitwise identical.
template <class S>
void gradient_base_raw(const LocalizedSpec<S>& loc, const S* m, S* out) {
  const int d = loc.base.d;
  if (!loc.identity) {
    S r2 = 0;
    for (int i = 0; i < d; ++i) r2 += (m[i] - loc.center[i]) * (m[i] - loc.center[i]);
    if (std::sqrt(r2) > loc.delta) {
      const Vec<S> x = Eigen::Map<const Vec<S>>(m, d);
      const Vec<S> g = evaluate(loc, x).gradient;
      for (int i = 0; i < d; ++i) out[i] = g[i] - loc.base.kappa * m[i];
      return;
    }
  }
  gradient_base_raw(loc.base, m, out);
}

namespace detail {

template <class S>
std::vector<Vec<S>> ball_grid(const Vec<S>& c, S radius) {
  const int d = int(c.size());
  const int per_axis = d == 1 ? 801 : d == 2 ? 81 : d == 3 ? 25 : 13;
  std::vector<Vec<S>> pts;
  std::vector<int> idx(d, 0);
  const S h = S(2) * radius / S(per_axis - 1);
  while (true) {
    Vec<S> p(d);
    for (int i = 0; i < d; ++i) p[i] = c[i] - radius + h * S(idx[i]);
    if ((p - c).norm() <= radius) pts.push_back(p);
    int k = 0;
    while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == d) break;
  }
  return pts;
}

template <class S>
S min_eigenvalue(const Mat<S>& H) {
  Eigen::SelfAdjointEigenSolver<Mat<S>> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace detail

/// Builds chi (V_kappa - c*) + c* + L (|m - m*|^2 - delta^2)_+^2 and doubles L up to `L_cap` until
/// the minimum Hessian eigenvalue over a scan of B(m*, 2 delta) is positive.
template <class S>
LocalizedSpec<S> localized_convexification(const PotentialSpec<S>& base, const Vec<S>& center,
                                           S delta, S L, S L_cap = S(1e8)) {
  const std::string where = "potentials.localized_convexification";
  detail::check_dim(base, center.size(), "localized_convexification");
  if (!(delta > S(0))) throw Error(ErrorKind::construction, where, "radius must be positive");
  LocalizedSpec<S> loc;
  loc.base = base;
  loc.center = center;
  loc.delta = delta;
  loc.L = L;
  loc.center_value = value(base, center);
  if (base.kind == PotentialKind::quadratic) {
    loc.identity = true;
    loc.lambda = base.kappa;
    return loc;
  }
  if (!(detail::min_eigenvalue(hessian(base, center)) > S(0)))
    throw Error(ErrorKind::construction, where, "Hessian of V_kappa at the center is not positive definite");
  const auto pts = detail::ball_grid(center, S(2) * delta);
  for (const auto& p : pts)
    if (!(detail::min_eigenvalue(hessian(base, p)) > S(0)))
      throw Error(ErrorKind::construction, where,
                  "V_kappa is not convex on B(center, 2 delta); reduce delta");
  if (!(loc.L > S(0))) loc.L = S(1);
  while (true) {
    S lam = S(12) * loc.L * delta * delta;
    for (const auto& p : pts) lam = std::min(lam, detail::min_eigenvalue(evaluate(loc, p).hessian));
    if (lam > S(0)) {
      loc.lambda = lam;
      return loc;
    }
    loc.L *= S(2);
    if (loc.L > L_cap)
      throw Error(ErrorKind::construction, where, "no stiffness up to the cap yields strong convexity");
  }
}

}  // namespace mfl

#endif
