/** @file gibbs.hpp
 *  One-dimensional quadrature for Gibbs-type densities exp(-E(x)): tilted measures, the
 *  effective potential omega of the Curie–Weiss decomposition, moments of nu_N and the
 *  stationary entropy / barycenter-variance identities built on them.
 */
#ifndef MFL_GIBBS_HPP
#define MFL_GIBBS_HPP

#include "mfl/core.hpp"

#include <functional>
#include <vector>

namespace mfl {

using Fn1 = std::function<double(double)>;

struct QuadratureOptions {
  double tail = 40.0;       ///< truncate where E - min E reaches this value
  double rel_tol = 1e-13;   ///< panel-doubling stopping rule
  double tail_mass = 1e-12; ///< maximum relative mass allowed beyond the truncation
  int scan_points = 601;
  double hint = 0.0;        ///< centre of the initial bracket
  double half_width = 1.0;  ///< half-width of the initial bracket
};

/// Nodes and normalized probability weights for the density proportional to exp(-E).
struct GibbsGrid {
  std::vector<double> x;
  std::vector<double> w;  ///< sums to one
  double log_norm = 0;    ///< log of the integral of exp(-E)
  double x_min = 0;       ///< global minimizer of E located during the scan
  double e_min = 0;
  double a = 0, b = 0;    ///< truncation interval
  std::vector<double> splits;
  int panels = 0;

  double expect(const Fn1& f) const;
  double mean() const;
  double central_moment(int k, double center) const;
};

GibbsGrid gibbs_grid(const Fn1& E, const QuadratureOptions& opts = {});

struct TiltedMeasure {
  double xi = 0;
  GibbsGrid grid;
  double logZ = 0;
  double mean = 0;
  double variance = 0;

  double central_moment(int k) const { return grid.central_moment(k, mean); }
  /// Cumulants of order 3 and 4.
  double cumulant3() const { return central_moment(3); }
  double cumulant4() const { return central_moment(4) - 3 * variance * variance; }
};

/// mu_xi proportional to exp(-V(x) + xi x).
TiltedMeasure tilted_measure(const Fn1& V, double xi, const QuadratureOptions& opts = {});

/// omega(xi) = xi^2 / (2 kappa) - log Z(xi).
double omega(const Fn1& V, double kappa, double xi);

struct OmegaDerivatives {
  double value, d1, d2, d3, d4;
};

/// Central 5-point stencils of omega around xi with step h.
OmegaDerivatives omega_derivatives(const Fn1& V, double kappa, double xi, double h);

struct EffectivePotential {
  double kappa = 1;
  std::vector<double> xi, omega, d1, d2;
};

/// Tabulates omega on n equispaced points of [lo, hi] with stencil derivatives.
EffectivePotential tabulate_omega(const Fn1& V, double kappa, double lo, double hi, int n);

struct NuMoments {
  double minimizer = 0;
  std::vector<int> orders;
  std::vector<double> moments;  ///< centred at the minimizer
  double log_norm = 0;
};

/// Moments of nu_N proportional to exp(-N u).
NuMoments nu_moments(const Fn1& u, double N, const std::vector<int>& orders);

/// Single-site potential of the continuous Curie–Weiss model.
Fn1 curie_weiss_V(double sigma2, double kappa0);

/// f(m): mean of gamma_m proportional to exp(-V + kappa m x).
double curie_weiss_f(double sigma2, double kappa0, double m);
/// f'(m) = kappa Var(gamma_m).
double curie_weiss_fprime(double sigma2, double kappa0, double m);

/// H(rho^{(x)N} | mu_inf^N) for rho proportional to exp(-V), evaluated through the nu_N integral.
double stationary_entropy(const Fn1& V, double kappa, double N);
double stationary_entropy_curie_weiss(double N, double sigma2, double kappa0);

/// Integral of xbar^2 against the N-particle Gibbs measure, via its mixture over nu_N.
double gibbs_barycenter_variance(const Fn1& V, double kappa, double N);
double gibbs_barycenter_variance(double N, double sigma2, double kappa0);

}  // namespace mfl

#endif
