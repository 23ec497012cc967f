/** @file inequalities.hpp
 *  Łojasiewicz and coercivity profiles of confined potentials, grid PL constants, closed-form
 *  degenerate log-Sobolev constant bundles, Poincaré lower bounds for nu_N and the Curie–Weiss
 *  critical-temperature suite.
 */
#ifndef MFL_INEQUALITIES_HPP
#define MFL_INEQUALITIES_HPP

#include "mfl/critical_points.hpp"
#include "mfl/gibbs.hpp"
#include "mfl/stats.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mfl {

/// A smooth function on R^d together with its critical points; the input of the profile search.
struct ScalarField {
  int d = 1;
  double kappa = 1;  ///< confinement used by Phi_1 and Theta-tilde
  std::function<double(const VecX&)> value;
  std::function<VecX(const VecX&)> gradient;
  std::function<MatX(const VecX&)> hessian;  ///< optional; adds eigen-directions to the search
  std::vector<CriticalPoint<double>> critical;
};

ScalarField field_of(const PotentialSpec<double>& spec, const std::vector<CriticalPoint<double>>& critical);

struct InequalityProfile {
  double kappa = 1;
  std::vector<double> r;
  std::vector<double> theta1;       ///< max of Vbar subject to |grad|^2 <= r
  std::vector<double> phi1;         ///< min of Vbar subject to kappa dist(m, argmin)^2 >= 2r
  std::vector<double> theta_tilde;  ///< sup_{s <= r} [Theta_1(s) + (r - s) / (2 kappa)]
  double theta_at_zero = 0;         ///< largest Vbar over critical points
  double min_value = 0;             ///< global minimum of V
  std::vector<VecX> minimizers;
  LinearFit theta_fit, phi_fit;     ///< log-log fits over the smallest decade of r
  double theta_exponent = 0, phi_exponent = 0;
  bool tight = false;               ///< every critical point is a global minimizer
  bool pl_holds = false;            ///< tight and every global minimizer non-degenerate
};

/// Log-spaced grid with `per_decade` intervals per decade, endpoints included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

InequalityProfile lojasiewicz_profile(const ScalarField& f, const Box<double>& box, int grid_per_axis,
                                      const std::vector<double>& r_grid);
/// Critical points are located with find_critical_points on the same box. An empty r grid selects
/// log_grid(1e-9, 1, 10).
InequalityProfile lojasiewicz_profile(const PotentialSpec<double>& spec, const Box<double>& box,
                                      int grid_per_axis, const std::vector<double>& r_grid = {});

struct PlConstant {
  double value = 0;          ///< sup of 2 Vbar / |grad|^2 on the grid
  double refined_value = 0;  ///< same on the grid with halved spacing
  bool diverged = false;     ///< sup grows under refinement next to a non-minimizing critical point
  VecX argmax;
};

PlConstant pl_constant(const PotentialSpec<double>& spec, const Box<double>& box, int grid_per_axis);

struct LsiConstantBundle {
  double c1 = 0, c2 = 0, beta = 0, kappa = 0, N = 0, R = 0;
  int d = 0;
  double upper_tight = 0;  ///< 2e (N c2)^{-2/beta}
  double rho_R = 0;        ///< min(c1, c2 (R/2)^{beta-2}) / 3
  double A = 0, B = 0;     ///< defective LSI constants
  bool degenerate_available = false;  ///< beta > 2 and N >= 3(1+4d)/(8 c2)
  std::string degenerate_note;
  double theta_constant = 0;  ///< C in Theta(r) = C max(r, r^{beta/(2beta-2)})
  double c3 = 0;
  double theta_exponent = 0;  ///< beta / (2 beta - 2)
  double xi_constant = 0;     ///< C' in xi(r) = C' max(r, r^{2/beta})
  double xi_exponent = 0;     ///< 2 / beta

  double theta(double r) const;
  double theta_tilde(double r) const;
  double xi(double r) const;
};

LsiConstantBundle lsi_constant_bundle(double c1, double c2, double beta, int d, double kappa, double N, double R);

struct PoincareBound {
  std::vector<double> N;
  std::vector<double> bound;  ///< Var_{nu_N}(x)
  LinearFit fit;              ///< log bound against log N
};

PoincareBound poincare_lower_bound(const Fn1& u, const std::vector<double>& N_list);

/// g(u) = int_0^u Theta^{-1}(s)^{-1/2} ds under piecewise power-law interpolation of Theta^{-1},
/// and Phi with Phi(kappa g^2 / 2) = u.
struct GPhi {
  double kappa = 1;
  std::vector<double> u, theta_inv, g;
  std::vector<double> phi_x, phi;
  double left_exponent = 0;  ///< p in Theta^{-1}(u) ~ c u^p near 0
  double left_coeff = 0;

  double g_at(double u) const;
  double g_inverse(double s) const;
  double phi_at(double x) const;
};

GPhi g_and_phi_from_theta(const std::vector<double>& r, const std::vector<double>& theta, double kappa);

struct CurieWeissSuite {
  double kappa0 = 1, sigma2_c = 0, kappa = 0;
  std::vector<double> N;
  std::vector<double> barycenter_moment;  ///< int xbar^2 dmu_inf^N
  std::vector<double> lsi_lower;          ///< N times the moment
  LinearFit lsi_fit;                      ///< log lsi_lower against log N
  std::vector<double> entropy;
  LinearFit entropy_fit;                  ///< entropy against ln N
  double omega_d2 = 0, omega_d4 = 0;      ///< at 0, through cumulants of the tilted measure
  bool omega_convex_off_zero = false;     ///< omega'' > 0 on a grid of nonzero points
  bool omega_degenerate = false;
  InequalityProfile omega_profile;
  double theta_exponent = 0;
};

CurieWeissSuite curie_weiss_suite(double kappa0, const std::vector<double>& N_list);

}  // namespace mfl

#endif
