/** @file measures.hpp
 *  Isotropic Gaussians, tabulated 1-D densities, Wasserstein-2 distances, relative entropy and
 *  Fisher information, and the free energy on both families.
 */
#ifndef MFL_MEASURES_HPP
#define MFL_MEASURES_HPP

#include "mfl/potentials.hpp"

#include <vector>

namespace mfl {

struct GaussianSpec {
  VecX mean;
  double s2 = 1;  ///< isotropic variance

  GaussianSpec() = default;
  GaussianSpec(VecX m, double var);
  /// Rejects anything but a multiple of the identity.
  static GaussianSpec from_covariance(const VecX& m, const MatX& cov);
  int d() const { return int(mean.size()); }
};

/// gamma_m = N(m, I / kappa).
GaussianSpec local_equilibrium(const VecX& m, double kappa);

/// Piecewise-constant density on uniform cells: x holds cell centres, p the density values.
struct Density1D {
  std::vector<double> x;
  std::vector<double> p;
  bool normalized = false;  ///< true when the constructor had to rescale the mass

  double h() const { return x.size() > 1 ? x[1] - x[0] : 1.0; }
  double mass() const;
  double mean() const;
  double variance() const;
};

/// Evaluates f at cell centres of [lo, hi] split into n cells and normalizes.
Density1D tabulate(const std::function<double(double)>& f, double lo, double hi, int n);
/// Rescales to unit mass; flags the rescaling when the mass was off by more than 1e-8.
Density1D make_density(std::vector<double> x, std::vector<double> p);

struct EntropyFisher {
  double H = 0;  ///< relative entropy H(mu | rho)
  double I = 0;  ///< relative Fisher information I(mu | rho)
};

/// Closed forms for isotropic Gaussians of equal dimension.
EntropyFisher gaussian_entropy_fisher(const GaussianSpec& mu, const GaussianSpec& rho);

/// Quadrature of H and I for tabulated densities on the same grid.
EntropyFisher entropy_fisher(const Density1D& mu, const Density1D& rho);

double w2(const GaussianSpec& mu, const GaussianSpec& nu);
/// 1-D sample sets of any sizes, exact through the quantile coupling.
double w2(const std::vector<double>& a, const std::vector<double>& b);
/// d-dimensional equal-size sample sets (rows are points), exact assignment for n <= 512.
double w2(const MatX& a, const MatX& b);
/// Exact quantile transport between piecewise-constant densities.
double w2(const Density1D& mu, const Density1D& nu);
/// Exact 1-D distance of an empirical measure to N(mean, s2).
double w2_to_gaussian(const std::vector<double>& samples, double mean, double s2);

double normal_quantile(double p);
double normal_cdf(double x);

struct FreeEnergy {
  double value = 0;
  bool normalization_applied = false;
};

/// Toy model: V(m_mu) + kappa/2 int |x|^2 mu + int mu ln mu. Curie–Weiss: int V rho - kappa/2 m^2
/// + int rho ln rho.
FreeEnergy free_energy(const GaussianSpec& mu, const PotentialSpec<double>& spec);
FreeEnergy free_energy(const Density1D& mu, const PotentialSpec<double>& spec);

/// Gamma(N(m, s2)) for the toy model: N(-grad V(m) / kappa, 1 / kappa).
GaussianSpec gaussian_local_equilibrium(const GaussianSpec& mu, const PotentialSpec<double>& spec);

struct PlScan {
  double sup = 0;
  VecX argmax_m;
  double argmax_s2 = 0;
  bool pl_flag = true;  ///< false when V_kappa has more than one minimizer on the scan region
  double min_value = 0;
};

/// Sup over N(m, s2) of 2 Fbar / I(mu | Gamma(mu)), Fbar = F - min F; points with I < 1e-14 skipped.
PlScan pl_ratio_gaussian_scan(const PotentialSpec<double>& spec, const std::vector<VecX>& m_grid,
                              const std::vector<double>& s2_grid);

}  // namespace mfl

#endif
