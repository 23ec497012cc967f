/** @file metastability.hpp
 *  Transition and saddle-exit Monte Carlo studies on the barycenter SDE, Eyring–Kramers
 *  predictions, exponential-law tests, heteroclinic exit data and the coupled coincidence run
 *  for localized potentials.
 */
#ifndef MFL_METASTABILITY_HPP
#define MFL_METASTABILITY_HPP

#include "mfl/critical_points.hpp"
#include "mfl/dynamics.hpp"
#include "mfl/stats.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfl {

struct EyringKramers {
  double time = 0;        ///< predicted mean transition time
  double prefactor = 0;   ///< (2 pi / lambda1) sqrt(|det H_z| / det H_x0)
  double barrier = 0;     ///< V_kappa(z) - V_kappa(x0)
  double lambda1 = 0;     ///< unstable eigenvalue magnitude at z
  double det_saddle = 0;
  double det_minimum = 0;
};

EyringKramers eyring_kramers_predict(const PotentialSpec<double>& spec, const VecX& x0, const VecX& z, double N);

/// Checks the transition geometry: x0, x1 non-degenerate minimizers, z an index-1 non-degenerate
/// saddle, the balls around x0 and x1 disjoint and free of z. Throws a geometry error otherwise.
void verify_transition_geometry(const PotentialSpec<double>& spec, const VecX& x0, const VecX& x1,
                                const VecX& z, double delta);

struct TransitionOptions {
  double dt = 1e-3;
  double horizon = 0;           ///< per-replica cap; 0 selects horizon_factor x Eyring–Kramers
  double horizon_factor = 30;
  double censor_threshold = 0.05;
  double bias_probe_fraction = 0.1;
  int workers = 1;
  bool full_particles = false;  ///< simulate all N particles instead of the reduced SDE
  double init_s2 = 0;           ///< full mode: initial per-particle spread around x0
  std::vector<int> replicas_override_N;  ///< N values whose replica count is replaced
  std::vector<int> replicas_override;
};

struct TransitionRow {
  int N = 0;
  int replicas = 0;
  int censored = 0;
  bool excluded = false;
  MeanSE mean;
  double median = 0;
  double prediction = 0;        ///< Eyring–Kramers time
  double probe_mean_dt = 0;     ///< mean over the probe replicas at dt
  double probe_mean_half = 0;   ///< same replicas at dt / 2
  int probe_count = 0;
};

struct HittingStudy {
  std::vector<int> N_list;
  std::vector<std::vector<double>> samples;  ///< per N, hitting times in replica order, NaN if censored
  std::vector<TransitionRow> rows;
  std::vector<std::string> warnings;
  LinearFit arrhenius;                        ///< ln mean tau against N over non-excluded N
  double prefactor_fit = 0;                   ///< mean tau / e^{N slope} at the largest N
  double prefactor_barrier = 0;               ///< mean tau / e^{N barrier} at the largest N
  int prefactor_N = 0;
  EyringKramers ek;                           ///< spectral data (time at the largest N)

  /// Uncensored samples for N.
  std::vector<double> uncensored(int N) const;
};

/// Hitting times of B(x1, delta) for the barycenter started at x0.
HittingStudy transition_study(const PotentialSpec<double>& spec, const VecX& x0, const VecX& x1, const VecX& z,
                              double delta, const std::vector<int>& N_list, int replicas, std::uint64_t seed,
                              const TransitionOptions& opts = {});

/// Exponential-law test on tau / mean(tau). Requires at least 200 finite samples.
KsResult exponentiality_test(const std::vector<double>& samples);

using GradientField = std::function<VecX(const VecX&)>;

struct HeteroclinicData {
  VecX z;
  double lambda1 = 0;
  VecX v1;                               ///< unit unstable eigenvector, first non-zero entry positive
  double T[2] = {0, 0};                  ///< T_{-1}, T_{+1}
  VecX exit_point[2];                    ///< z_{-1}, z_{+1} on the sphere of radius delta
  std::vector<VecX> curve[2];            ///< stored descent paths
  std::vector<double> curve_time[2];
  std::vector<double> u_schedule;
  std::vector<double> T_u[2];            ///< T_s(u) + ln(u) / lambda1 along the schedule
  bool converged[2] = {false, false};

  double T_of(int side) const { return T[side > 0 ? 1 : 0]; }
  const VecX& exit_of(int side) const { return exit_point[side > 0 ? 1 : 0]; }
};

struct HeteroclinicOptions {
  double epsilon = 1e-6;
  double ode_dt = 1e-3;
  double ode_horizon = 1e3;
  double cauchy_tol = 1e-4;
  double u_start = 0;  ///< 0 selects delta / 4
  int max_halvings = 30;
};

HeteroclinicData compute_heteroclinic(const GradientField& grad, const MatX& hessian_at_z, const VecX& z,
                                      double delta, const HeteroclinicOptions& opts = {});
HeteroclinicData compute_heteroclinic(const PotentialSpec<double>& spec, const VecX& z, double delta,
                                      const HeteroclinicOptions& opts = {});

struct SaddleExitOptions {
  double dt = 1e-3;
  double horizon = 1e4;
  int workers = 1;
  bool full_particles = false;
  int reference_samples = 200000;
  HeteroclinicOptions heteroclinic;
};

struct SaddleExitRow {
  int N = 0;
  std::vector<double> tau;
  std::vector<int> side;
  std::vector<double> centered;       ///< tau - ln(N/2) / (2 lambda1)
  std::vector<double> w2;             ///< full mode: exit empirical measure vs gamma_{z_side}
  int censored = 0;
  int side_violations = 0;            ///< exits closer to z_{-side} than to z_{side}
  double p_plus = 0;
  double p_plus_se = 0;
  KsResult ks_stated;                 ///< against T_Q + ln(|Z| / sqrt(2 lambda1)) / lambda1
  KsResult ks_linearized;             ///< against T_Q - ln(|Z| / sqrt(2 lambda1)) / lambda1
  MeanSE centered_mean;
  double w2_fraction_below = 0;       ///< fraction of w2 values below the threshold
};

struct SaddleExitStudy {
  HeteroclinicData geometry;
  std::vector<SaddleExitRow> rows;
  std::vector<double> reference_stated, reference_linearized;
  double w2_threshold = 0.15;
};

/// Exit of the barycenter from B(z, delta) starting exactly at z.
SaddleExitStudy saddle_exit_study(const PotentialSpec<double>& spec, const VecX& z, double delta,
                                  const std::vector<int>& N_list, int replicas, std::uint64_t seed,
                                  const SaddleExitOptions& opts = {});

/// Reference-law sample T_Q + sign ln(|Z| / sqrt(2 lambda1)) / lambda1, Q uniform on {-1, +1}.
std::vector<double> saddle_reference_sample(const HeteroclinicData& h, int n, double sign, std::uint64_t seed);

struct CoincidenceStudy {
  int replicas = 0;
  double fraction_identical = 0;
  std::vector<double> divergence_time;  ///< first time the two clouds differ, NaN if never
  std::vector<double> exit_time;        ///< first barycenter exit of the original from B(m*, delta)
  int divergence_before_exit = 0;       ///< must be zero by construction
};

/// Runs the original and the localized particle systems on identical increment streams.
CoincidenceStudy coupled_local_coincidence(const PotentialSpec<double>& spec, const LocalizedSpec<double>& loc,
                                           int N, double horizon, int replicas, std::uint64_t seed,
                                           double dt = 1e-3, int workers = 1);

}  // namespace mfl

#endif
