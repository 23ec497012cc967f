// Experiment configuration: strict JSON parsing with every default materialized on echo.
#ifndef MFL_TOOLS_CONFIG_HPP
#define MFL_TOOLS_CONFIG_HPP

#include "report.hpp"

#include "mfl/potentials.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mfl::cli {

inline constexpr const char* kSchema = "mfl-experiment/1";

struct PotentialConfig {
  std::string kind = "quadratic";
  double kappa = 1;
  int d = 1;
  std::vector<std::vector<double>> M;
  double c = 0;
  double sigma2 = 1;
  double kappa0 = 1;

  PotentialSpec<double> build() const;
};

struct PotentialReportConfig {
  std::vector<std::vector<double>> points;  ///< empty selects the origin
};

struct CriticalPointsConfig {
  double box_half_width = 2;
  int grid_per_axis = 11;
};

struct GibbsConfig {
  double omega_lo = -1, omega_hi = 1;
  int omega_points = 41;
  std::vector<double> N = {16, 256, 4096, 65536};
};

struct InitConfig {
  std::string kind = "gaussian";
  std::vector<double> mean;
  double s2 = 0;
  bool center = false;
  std::string path;
};

struct SimulateConfig {
  std::string model = "toy";
  int N = 64;
  double dt = 1e-3;
  double horizon = 10;
  int replicas = 1;
  bool reduced = false;
  bool noise = true;
  int thin = 0;
  bool write_states = false;
  InitConfig init;
};

/// The drift follows the potential: the Curie–Weiss model for kind curie_weiss, the toy model otherwise.
struct PdeConfig {
  int cells = 800;
  double dt = 1e-3;
  double horizon = 5;
  double half_width = 0;  ///< 0 selects the automatic box
  double init_mean = 0.5;
  double init_s2 = 0.25;
  double mean_tol_factor = 5;  ///< sup error against the reduced ODE, in units of dt
  double w2_tol = 1e-3;
};

struct TransitionConfig {
  std::vector<double> x0 = {-1}, x1 = {1}, z = {0};
  double delta = 0.3;
  std::vector<int> N = {12, 16, 20, 24, 28};
  int replicas = 300;
  std::map<std::string, int> replicas_override = {{"24", 1000}};
  double dt = 1e-3;
  double horizon = 0;
  double horizon_factor = 30;
  bool full_particles = false;
  double init_s2 = 0;
  double censor_threshold = 0.05;
  double bias_probe_fraction = 0.1;
  int exponential_N = 24;
  double slope_rel_tol = 0.1;
  double prefactor_lo = 0.5, prefactor_hi = 2;
  double ks_max = 0.08;
};

struct SaddleExitConfig {
  std::vector<double> z = {0};
  double delta = 0.5;
  std::vector<int> N = {4096};
  int replicas = 2000;
  double dt = 1e-3;
  double horizon = 1e4;
  bool full_particles = false;
  int reference_samples = 200000;
  double ks_max = 0.1;
  double side_se = 3;
};

struct BundleConfig {
  bool enabled = false;
  double c1 = 12, c2 = 12, beta = 4;
  int d = 1;
  double N = 100, R = 2;
};

struct PoincareConfig {
  bool enabled = false;
  std::string u = "x4";  ///< x4 or x2
  std::vector<double> N = {10, 100, 1000, 10000};
  double c2 = 12, beta = 4;  ///< constants of u used for the ordering check
};

struct InequalitiesConfig {
  double box_half_width = 2;
  int grid_per_axis = 21;
  double r_lo = 1e-9, r_hi = 1;
  int per_decade = 10;
  bool pl = true;
  BundleConfig bundle;
  PoincareConfig poincare;
};

struct CurieWeissConfig {
  double kappa0 = 1;
  std::vector<double> N = {16, 256, 4096, 65536, 1048576};
  double sigma2_lo = 0.45, sigma2_hi = 0.47;
  double lsi_exponent = 0.5, lsi_tol = 0.03;
  double entropy_slope = 0.25, entropy_tol = 0.02;
  double theta_exponent = 2.0 / 3.0, theta_tol = 0.05;
};

struct ExperimentConfig {
  std::string schema = kSchema;
  std::string command;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "out";
  bool has_potential = false;
  PotentialConfig potential;
  PotentialReportConfig potential_report;
  CriticalPointsConfig critical_points;
  GibbsConfig gibbs;
  SimulateConfig simulate;
  PdeConfig pde;
  TransitionConfig transition;
  SaddleExitConfig saddle_exit;
  InequalitiesConfig inequalities;
  CurieWeissConfig curie_weiss;
};

/// Parses and validates; throws a configuration error naming the offending key.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);

/// The configuration with every default resolved; parse_config(echo(c)) reproduces c.
json echo(const ExperimentConfig& c);

}  // namespace mfl::cli

#endif
