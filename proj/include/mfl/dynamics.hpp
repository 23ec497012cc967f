/** @file dynamics.hpp
 *  Euler–Maruyama simulation of the N-particle system and of the reduced barycenter SDE, a
 *  replica pool with canonical ordering, and an implicit Scharfetter–Gummel solver for the 1-D
 *  mean-field Fokker–Planck equation.
 */
#ifndef MFL_DYNAMICS_HPP
#define MFL_DYNAMICS_HPP

#include "mfl/measures.hpp"
#include "mfl/potentials.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace mfl {

enum class Model { toy, curie_weiss };

const char* to_string(Model m);

enum class InitKind { gaussian, cloud, file };

struct InitSpec {
  InitKind kind = InitKind::gaussian;
  VecX mean;              ///< gaussian: centre (defaults to the origin)
  double s2 = 0;          ///< gaussian: per-coordinate variance; 0 places every particle at the mean
  MatX cloud;             ///< cloud: d x N, one particle per column
  std::string path;       ///< file: CSV with N rows of d columns, no header
  bool center = false;    ///< shift the cloud so that its barycenter equals `mean` exactly
};

/// Gradient of the unconfined potential, used in place of the spec's own when set.
using BaseGradient = std::function<void(const double* m, double* out)>;

struct SimConfig {
  PotentialSpec<double> spec;
  Model model = Model::toy;
  int N = 1;
  double dt = 1e-3;
  double horizon = 1;
  std::uint64_t seed = 0;
  std::uint64_t replica_id = 0;
  InitSpec init;
  bool noise = true;
  int thin = 0;                    ///< 0 selects ceil(0.1 / dt)
  bool store_states = true;        ///< keep thinned particle clouds
  bool record_increments = false;  ///< keep per-step sum_i xi_i / sqrt(N)
  BaseGradient base_gradient;

  long long steps() const;
  int thin_stride() const;
};

struct Event {
  std::string name;
  long long step = 0;
  double time = 0;
  VecX payload;
};

struct TrajectoryBatch {
  std::vector<double> times;       ///< thinned times
  std::vector<MatX> states;        ///< thinned clouds, d x N
  std::vector<VecX> barycenter;    ///< thinned barycenters
  std::vector<Event> events;
  std::vector<VecX> increments;    ///< shared increments, one per step
  MatX terminal_state;
  VecX terminal_mean;
  VecX terminal_variance;          ///< per coordinate, empirical over particles
  long long steps_taken = 0;
};

/// Per-step view handed to observers; return true to stop the run at this step.
struct StepView {
  long long step;
  double time;
  const MatX& X;
  const VecX& xbar;
};
using Observer = std::function<bool(const StepView&)>;

/// Replica stream: a pure function of (seed, replica).
std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t replica);
/// Independent family of replica streams indexed by `stream` (one per study parameter).
std::mt19937_64 replica_engine(std::uint64_t seed, std::uint64_t replica, std::uint64_t stream);

/// Initial cloud per `cfg.init` (draws from `gen` for the gaussian kind).
MatX initial_cloud(const SimConfig& cfg, std::mt19937_64& gen);

TrajectoryBatch simulate_particles(const SimConfig& cfg, const Observer& observer = {});

/// Reduced SDE dXbar = -grad V_kappa dt + sqrt(2/N) dW. When `shared` is given its entries replace
/// the Gaussian draws (one d-vector per step).
TrajectoryBatch simulate_barycenter(const SimConfig& cfg, const std::vector<VecX>* shared = nullptr,
                                    const Observer& observer = {});

/// Classical RK4 for dm/dt = -grad V_kappa(m); returns the path at every step.
std::vector<VecX> gradient_flow(const PotentialSpec<double>& spec, const VecX& m0, double dt, long long steps);

/// Runs f(replica) for replica in [0, count) on up to `workers` threads. Each replica writes only
/// its own slot, so results do not depend on scheduling.
template <class F>
void for_each_replica(int count, int workers, F&& f) {
  if (workers <= 1 || count <= 1) {
    for (int r = 0; r < count; ++r) f(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    while (!failed.load()) {
      const int r = next.fetch_add(1);
      if (r >= count) return;
      try {
        f(r);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min(workers, count);
  for (int i = 0; i < n; ++i) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Default worker count: hardware concurrency, at least one.
int default_workers();

// ---------------------------------------------------------------------------
// Mean-field Fokker–Planck in one dimension

struct PdeOptions {
  int record_every = 0;       ///< snapshot stride in steps; 0 keeps only the endpoints
  double max_cell_peclet = 10;  ///< accuracy cap on dt * max|b| / h
  int picard_max = 100;
  double picard_tol = 1e-14;
};

struct PdeResult {
  std::vector<double> times;            ///< every step
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> free_energy;
  std::vector<double> mass;
  std::vector<double> snapshot_times;
  std::vector<Density1D> snapshots;
  double max_mass_error = 0;            ///< largest per-step change of the mass
  double max_free_energy_increase = 0;  ///< largest per-step increase of F (0 if monotone)
  double min_density = 0;
  int max_picard = 0;
};

/// Half-width L of the solver box: the frozen-drift potential exceeds its minimum by `tail` at
/// +-L for every barycenter in [m_lo, m_hi].
double pde_half_width(const PotentialSpec<double>& spec, double m_lo, double m_hi, double tail = 40);

/// Implicit Euler with Scharfetter–Gummel fluxes for d_t rho = d_x(rho b) + d_xx rho, no-flux
/// boundaries, the barycenter in b resolved by Picard iteration at each step.
PdeResult solve_mckean_vlasov_1d(const PotentialSpec<double>& spec, const Density1D& rho0, double dt,
                                 double horizon, const PdeOptions& opts = {});

}  // namespace mfl

#endif
