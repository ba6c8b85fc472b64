#pragma once

// Time evolution: GKSL master equation and Monte-Carlo wavefunction
// trajectories interrupted by instantaneous projective measurements.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "subrad/integrator.hpp"
#include "subrad/qops.hpp"

namespace subrad {

/// Precomputed sparse pieces of the GKSL generator
///   d rho/dt = -i[H, rho] + sum_k L_k rho L_k^+ - 1/2 {L_k^+ L_k, rho}
/// with H = H_I (+ an optional extra term) and L_k = sqrt(rate_k) sum_m c_km sigma_m^-.
class LindbladGenerator {
 public:
  explicit LindbladGenerator(const CouplingModel& model);
  LindbladGenerator(const CouplingModel& model, const SparseMatrix& extra_hamiltonian);

  int n_sites() const { return model_.n; }
  const CouplingModel& model() const { return model_; }
  const std::vector<JumpChannel>& channels() const { return channels_; }
  const std::vector<SparseMatrix>& jump_operators() const { return jumps_; }
  const SparseMatrix& hamiltonian() const { return hamiltonian_; }
  /// H - (i/2) sum_k L_k^+ L_k
  const SparseMatrix& effective_hamiltonian() const { return h_eff_; }

  /// Generator applied to an arbitrary square matrix.
  void apply(const Matrix& rho, Matrix& out) const;
  Matrix apply(const Matrix& rho) const;
  /// Faster variant that assumes `rho` is Hermitian and returns a Hermitian result.
  void apply_hermitian(const Matrix& rho, Matrix& out) const;

 private:
  CouplingModel model_;
  std::vector<JumpChannel> channels_;
  std::vector<SparseMatrix> jumps_;
  std::vector<SparseMatrix> jumps_adj_;
  SparseMatrix hamiltonian_;
  SparseMatrix h_eff_;
  SparseMatrix h_eff_adj_;
};

/// Right-hand side of the master equation for `model`.
Matrix lindblad_rhs(const DensityMatrix& rho, const CouplingModel& model);

/// Adaptive master-equation stepping with optional trace renormalization.
class MasterEvolver {
 public:
  MasterEvolver(const LindbladGenerator& generator, const EvolutionConfig& cfg);

  void evolve(Matrix& rho, double t0, double t1);
  /// One accepted step from t toward t_end; returns the step size.
  double step(Matrix& rho, double t, double t_end);
  /// Fixed step of size h from `rho` into `out` without error control, for
  /// locating crossings inside an accepted step.
  void trial_step(const Matrix& rho, double h, Matrix& out);
  /// Evolves until |d<n_exc>/dt| < steady_eps or t0 + t_horizon. Returns the final time.
  double evolve_to_steady(Matrix& rho, double t0);
  /// d<n_exc>/dt of the current state, from the last accepted step.
  double excitation_rate(const Matrix& rho) const;

  const EvolutionConfig& config() const { return cfg_; }

 private:
  const LindbladGenerator& generator_;
  EvolutionConfig cfg_;
  RealVector counts_;
  DormandPrince<Matrix> stepper_;
};

DensityMatrix evolve_master(const DensityMatrix& rho0, const CouplingModel& model, double t,
                            const EvolutionConfig& cfg = {});

/// Instantaneous projective measurement of sigma^obs on `site` at `time`.
struct MeasurementEvent {
  double time = 0.0;
  int site = 1;
  Observable observable = Observable::X;
};

/// Measurements of one site: explicit times, or t_in, t_in + 1/r, t_in + 2/r, ...
struct MeasurementSchedule {
  struct Discrete {
    std::vector<double> times;
  };
  struct Periodic {
    double t_in = 0.0;
    double rate = 1.0;
  };

  int site = 1;
  Observable observable = Observable::X;
  std::variant<Discrete, Periodic> mode = Discrete{};

  void validate(int n_sites) const;
  /// Sorted, deduplicated events with time <= t_final.
  std::vector<MeasurementEvent> events_until(double t_final) const;
};

/// Sorts events by time and removes exact duplicates.
std::vector<MeasurementEvent> normalize_events(std::vector<MeasurementEvent> events);

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of stream `index` derived from `base_seed`; independent of run order.
std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index);

/// Deterministic uniform generator on (0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

struct JumpEvent {
  double time = 0.0;
  int channel = 0;
};

struct MeasurementOutcome {
  double time = 0.0;
  int site = 1;
  Observable observable = Observable::X;
  int outcome = 1;  // +1 or -1
};

using StateObservable = std::function<double(const Vector& psi)>;
/// Several observables evaluated together; returns one value per column.
using StateSampler = std::function<RealVector(const Vector& psi)>;

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jump_events;
  std::vector<MeasurementOutcome> measurement_events;
  std::vector<double> sample_times;
  RealMatrix samples;  // sample_times x observables, evaluated on the normalized state
  Vector final_state;
};

/// One MCWF trajectory: no-jump evolution with H_eff, jump times located by
/// bisection of the squared norm against a uniform threshold, channel chosen
/// with probability proportional to ||L_k psi||^2. Measurements act at their
/// scheduled times (a measurement at t = 0 acts on psi0). Samples taken at a
/// measurement time see the post-measurement state.
TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const LindbladGenerator& generator,
                                 const std::vector<MeasurementEvent>& events, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times = {},
                                 const std::vector<StateObservable>& observables = {});

/// Same, with all observables computed by one sampler returning `width` values.
TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const LindbladGenerator& generator,
                                 const std::vector<MeasurementEvent>& events, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times,
                                 const StateSampler& sampler, int width);

TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const CouplingModel& model,
                                 const MeasurementSchedule& schedule, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times = {},
                                 const std::vector<StateObservable>& observables = {});

/// Mean and standard error of sampled series.
struct EnsembleStats {
  std::vector<double> times;
  RealMatrix mean;    // times x observables
  RealMatrix stderr_;  // standard error of the mean
  std::size_t n_samples = 0;
};

/// Reduces per-sample matrices (all the same shape) in index order.
EnsembleStats reduce_samples(const std::vector<RealMatrix>& samples, std::vector<double> times);

struct TrajectoryEnsemble {
  StateVector psi0;
  const LindbladGenerator* generator = nullptr;
  std::vector<MeasurementEvent> events;
  double t_final = 0.0;
  std::vector<double> sample_times;
};

/// Averages observables over n_traj trajectories with seeds stream_seed(base_seed, k).
/// Output is bit-identical for any worker count.
EnsembleStats average_trajectories(const TrajectoryEnsemble& ensemble,
                                   const std::vector<StateObservable>& observables,
                                   std::size_t n_traj, std::uint64_t base_seed,
                                   const EvolutionConfig& cfg = {}, int workers = 1);
EnsembleStats average_trajectories(const TrajectoryEnsemble& ensemble, const StateSampler& sampler,
                                   int width, std::size_t n_traj, std::uint64_t base_seed,
                                   const EvolutionConfig& cfg = {}, int workers = 1);

}  // namespace subrad
