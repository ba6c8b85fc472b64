#pragma once

// Measurement protocols built on the dynamics module.

#include <optional>
#include <string>
#include <vector>

#include "subrad/dicke.hpp"
#include "subrad/dynamics.hpp"

namespace subrad {

struct Branch {
  int outcome = 1;  // +1 or -1
  double probability = 0.0;
  Matrix rho;       // normalized post-measurement state
};

/// Born-rule branches of a projective sigma^obs measurement of `site`.
/// Branches with probability below 1e-14 are dropped.
std::vector<Branch> apply_measurement_branches(const Matrix& rho, int n_sites, int site,
                                               Observable obs);
/// sum_k P_k rho P_k.
Matrix nonselective_measure(const Matrix& rho, int n_sites, int site, Observable obs);

enum class PseBackend { Reduced, Full };

struct SingleMeasurementResult {
  double psub_ss = 0.0;
  double p_plus = 0.0;
  double p_minus = 0.0;
  /// Time (after t_m) at which the steady state was declared.
  double settle_time = 0.0;
};

/// Fully excited symmetric ensemble, one measurement of site 1 at t_m, then
/// free decay to the steady state. Returns 1 - P_G at the end. The reduced
/// backend works in the bright ladder and then in the 2n-dimensional space
/// {|e>,|g>} x (bright ladder of the other n-1 sites).
SingleMeasurementResult single_measurement_pse(int n, Observable obs, double t_m,
                                               PseBackend backend = PseBackend::Reduced,
                                               const EvolutionConfig& cfg = {});
/// Runs both backends and throws NumericalFailure if they differ by more than 1e-6.
SingleMeasurementResult single_measurement_pse_checked(int n, Observable obs, double t_m,
                                                       const EvolutionConfig& cfg = {});

struct LifetimeResult {
  double t_sub = 0.0;
  double t_sub_unmeasured = 0.0;
  double ratio = 1.0;
  /// Set when the threshold was not reached before the horizon; t_sub is then a lower bound.
  bool lower_bound = false;
  bool unmeasured_lower_bound = false;
};

/// Time at which <n_exc> first falls to 5% of n, starting from all excited,
/// with a nonselective measurement of `site` at t_m (none if t_m is empty).
LifetimeResult lifetime_t_sub(const CouplingModel& model, Observable obs, std::optional<double> t_m,
                              int site = 1, double horizon = 200.0, const EvolutionConfig& cfg = {});

enum class Engine { DensitySampled, DensityNonselective, Mcwf };
std::string to_string(Engine e);
Engine engine_from_string(const std::string& s);

/// Observables recorded by repeated-measurement and drive runs. "rest" refers
/// to the n-1 sites other than the measured (or driven) one.
struct ProtocolObservables {
  ProtocolObservables(int n_sites, int site);

  static const std::vector<std::string>& names();
  RealVector evaluate(const Matrix& rho) const;
  RealVector evaluate(const Vector& psi) const;

  int n_sites;
  int site;

 private:
  Matrix ladder_;
  Matrix ladder_rest_;
  RealVector counts_;
  RealVector counts_rest_;
};

struct ProtocolResult {
  std::string engine;
  std::vector<std::string> names;
  EnsembleStats stats;
  std::uint64_t base_seed = 0;

  /// Column of `name` in the stats matrices.
  Eigen::Index column(const std::string& name) const;
};

struct RunOptions {
  std::size_t n_samples = 1000;
  std::uint64_t base_seed = 0;
  int workers = 1;
  EvolutionConfig cfg{};
};

/// Starts from all excited and applies the schedule's measurements up to t_final.
ProtocolResult repeated_measurement_run(const CouplingModel& model,
                                        const MeasurementSchedule& schedule, Engine engine,
                                        double t_final, const std::vector<double>& sample_times,
                                        const RunOptions& options = {});

/// Free decay with an extra Rabi drive rabi * sigma^x on `site`, sampled with MCWF
/// (or the master equation when engine is DensityNonselective).
ProtocolResult strong_drive_run(const CouplingModel& model, int site, double rabi, double t_final,
                                const std::vector<double>& sample_times,
                                const RunOptions& options = {}, Engine engine = Engine::Mcwf);

struct SectorPopulation {
  int two_j = 0;
  double population = 0.0;
};

struct DoubleMeasurementResult {
  double psub_total = 0.0;
  std::vector<SectorPopulation> sectors;  // descending J
  /// Same quantity with only the first measurement.
  double psub_single = 0.0;
};

/// Symmetric ensemble from all excited, nonselective measurements at t_m
/// (site 1) and t_m + tau (site 1 or site 2), then decay to the steady state.
DoubleMeasurementResult pse_double_measurement(int n, Observable obs, double t_m, double tau,
                                               bool same_site, const EvolutionConfig& cfg = {});

}  // namespace subrad
