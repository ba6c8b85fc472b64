#pragma once

// Effective dynamics of the unmeasured emitters when one site is measured
// infinitely often.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "subrad/dynamics.hpp"

namespace subrad {

/// Conditional states of the other n-1 sites for the two measurement outcomes.
struct ZenoState {
  Matrix chi_plus;
  Matrix chi_minus;

  double trace() const { return (chi_plus.trace() + chi_minus.trace()).real(); }
  Matrix total() const { return chi_plus + chi_minus; }
};

/// Pair generator. For the x basis:
///   d chi_+- = -i[+-H', chi_+-] + L_{n-1}[chi_+-] - (G_ii / 4)(chi_+- - chi_-+)
/// with H' = sum_{l != i} (Omega_il / 2) sigma^x_l + (Gamma_il / 4) sigma^y_l.
/// For the z basis (chi_+ = excited, chi_- = ground outcome) the measured site
/// only decays: d chi_e = L[chi_e] - G_ii chi_e, d chi_g = L[chi_g] + G_ii chi_e.
class ZenoGenerator {
 public:
  ZenoGenerator(const CouplingModel& model, int site, Observable basis = Observable::X);

  const CouplingModel& model() const { return model_; }
  const CouplingModel& reduced_model() const { return reduced_; }
  int site() const { return site_; }
  Observable basis() const { return basis_; }
  int n_rest() const { return reduced_.n; }
  /// H' on the n-1 remaining sites (zero for the z basis).
  const SparseMatrix& effective_field() const { return field_; }
  double mixing_rate() const { return mixing_; }

  /// Derivative of the stacked pair [chi_+; chi_-] (2d x d).
  void apply(const Matrix& stacked, Matrix& out) const;
  /// Same for non-Hermitian blocks.
  void apply_general(const Matrix& stacked, Matrix& out) const;
  /// Sparse generator acting on [vec(chi_+); vec(chi_-)] with column-major vec.
  Eigen::SparseMatrix<Complex> liouvillian() const;

 private:
  CouplingModel model_;
  CouplingModel reduced_;
  int site_;
  Observable basis_;
  SparseMatrix field_;
  double mixing_;
  std::unique_ptr<LindbladGenerator> plus_;
  std::unique_ptr<LindbladGenerator> minus_;
};

ZenoGenerator build_zeno_generator(const CouplingModel& model, int site,
                                   Observable basis = Observable::X);

Matrix stack(const ZenoState& s);
ZenoState unstack(const Matrix& stacked);

ZenoState evolve_zeno(const ZenoState& state, const ZenoGenerator& generator, double t,
                      const EvolutionConfig& cfg = {});

/// Subradiant population of the n-1 unmeasured sites, Tr[P_sub (chi_+ + chi_-)].
double zeno_psub(const ZenoState& state, const Matrix& rest_ladder);

/// P_sub of the unmeasured sites along the Zeno evolution, sampled at `times`
/// measured from the start of the Zeno dynamics.
std::vector<double> zeno_psub_series(const ZenoState& initial, const ZenoGenerator& generator,
                                     const std::vector<double>& times,
                                     const EvolutionConfig& cfg = {});

/// Full master equation from all excited up to t_in, then projection onto the
/// measurement basis of `site`.
ZenoState zeno_initial_state(const CouplingModel& model, int site, double t_in,
                             Observable basis = Observable::X, const EvolutionConfig& cfg = {});

/// LongTime integrates until the observables stop changing. LinearSolve takes
/// the null space of the dense vectorized generator (SVD, at most 4 unmeasured
/// sites) and reports its dimension. SparseSolve factorizes the sparse
/// generator with one equation replaced by the trace condition.
enum class ZenoMethod { LongTime, LinearSolve, SparseSolve };
std::string to_string(ZenoMethod m);
ZenoMethod zeno_method_from_string(const std::string& s);

struct ZenoSteadyOptions {
  /// Convergence threshold on |dP_sub/dt| and |d n_exc/dt|.
  double rate_tol = 1e-9;
  double horizon = 2000.0;
  /// Initial state for the long-time method; defaults to zeno_initial_state(model, i, 0).
  std::optional<ZenoState> initial;
  EvolutionConfig cfg{};
};

struct ZenoSteady {
  double psub = 0.0;
  ZenoState state;
  ZenoMethod method = ZenoMethod::LongTime;
  /// Time reached (long-time) or null-space dimension (linear solve).
  double settle_time = 0.0;
  int null_dimension = 0;
};

/// Steady state of the pair. The solvers throw NumericalFailure when the
/// steady state is not unique (SVD threshold 1e-10 relative).
ZenoSteady zeno_steady_state(const ZenoGenerator& generator, ZenoMethod method,
                             const ZenoSteadyOptions& options = {});
double zeno_steady_psub(const ZenoGenerator& generator, ZenoMethod method,
                        const ZenoSteadyOptions& options = {});

struct ZenoSweep {
  int n = 0;
  std::vector<double> d_grid;
  std::vector<int> sites;
  RealMatrix table;  // d_grid x sites
  double best_d = 0.0;
  int best_site = 0;
  double best_value = 0.0;
  /// Cells where the linear solve was degenerate and the long-time method was used.
  int fallbacks = 0;
};

/// Steady P_sub of the unmeasured sites over waveguide spacings and measured sites.
/// Sparse solve by default. Cells without a unique steady state fall back to
/// long-time integration.
ZenoSweep zeno_sweep(int n, const std::vector<double>& d_grid, const std::vector<int>& sites,
                     int workers = 1, std::optional<ZenoMethod> method = std::nullopt,
                     const ZenoSteadyOptions& options = {});

}  // namespace subrad
