#pragma once

// Dense operator algebra on n-qubit spaces.
//
// Basis convention: per site index 0 is |e> and index 1 is |g>. Multi-site
// indices are big-endian in site order, so site 1 is the most significant
// bit. Sites are numbered 1..n in every public signature.

#include <cstdint>
#include <variant>
#include <vector>

#include "subrad/types.hpp"

namespace subrad {

using Matrix2 = Eigen::Matrix2cd;

namespace pauli {
Matrix2 identity();
Matrix2 x();
Matrix2 y();
Matrix2 z();
/// sigma^+ = |e><g|
Matrix2 plus();
/// sigma^- = |g><e|
Matrix2 minus();
/// Projector onto the eigenvalue +1 (sign > 0) or -1 eigenvector of `obs`.
Matrix2 projector(Observable obs, int sign);
}  // namespace pauli

inline std::int64_t hilbert_dim(int n_sites) { return std::int64_t{1} << n_sites; }

/// Bit mask of `site` (1-based) inside a basis index of an n-site register.
inline std::int64_t site_mask(int site, int n_sites) {
  return std::int64_t{1} << (n_sites - site);
}

/// Pure state of n qubits.
class StateVector {
 public:
  /// Requires a unit-norm vector of length 2^n (within 1e-12).
  StateVector(int n_sites, Vector amplitudes);

  /// Normalizes `amplitudes`; throws if the vector is zero.
  static StateVector normalized(int n_sites, Vector amplitudes);
  /// Product state; `excited[s-1]` selects |e> for site s.
  static StateVector product(const std::vector<bool>& excited);
  static StateVector all_excited(int n_sites);
  static StateVector all_ground(int n_sites);

  int n_sites() const { return n_sites_; }
  const Vector& amplitudes() const { return amplitudes_; }

 private:
  int n_sites_;
  Vector amplitudes_;
};

/// Density matrix of n qubits. Construction checks Hermiticity (1e-10) and
/// unit trace (1e-8). Positivity is checked on demand by `is_positive`.
class DensityMatrix {
 public:
  DensityMatrix(int n_sites, Matrix matrix);

  static DensityMatrix pure(const StateVector& psi);
  static DensityMatrix maximally_mixed(int n_sites);

  int n_sites() const { return n_sites_; }
  const Matrix& matrix() const { return matrix_; }
  bool is_positive(double floor = -1e-8) const;

 private:
  int n_sites_;
  Matrix matrix_;
};

/// Operator on n qubits in the global basis convention.
struct Operator {
  int n_sites = 0;
  Matrix matrix;

  SparseMatrix sparse(double drop = 0.0) const;
};

/// I x ... x op2 x ... x I with op2 in slot `site`.
Operator embed_site_op(const Matrix2& op2, int site, int n_sites);
/// Same as embed_site_op, built directly in sparse form.
SparseMatrix embed_site_sparse(const Matrix2& op2, int site, int n_sites);

/// S^- = sum_m sigma_m^-.
Operator collective_lowering(int n_sites);
SparseMatrix collective_lowering_sparse(int n_sites);

/// Number of excited sites of every basis index.
RealVector excitation_counts(int n_sites);
double excitation_number(const Matrix& rho, int n_sites);

struct PseGeometry {};
struct WaveguideGeometry {
  double d_over_lambda0 = 0.0;
};
struct CustomGeometry {};
using Geometry = std::variant<PseGeometry, WaveguideGeometry, CustomGeometry>;

/// Decay and dipole-dipole coupling matrices of n emitters, in units of gamma0.
struct CouplingModel {
  int n = 0;
  double gamma0 = 1.0;
  RealMatrix gamma;
  RealMatrix omega;
  Geometry geometry;
};

CouplingModel build_couplings(const Geometry& geometry, int n, double gamma0 = 1.0);
/// Validates symmetry, the diagonal of `gamma` and the zero diagonal of `omega`.
CouplingModel make_custom_model(RealMatrix gamma, RealMatrix omega);
/// Couplings of the remaining n-1 emitters after removing `site`.
CouplingModel remove_site(const CouplingModel& model, int site);
std::string geometry_name(const Geometry& geometry);

/// One collective lowering operator sqrt(rate) * sum_m coeffs[m] sigma_m^-.
struct JumpChannel {
  double rate = 0.0;
  RealVector coeffs;
};

/// Eigen-channels of the decay matrix, sorted by descending rate. Channels
/// with rate <= 1e-10 * gamma0 are dropped.
std::vector<JumpChannel> jump_channels(const CouplingModel& model);

/// sum_m coeffs[m] sigma_m^-.
SparseMatrix channel_operator(const RealVector& coeffs, int n_sites);
/// H_I = sum_{l != m} omega_lm sigma_l^+ sigma_m^-.
SparseMatrix interaction_hamiltonian(const CouplingModel& model);

/// Traces out the (1-based) sites listed in `traced`.
Matrix partial_trace(const Matrix& rho, int n_sites, const std::vector<int>& traced);
DensityMatrix partial_trace_site(const DensityMatrix& rho, int site);
/// <u|_site rho |v>_site as an operator on the remaining n-1 sites.
Matrix site_matrix_element(const Matrix& rho, int n_sites, int site, const Eigen::Vector2cd& u,
                           const Eigen::Vector2cd& v);
/// Partial transpose of the first `partition_size` sites.
Matrix partial_transpose(const Matrix& rho, int n_sites, int partition_size);

double purity(const Matrix& rho);
double purity(const DensityMatrix& rho);
double negativity(const Matrix& rho, int n_sites, int partition_size);
double negativity(const DensityMatrix& rho, int partition_size);
/// Bipartition into the first ceil(n/2) sites and the rest.
double negativity(const DensityMatrix& rho);
int default_partition_size(int n_sites);
double von_neumann_entropy(const Matrix& rho);
double von_neumann_entropy(const DensityMatrix& rho);

/// Relabels sites: site s of the input becomes site perm[s-1] of the output.
Vector permute_sites(const Vector& psi, int n_sites, const std::vector<int>& perm);

}  // namespace subrad
