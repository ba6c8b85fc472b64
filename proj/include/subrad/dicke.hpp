#pragma once

// Collective angular-momentum structure of n two-level emitters.

#include <cstdint>
#include <utility>
#include <vector>

#include "subrad/qops.hpp"

namespace subrad {

/// Exact d_J for total spin J = two_j / 2. Throws on a parity or range violation.
std::uint64_t degeneracy(int n, int two_j);

/// |n/2, M> for M = n/2 ... -n/2, generated from |E> by S^- with renormalization.
std::vector<StateVector> bright_ladder(int n);
/// Same states as the columns of a 2^n x (n+1) matrix.
Matrix bright_ladder_matrix(int n);

Operator bright_projector(int n);
Operator subradiant_projector(int n);

/// Population outside the maximal-J ladder, Tr[(I - P_bright) rho].
/// `ladder` is bright_ladder_matrix(n), passed in so callers can reuse it.
double subradiant_population(const Matrix& rho, const Matrix& ladder);
double subradiant_population(const Vector& psi, const Matrix& ladder);

struct JSector {
  int two_j = 0;
  std::uint64_t degeneracy = 0;
  int rank = 0;
  Operator projector;
};

struct JSpectrum {
  int n = 0;
  std::vector<JSector> sectors;  // descending J
};

/// Total spin S^2 = Sx^2 + Sy^2 + Sz^2 with S_mu = sum_j sigma_j^mu / 2.
Operator total_spin_squared(int n);
JSpectrum j_spectrum(int n);
/// Tr(P_J rho) per sector, in the order of `spectrum.sectors`.
std::vector<double> sector_populations(const Matrix& rho, const JSpectrum& spectrum);

/// Single-excitation dark state reached after measuring `measured_site`:
/// the normalized projection of |e>_site (x) |G>_rest onto the subradiant
/// subspace. It is annihilated by S^- and lies in the J = n/2 - 1 sector.
StateVector dark_state(int n, int measured_site = 1);

/// (sqrt((n-k)/n), sqrt(k/n)): weights of |e>_i and |g>_i when |n/2, n/2-k>
/// is split into site i and the bright ladder of the other n-1 sites.
std::pair<double, double> cg_split_coeffs(int n, int k);

/// Closed-form entanglement entropy per unit subradiant population with the
/// measured site in a block of ceil(n/2) sites:
///   -p log p - q log q,  p = (1 + (nA-1)/(n-1)) / 2,  q = nB / (2 (n-1)).
/// These weights are the Schmidt weights of the equal-amplitude superposition
/// (|e>|G> - |g>|W>)/sqrt(2); for n > 2 that superposition is not the state
/// returned by dark_state(), whose reduced entropy is smaller.
double half_chain_entropy_dark(int n);

}  // namespace subrad
