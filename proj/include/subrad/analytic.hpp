#pragma once

// Closed-form results for a single local measurement on n emitters
// decaying from the fully excited state with permutation-symmetric coupling.

#include <string>

#include "subrad/types.hpp"

namespace subrad {

enum class WaitingMethod { Ode, ExactIlt };

std::string to_string(WaitingMethod m);
WaitingMethod waiting_method_from_string(const std::string& s);

/// Emission rate out of the state with k photons emitted: (n-k)(k+1).
double waiting_rate(int n, int k);

/// Probabilities P_n(k, t) that k photons have been emitted by time t, k = 0..n.
/// ExactIlt sums residues of the Laplace-domain solution (n <= 12 only).
RealVector waiting_dist(int n, double t, WaitingMethod method = WaitingMethod::Ode);

/// Fraction of |n/2, n/2-k> sent to the subradiant subspace by a sigma^z
/// (f_z) or sigma^x (f_x) measurement of one site.
double f_z(int n, int k);
double f_x(int n, int k);
double f_mu(Observable obs, int n, int k);

/// Subradiant population left after measuring at t_m: sum_k P_n(k, t_m) f_mu(n, k).
double psub_ss(int n, Observable obs, double t_m, WaitingMethod method = WaitingMethod::Ode);
double psub_ss(const RealVector& waiting, Observable obs);

/// P_x + P_z / 2 - (n-1)/(2n) at t_m.
double reciprocity_residual(int n, double t_m);

/// Measurement time maximizing the sigma^z subradiant population.
double optimal_tm_z(int n);

/// Half-chain entanglement entropy for even n, linear in the subradiant population.
double entropy_ss(int n, double psub);

}  // namespace subrad
