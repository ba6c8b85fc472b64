#include "subrad/dicke.hpp"

#include <cmath>
#include <limits>

namespace subrad {

namespace {

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (int j = 1; j <= k; ++j) {
    c = c * static_cast<unsigned>(n - k + j) / static_cast<unsigned>(j);
  }
  if (c > std::numeric_limits<std::uint64_t>::max()) {
    throw InvalidArgument("binomial coefficient overflows 64 bits");
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace

std::uint64_t degeneracy(int n, int two_j) {
  if (n < 1 || n > 62) throw InvalidArgument("degeneracy supports 1 <= n <= 62");
  if (two_j < 0 || two_j > n || (n - two_j) % 2 != 0) {
    throw InvalidArgument("2J must satisfy 0 <= 2J <= n and 2J = n mod 2");
  }
  // d_J = C(n, n/2 - J) - C(n, n/2 - J - 1)
  const int b = (n - two_j) / 2;
  return binomial(n, b) - binomial(n, b - 1);
}

std::vector<StateVector> bright_ladder(int n) {
  if (n < 1) throw InvalidArgument("ladder needs n >= 1");
  const SparseMatrix lower = collective_lowering_sparse(n);
  std::vector<StateVector> ladder;
  ladder.reserve(n + 1);
  ladder.push_back(StateVector::all_excited(n));
  for (int k = 0; k < n; ++k) {
    Vector next = lower * ladder.back().amplitudes();
    ladder.push_back(StateVector::normalized(n, std::move(next)));
  }
  return ladder;
}

Matrix bright_ladder_matrix(int n) {
  const auto ladder = bright_ladder(n);
  Matrix b(hilbert_dim(n), n + 1);
  for (int k = 0; k <= n; ++k) b.col(k) = ladder[k].amplitudes();
  return b;
}

Operator bright_projector(int n) {
  const Matrix b = bright_ladder_matrix(n);
  return Operator{n, b * b.adjoint()};
}

Operator subradiant_projector(int n) {
  const auto dim = hilbert_dim(n);
  Operator p = bright_projector(n);
  p.matrix = Matrix::Identity(dim, dim) - p.matrix;
  return p;
}

double subradiant_population(const Matrix& rho, const Matrix& ladder) {
  const double bright = (ladder.adjoint() * rho * ladder).trace().real();
  return rho.trace().real() - bright;
}

double subradiant_population(const Vector& psi, const Matrix& ladder) {
  return psi.squaredNorm() - (ladder.adjoint() * psi).squaredNorm();
}

Operator total_spin_squared(int n) {
  SparseMatrix sx(hilbert_dim(n), hilbert_dim(n)), sy = sx, sz = sx;
  for (int s = 1; s <= n; ++s) {
    sx += embed_site_sparse(0.5 * pauli::x(), s, n);
    sy += embed_site_sparse(0.5 * pauli::y(), s, n);
    sz += embed_site_sparse(0.5 * pauli::z(), s, n);
  }
  const SparseMatrix s2 = sx * sx + sy * sy + sz * sz;
  return Operator{n, Matrix(s2)};
}

JSpectrum j_spectrum(int n) {
  if (n < 1) throw InvalidArgument("j_spectrum needs n >= 1");
  const Operator s2 = total_spin_squared(n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s2.matrix);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("S^2 diagonalization", "eigen solver did not converge");
  }
  JSpectrum spectrum{n, {}};
  for (int two_j = n; two_j >= 0; two_j -= 2) {
    spectrum.sectors.push_back({two_j, degeneracy(n, two_j), 0, Operator{n, Matrix()}});
  }
  std::vector<std::vector<Eigen::Index>> members(spectrum.sectors.size());
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lambda = es.eigenvalues()(k);
    const int two_j = static_cast<int>(std::lround(std::sqrt(1.0 + 4.0 * std::max(lambda, 0.0)) - 1.0));
    const double j = 0.5 * two_j;
    if (std::abs(lambda - j * (j + 1.0)) > 1e-6 || two_j > n || (n - two_j) % 2 != 0) {
      throw NumericalFailure("S^2 eigenvalue matching",
                             "eigenvalue " + std::to_string(lambda) + " is not J(J+1)");
    }
    members[(n - two_j) / 2].push_back(k);
  }
  for (std::size_t s = 0; s < spectrum.sectors.size(); ++s) {
    auto& sector = spectrum.sectors[s];
    Matrix v(es.eigenvectors().rows(), static_cast<Eigen::Index>(members[s].size()));
    for (std::size_t c = 0; c < members[s].size(); ++c) {
      v.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(members[s][c]);
    }
    sector.rank = static_cast<int>(members[s].size());
    sector.projector.matrix = v * v.adjoint();
  }
  return spectrum;
}

std::vector<double> sector_populations(const Matrix& rho, const JSpectrum& spectrum) {
  std::vector<double> pops;
  pops.reserve(spectrum.sectors.size());
  for (const auto& sector : spectrum.sectors) {
    pops.push_back((sector.projector.matrix * rho).trace().real());
  }
  return pops;
}

StateVector dark_state(int n, int measured_site) {
  if (n < 2) throw InvalidArgument("dark state needs n >= 2");
  if (measured_site < 1 || measured_site > n) throw InvalidArgument("measured site out of range");
  // (n-1)|e>_1|G> - sum_{j>1} |e>_j|G>, normalized.
  Vector psi = Vector::Zero(hilbert_dim(n));
  const auto ground = hilbert_dim(n) - 1;
  psi(ground & ~site_mask(1, n)) = static_cast<double>(n - 1);
  for (int j = 2; j <= n; ++j) psi(ground & ~site_mask(j, n)) = -1.0;
  psi.normalize();
  if (measured_site != 1) {
    std::vector<int> perm(n);
    for (int s = 1; s <= n; ++s) perm[s - 1] = s;
    std::swap(perm[0], perm[measured_site - 1]);
    psi = permute_sites(psi, n, perm);
  }
  return StateVector(n, std::move(psi));
}

std::pair<double, double> cg_split_coeffs(int n, int k) {
  if (n < 1 || k < 0 || k > n) throw InvalidArgument("cg_split_coeffs needs 0 <= k <= n");
  return {std::sqrt(static_cast<double>(n - k) / n), std::sqrt(static_cast<double>(k) / n)};
}

double half_chain_entropy_dark(int n) {
  if (n < 2) throw InvalidArgument("half-chain entropy needs n >= 2");
  const double size = n;
  const double n_a = std::ceil(size / 2.0);
  const double n_b = size - n_a;
  const double p = 0.5 * (1.0 + (n_a - 1.0) / (size - 1.0));
  const double q = n_b / (2.0 * (size - 1.0));
  auto term = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
  return term(p) + term(q);
}

}  // namespace subrad
