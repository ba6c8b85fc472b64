#include "subrad/qops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace subrad {

namespace pauli {

Matrix2 identity() { return Matrix2::Identity(); }

Matrix2 x() {
  Matrix2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix2 y() {
  Matrix2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

Matrix2 z() {
  Matrix2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix2 plus() {
  Matrix2 m;
  m << 0.0, 1.0, 0.0, 0.0;
  return m;
}

Matrix2 minus() {
  Matrix2 m;
  m << 0.0, 0.0, 1.0, 0.0;
  return m;
}

Matrix2 projector(Observable obs, int sign) {
  const double s = sign > 0 ? 1.0 : -1.0;
  Matrix2 m;
  if (obs == Observable::Z) {
    m << (s > 0 ? 1.0 : 0.0), 0.0, 0.0, (s > 0 ? 0.0 : 1.0);
  } else {
    m << 0.5, 0.5 * s, 0.5 * s, 0.5;
  }
  return m;
}

}  // namespace pauli

namespace {

void check_site(int site, int n_sites) {
  if (n_sites < 1) throw InvalidArgument("number of sites must be >= 1");
  if (site < 1 || site > n_sites) {
    throw InvalidArgument("site index " + std::to_string(site) + " out of range 1.." +
                          std::to_string(n_sites));
  }
}

// Inserts bit `b` at the position of `site` into an index of the other n-1 sites.
std::int64_t insert_bit(std::int64_t reduced, int site, int n_sites, int b) {
  const int pos = n_sites - site;
  const std::int64_t low = reduced & ((std::int64_t{1} << pos) - 1);
  const std::int64_t high = (reduced >> pos) << (pos + 1);
  return high | (std::int64_t{b} << pos) | low;
}

}  // namespace

StateVector::StateVector(int n_sites, Vector amplitudes)
    : n_sites_(n_sites), amplitudes_(std::move(amplitudes)) {
  if (n_sites_ < 1) throw InvalidArgument("state needs at least one site");
  if (amplitudes_.size() != hilbert_dim(n_sites_)) {
    throw InvalidArgument("state length does not match 2^n");
  }
  if (std::abs(amplitudes_.norm() - 1.0) > 1e-12) {
    throw InvalidArgument("state is not normalized");
  }
}

StateVector StateVector::normalized(int n_sites, Vector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0)) throw InvalidArgument("cannot normalize a zero vector");
  amplitudes /= norm;
  return StateVector(n_sites, std::move(amplitudes));
}

StateVector StateVector::product(const std::vector<bool>& excited) {
  const int n = static_cast<int>(excited.size());
  std::int64_t index = 0;
  for (int s = 1; s <= n; ++s) {
    if (!excited[s - 1]) index |= site_mask(s, n);
  }
  Vector v = Vector::Zero(hilbert_dim(n));
  v(index) = 1.0;
  return StateVector(n, std::move(v));
}

StateVector StateVector::all_excited(int n_sites) {
  return product(std::vector<bool>(n_sites, true));
}

StateVector StateVector::all_ground(int n_sites) {
  return product(std::vector<bool>(n_sites, false));
}

DensityMatrix::DensityMatrix(int n_sites, Matrix matrix)
    : n_sites_(n_sites), matrix_(std::move(matrix)) {
  if (matrix_.rows() != hilbert_dim(n_sites_) || matrix_.cols() != matrix_.rows()) {
    throw InvalidArgument("density matrix shape does not match 2^n");
  }
  if ((matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
    throw InvalidArgument("density matrix is not Hermitian");
  }
  if (std::abs(matrix_.trace() - 1.0) > 1e-8) {
    throw InvalidArgument("density matrix trace differs from 1");
  }
}

DensityMatrix DensityMatrix::pure(const StateVector& psi) {
  const Vector& a = psi.amplitudes();
  return DensityMatrix(psi.n_sites(), a * a.adjoint());
}

DensityMatrix DensityMatrix::maximally_mixed(int n_sites) {
  const auto dim = hilbert_dim(n_sites);
  return DensityMatrix(n_sites, Matrix::Identity(dim, dim) / static_cast<double>(dim));
}

bool DensityMatrix::is_positive(double floor) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= floor;
}

SparseMatrix Operator::sparse(double drop) const {
  SparseMatrix s = matrix.sparseView(1.0, drop);
  s.makeCompressed();
  return s;
}

SparseMatrix embed_site_sparse(const Matrix2& op2, int site, int n_sites) {
  check_site(site, n_sites);
  const auto dim = hilbert_dim(n_sites);
  const auto mask = site_mask(site, n_sites);
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * dim));
  for (std::int64_t col = 0; col < dim; ++col) {
    const int b = (col & mask) ? 1 : 0;
    for (int a = 0; a < 2; ++a) {
      const Complex v = op2(a, b);
      if (v == Complex{}) continue;
      const std::int64_t row = (col & ~mask) | (a ? mask : 0);
      triplets.emplace_back(row, col, v);
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

Operator embed_site_op(const Matrix2& op2, int site, int n_sites) {
  return Operator{n_sites, Matrix(embed_site_sparse(op2, site, n_sites))};
}

SparseMatrix collective_lowering_sparse(int n_sites) {
  if (n_sites < 1) throw InvalidArgument("number of sites must be >= 1");
  return channel_operator(RealVector::Ones(n_sites), n_sites);
}

Operator collective_lowering(int n_sites) {
  return Operator{n_sites, Matrix(collective_lowering_sparse(n_sites))};
}

RealVector excitation_counts(int n_sites) {
  const auto dim = hilbert_dim(n_sites);
  RealVector counts(dim);
  for (std::int64_t x = 0; x < dim; ++x) {
    counts(x) = n_sites - std::popcount(static_cast<std::uint64_t>(x));
  }
  return counts;
}

double excitation_number(const Matrix& rho, int n_sites) {
  return (excitation_counts(n_sites).array() * rho.diagonal().real().array()).sum();
}

CouplingModel build_couplings(const Geometry& geometry, int n, double gamma0) {
  if (n < 1) throw InvalidArgument("number of emitters must be >= 1");
  if (!(gamma0 > 0.0)) throw InvalidArgument("gamma0 must be positive");
  CouplingModel model{n, gamma0, RealMatrix::Constant(n, n, gamma0), RealMatrix::Zero(n, n),
                      geometry};
  if (const auto* wg = std::get_if<WaveguideGeometry>(&geometry)) {
    if (wg->d_over_lambda0 < 0.0) throw InvalidArgument("spacing must be non-negative");
    const double phase = 2.0 * std::numbers::pi * wg->d_over_lambda0;
    for (int l = 0; l < n; ++l) {
      for (int m = 0; m < n; ++m) {
        if (l == m) continue;
        const double kd = phase * std::abs(l - m);
        model.gamma(l, m) = gamma0 * std::cos(kd);
        model.omega(l, m) = 0.5 * gamma0 * std::sin(kd);
      }
    }
  } else if (std::holds_alternative<CustomGeometry>(geometry)) {
    throw InvalidArgument("custom geometry needs explicit matrices; use make_custom_model");
  }
  return model;
}

CouplingModel make_custom_model(RealMatrix gamma, RealMatrix omega) {
  const auto n = gamma.rows();
  if (n < 1 || gamma.cols() != n || omega.rows() != n || omega.cols() != n) {
    throw InvalidArgument("coupling matrices must be square and of equal size");
  }
  const double gamma0 = gamma(0, 0);
  if (!(gamma0 > 0.0)) throw InvalidArgument("diagonal decay rate must be positive");
  for (Eigen::Index m = 0; m < n; ++m) {
    if (std::abs(gamma(m, m) - gamma0) > 1e-12 * gamma0) {
      throw InvalidArgument("decay matrix diagonal must be constant");
    }
    if (omega(m, m) != 0.0) throw InvalidArgument("dipole matrix diagonal must be zero");
  }
  if ((gamma - gamma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * gamma0 ||
      (omega - omega.transpose()).cwiseAbs().maxCoeff() > 1e-12 * gamma0) {
    throw InvalidArgument("coupling matrices must be symmetric");
  }
  return CouplingModel{static_cast<int>(n), gamma0, std::move(gamma), std::move(omega),
                       CustomGeometry{}};
}

CouplingModel remove_site(const CouplingModel& model, int site) {
  check_site(site, model.n);
  if (model.n < 2) throw InvalidArgument("cannot remove the only emitter");
  const int n = model.n - 1;
  CouplingModel out{n, model.gamma0, RealMatrix(n, n), RealMatrix(n, n), model.geometry};
  for (int a = 0, ra = 0; a < model.n; ++a) {
    if (a == site - 1) continue;
    for (int b = 0, rb = 0; b < model.n; ++b) {
      if (b == site - 1) continue;
      out.gamma(ra, rb) = model.gamma(a, b);
      out.omega(ra, rb) = model.omega(a, b);
      ++rb;
    }
    ++ra;
  }
  // Dropping a site breaks the translation structure of a waveguide array.
  if (std::holds_alternative<WaveguideGeometry>(out.geometry)) out.geometry = CustomGeometry{};
  return out;
}

std::string geometry_name(const Geometry& geometry) {
  if (std::holds_alternative<PseGeometry>(geometry)) return "pse";
  if (std::holds_alternative<WaveguideGeometry>(geometry)) return "waveguide";
  return "custom";
}

std::vector<JumpChannel> jump_channels(const CouplingModel& model) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(model.gamma);
  if (es.info() != Eigen::Success) {
    throw NumericalFailure("decay-matrix eigendecomposition", "solver did not converge");
  }
  const RealVector& rates = es.eigenvalues();
  if (rates.minCoeff() < -1e-8 * model.gamma0) {
    throw InvalidArgument("decay matrix has a negative eigenvalue; the model is not physical");
  }
  const double eps_rate = 1e-10 * model.gamma0;
  std::vector<JumpChannel> channels;
  for (Eigen::Index k = 0; k < rates.size(); ++k) {
    if (rates(k) > eps_rate) channels.push_back({rates(k), es.eigenvectors().col(k)});
  }
  std::sort(channels.begin(), channels.end(),
            [](const JumpChannel& a, const JumpChannel& b) { return a.rate > b.rate; });
  return channels;
}

SparseMatrix channel_operator(const RealVector& coeffs, int n_sites) {
  if (coeffs.size() != n_sites) throw InvalidArgument("channel length must equal n");
  const auto dim = hilbert_dim(n_sites);
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (std::int64_t col = 0; col < dim; ++col) {
    for (int s = 1; s <= n_sites; ++s) {
      const auto mask = site_mask(s, n_sites);
      if ((col & mask) || coeffs(s - 1) == 0.0) continue;  // site already in |g>
      triplets.emplace_back(col | mask, col, coeffs(s - 1));
    }
  }
  SparseMatrix m(dim, dim);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix interaction_hamiltonian(const CouplingModel& model) {
  const int n = model.n;
  const auto dim = hilbert_dim(n);
  std::vector<Eigen::Triplet<Complex>> triplets;
  // sigma_l^+ sigma_m^- moves an excitation from site m to site l.
  for (std::int64_t col = 0; col < dim; ++col) {
    for (int m = 1; m <= n; ++m) {
      const auto mm = site_mask(m, n);
      if (col & mm) continue;
      for (int l = 1; l <= n; ++l) {
        if (l == m || model.omega(l - 1, m - 1) == 0.0) continue;
        const auto ml = site_mask(l, n);
        if (!(col & ml)) continue;
        triplets.emplace_back((col | mm) & ~ml, col, model.omega(l - 1, m - 1));
      }
    }
  }
  SparseMatrix h(dim, dim);
  h.setFromTriplets(triplets.begin(), triplets.end());
  return h;
}

Matrix partial_trace(const Matrix& rho, int n_sites, const std::vector<int>& traced) {
  std::vector<bool> is_traced(n_sites + 1, false);
  for (int s : traced) {
    check_site(s, n_sites);
    is_traced[s] = true;
  }
  std::vector<std::int64_t> kept_masks, traced_masks;
  for (int s = 1; s <= n_sites; ++s) {
    (is_traced[s] ? traced_masks : kept_masks).push_back(site_mask(s, n_sites));
  }
  auto scatter = [](std::int64_t bits, const std::vector<std::int64_t>& masks) {
    std::int64_t out = 0;
    const auto k = static_cast<int>(masks.size());
    for (int j = 0; j < k; ++j) {
      if (bits & (std::int64_t{1} << (k - 1 - j))) out |= masks[j];
    }
    return out;
  };
  const std::int64_t dim_k = std::int64_t{1} << kept_masks.size();
  const std::int64_t dim_t = std::int64_t{1} << traced_masks.size();
  std::vector<std::int64_t> kept_index(dim_k), traced_index(dim_t);
  for (std::int64_t a = 0; a < dim_k; ++a) kept_index[a] = scatter(a, kept_masks);
  for (std::int64_t t = 0; t < dim_t; ++t) traced_index[t] = scatter(t, traced_masks);

  Matrix out = Matrix::Zero(dim_k, dim_k);
  for (std::int64_t c = 0; c < dim_k; ++c) {
    for (std::int64_t r = 0; r < dim_k; ++r) {
      Complex sum{};
      for (std::int64_t t = 0; t < dim_t; ++t) {
        sum += rho(kept_index[r] | traced_index[t], kept_index[c] | traced_index[t]);
      }
      out(r, c) = sum;
    }
  }
  return out;
}

DensityMatrix partial_trace_site(const DensityMatrix& rho, int site) {
  check_site(site, rho.n_sites());
  return DensityMatrix(rho.n_sites() - 1, partial_trace(rho.matrix(), rho.n_sites(), {site}));
}

Matrix site_matrix_element(const Matrix& rho, int n_sites, int site, const Eigen::Vector2cd& u,
                           const Eigen::Vector2cd& v) {
  check_site(site, n_sites);
  const auto dim = hilbert_dim(n_sites - 1);
  Matrix out = Matrix::Zero(dim, dim);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const Complex w = std::conj(u(a)) * v(b);
      if (w == Complex{}) continue;
      for (std::int64_t c = 0; c < dim; ++c) {
        const auto cc = insert_bit(c, site, n_sites, b);
        for (std::int64_t r = 0; r < dim; ++r) {
          out(r, c) += w * rho(insert_bit(r, site, n_sites, a), cc);
        }
      }
    }
  }
  return out;
}

Matrix partial_transpose(const Matrix& rho, int n_sites, int partition_size) {
  if (partition_size < 1 || partition_size >= n_sites) {
    throw InvalidArgument("partition size must lie in [1, n)");
  }
  const std::int64_t dim_b = std::int64_t{1} << (n_sites - partition_size);
  const std::int64_t dim_a = std::int64_t{1} << partition_size;
  Matrix out(rho.rows(), rho.cols());
  for (std::int64_t a1 = 0; a1 < dim_a; ++a1) {
    for (std::int64_t a2 = 0; a2 < dim_a; ++a2) {
      out.block(a1 * dim_b, a2 * dim_b, dim_b, dim_b) =
          rho.block(a2 * dim_b, a1 * dim_b, dim_b, dim_b);
    }
  }
  return out;
}

double purity(const Matrix& rho) {
  // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
  return rho.squaredNorm();
}

double purity(const DensityMatrix& rho) { return purity(rho.matrix()); }

int default_partition_size(int n_sites) { return (n_sites + 1) / 2; }

double negativity(const Matrix& rho, int n_sites, int partition_size) {
  const Matrix pt = partial_transpose(rho, n_sites, partition_size);
  Eigen::SelfAdjointEigenSolver<Matrix> es(pt, Eigen::EigenvaluesOnly);
  double neg = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) < 0.0) neg -= es.eigenvalues()(k);
  }
  return neg;
}

double negativity(const DensityMatrix& rho, int partition_size) {
  return negativity(rho.matrix(), rho.n_sites(), partition_size);
}

double negativity(const DensityMatrix& rho) {
  return negativity(rho, default_partition_size(rho.n_sites()));
}

double von_neumann_entropy(const Matrix& rho) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (p > 0.0) s -= p * std::log(p);
  }
  return s;
}

double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.matrix()); }

Vector permute_sites(const Vector& psi, int n_sites, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != n_sites || psi.size() != hilbert_dim(n_sites)) {
    throw InvalidArgument("permutation does not match the state size");
  }
  std::vector<bool> seen(n_sites + 1, false);
  for (int p : perm) {
    check_site(p, n_sites);
    if (seen[p]) throw InvalidArgument("site permutation has repeated entries");
    seen[p] = true;
  }
  Vector out(psi.size());
  for (std::int64_t x = 0; x < psi.size(); ++x) {
    std::int64_t y = 0;
    for (int s = 1; s <= n_sites; ++s) {
      if (x & site_mask(s, n_sites)) y |= site_mask(perm[s - 1], n_sites);
    }
    out(y) = psi(x);
  }
  return out;
}

}  // namespace subrad
