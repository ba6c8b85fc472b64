#include <cmath>
#include <random>

#include "doctest.h"
#include "subrad/qops.hpp"

using namespace subrad;

namespace {

Matrix2 random_op(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix2 m;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) m(r, c) = Complex(g(rng), g(rng));
  return m;
}

Matrix2 random_unitary(std::mt19937_64& rng) {
  Eigen::HouseholderQR<Matrix2> qr(random_op(rng));
  return qr.householderQ();
}

Vector random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector v(hilbert_dim(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return v.normalized();
}

Vector basis(int n, std::int64_t index) {
  Vector v = Vector::Zero(hilbert_dim(n));
  v(index) = 1.0;
  return v;
}

}  // namespace

TEST_CASE("embed_site_op basics") {
  CHECK(embed_site_op(pauli::identity(), 2, 3).matrix.isApprox(Matrix::Identity(8, 8)));
  const Matrix z = embed_site_op(pauli::z(), 1, 1).matrix;
  CHECK(z(0, 0).real() == doctest::Approx(1.0));
  CHECK(z(1, 1).real() == doctest::Approx(-1.0));
  // sigma^- on site 2 maps |ee> (index 0) to |eg> (index 1).
  const Vector out = embed_site_op(pauli::minus(), 2, 2).matrix * basis(2, 0);
  CHECK((out - basis(2, 1)).norm() < 1e-14);
  CHECK_THROWS_AS(embed_site_op(pauli::x(), 0, 2), InvalidArgument);
  CHECK_THROWS_AS(embed_site_op(pauli::x(), 3, 2), InvalidArgument);
  const SparseMatrix s = embed_site_sparse(pauli::y(), 2, 3);
  CHECK((Matrix(s) - embed_site_op(pauli::y(), 2, 3).matrix).norm() < 1e-15);
}

TEST_CASE("embedded operators on distinct sites commute") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = embed_site_op(random_op(rng), 1, 3).matrix;
    const Matrix b = embed_site_op(random_op(rng), 3, 3).matrix;
    CHECK((a * b - b * a).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("collective lowering") {
  const Matrix s = collective_lowering(2).matrix;
  const Vector v = s * basis(2, 0);
  CHECK(v.norm() == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(v(1) - 1.0) < 1e-15);
  CHECK(std::abs(v(2) - 1.0) < 1e-15);
  const Vector dark = (basis(2, 1) - basis(2, 2)) / std::sqrt(2.0);
  CHECK((s * dark).norm() < 1e-15);
  for (int n = 1; n <= 5; ++n) {
    Vector psi = basis(n, 0);
    const SparseMatrix sm = collective_lowering_sparse(n);
    for (int k = 0; k < n; ++k) psi = sm * psi;
    psi.normalize();
    CHECK(std::abs(std::abs(psi(hilbert_dim(n) - 1)) - 1.0) < 1e-12);
  }
}

TEST_CASE("build_couplings") {
  const auto wg = build_couplings(WaveguideGeometry{0.25}, 2);
  CHECK((wg.gamma - RealMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(wg.omega(0, 1) == doctest::Approx(0.5));
  CHECK(wg.omega(1, 0) == doctest::Approx(0.5));
  CHECK(wg.omega(0, 0) == 0.0);

  const auto pse = build_couplings(PseGeometry{}, 4);
  CHECK((pse.gamma - RealMatrix::Ones(4, 4)).norm() == 0.0);
  CHECK(pse.omega.norm() == 0.0);

  const auto limit = build_couplings(WaveguideGeometry{0.0}, 5);
  CHECK((limit.gamma - RealMatrix::Ones(5, 5)).norm() < 1e-15);
  CHECK(limit.omega.norm() < 1e-15);

  const auto scaled = build_couplings(PseGeometry{}, 3, 2.0);
  CHECK(scaled.gamma(0, 2) == doctest::Approx(2.0));
  CHECK_THROWS_AS(build_couplings(CustomGeometry{}, 3), InvalidArgument);
}

TEST_CASE("custom models are validated") {
  RealMatrix g = RealMatrix::Identity(2, 2);
  RealMatrix o = RealMatrix::Zero(2, 2);
  CHECK_NOTHROW(make_custom_model(g, o));
  RealMatrix asym = g;
  asym(0, 1) = 0.3;
  CHECK_THROWS_AS(make_custom_model(asym, o), InvalidArgument);
  RealMatrix diag_omega = o;
  diag_omega(1, 1) = 0.1;
  CHECK_THROWS_AS(make_custom_model(g, diag_omega), InvalidArgument);
}

TEST_CASE("remove_site keeps the remaining couplings") {
  const auto wg = build_couplings(WaveguideGeometry{0.34}, 5);
  const auto reduced = remove_site(wg, 2);
  CHECK(reduced.n == 4);
  CHECK(reduced.gamma(0, 1) == doctest::Approx(wg.gamma(0, 2)));
  CHECK(reduced.omega(1, 3) == doctest::Approx(wg.omega(2, 4)));
}

TEST_CASE("jump channels") {
  const auto pse = jump_channels(build_couplings(PseGeometry{}, 3));
  REQUIRE(pse.size() == 1);
  CHECK(pse[0].rate == doctest::Approx(3.0));
  CHECK(std::abs(std::abs(pse[0].coeffs.sum()) - std::sqrt(3.0)) < 1e-12);

  const auto wg2 = jump_channels(build_couplings(WaveguideGeometry{0.25}, 2));
  REQUIRE(wg2.size() == 2);
  CHECK(wg2[0].rate == doctest::Approx(1.0));
  CHECK(wg2[1].rate == doctest::Approx(1.0));

  const auto wg7 = build_couplings(WaveguideGeometry{0.34}, 7);
  const auto ch7 = jump_channels(wg7);
  CHECK(ch7.size() <= 2);
  RealMatrix rebuilt = RealMatrix::Zero(7, 7);
  double total = 0.0;
  for (const auto& c : ch7) {
    rebuilt += c.rate * c.coeffs * c.coeffs.transpose();
    total += c.rate;
  }
  CHECK((rebuilt - wg7.gamma).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(total == doctest::Approx(7.0).epsilon(1e-10));
  for (std::size_t k = 1; k < ch7.size(); ++k) CHECK(ch7[k - 1].rate >= ch7[k].rate);

  RealMatrix bad = RealMatrix::Ones(2, 2);
  bad(0, 1) = bad(1, 0) = 2.0;
  CHECK_THROWS_AS(jump_channels(make_custom_model(bad, RealMatrix::Zero(2, 2))), InvalidArgument);
}

TEST_CASE("reconstruction holds for random waveguide spacings") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + trial % 5;
    const auto model = build_couplings(WaveguideGeometry{d(rng)}, n);
    RealMatrix rebuilt = RealMatrix::Zero(n, n);
    for (const auto& c : jump_channels(model)) rebuilt += c.rate * c.coeffs * c.coeffs.transpose();
    CHECK((rebuilt - model.gamma).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("partial trace") {
  std::mt19937_64 rng(5);
  const Vector rest = random_state(2, rng);
  Vector full(8);
  full << rest, Vector::Zero(4);  // |e> x rest
  const auto rho = DensityMatrix::pure(StateVector(3, full));
  const auto reduced = partial_trace_site(rho, 1);
  CHECK((reduced.matrix() - rest * rest.adjoint()).norm() < 1e-14);

  Vector bell = (basis(2, 0) + basis(2, 3)) / std::sqrt(2.0);
  const auto bell_rho = DensityMatrix::pure(StateVector(2, bell));
  for (int site = 1; site <= 2; ++site) {
    CHECK((partial_trace_site(bell_rho, site).matrix() - 0.5 * Matrix::Identity(2, 2)).norm() <
          1e-15);
  }

  const auto single = partial_trace_site(DensityMatrix::pure(StateVector::all_excited(1)), 1);
  CHECK(single.matrix().rows() == 1);
  CHECK(std::abs(single.matrix()(0, 0) - 1.0) < 1e-15);

  for (int trial = 0; trial < 10; ++trial) {
    const Vector psi = random_state(4, rng);
    const Matrix m = psi * psi.adjoint();
    const Matrix traced = partial_trace(m, 4, {2, 4});
    CHECK(std::abs(traced.trace() - m.trace()) < 1e-12);
  }
}

TEST_CASE("site matrix elements give the reduced block") {
  std::mt19937_64 rng(9);
  const Vector psi = random_state(3, rng);
  const Matrix rho = psi * psi.adjoint();
  Eigen::Vector2cd e(1.0, 0.0), g(0.0, 1.0);
  const Matrix sum = site_matrix_element(rho, 3, 2, e, e) + site_matrix_element(rho, 3, 2, g, g);
  CHECK((sum - partial_trace(rho, 3, {2})).norm() < 1e-14);
}

TEST_CASE("purity") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector psi = random_state(1 + trial % 4, rng);
    CHECK(purity(Matrix(psi * psi.adjoint())) == doctest::Approx(1.0).epsilon(1e-10));
  }
  CHECK(purity(DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.25));
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = d(1, 1) = 0.5;
  CHECK(purity(d) == doctest::Approx(0.5));
}

TEST_CASE("negativity") {
  std::mt19937_64 rng(2);
  const Vector a = random_state(1, rng), b = random_state(2, rng);
  Vector prod(8);
  prod << a(0) * b, a(1) * b;
  CHECK(negativity(Matrix(prod * prod.adjoint()), 3, 1) < 1e-12);

  const Vector bell = (basis(2, 0) + basis(2, 3)) / std::sqrt(2.0);
  CHECK(negativity(Matrix(bell * bell.adjoint()), 2, 1) == doctest::Approx(0.5));
  const Vector singlet = (basis(2, 1) - basis(2, 2)) / std::sqrt(2.0);
  CHECK(negativity(Matrix(singlet * singlet.adjoint()), 2, 1) == doctest::Approx(0.5));
  CHECK(default_partition_size(4) == 2);
  CHECK(default_partition_size(5) == 3);
}

TEST_CASE("negativity is invariant under local unitaries") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector psi = random_state(4, rng);
    Matrix rho = psi * psi.adjoint();
    rho = 0.7 * rho + 0.3 * Matrix::Identity(16, 16) / 16.0;
    const double before = negativity(rho, 4, 2);
    Matrix u = Matrix::Identity(16, 16);
    for (int s = 1; s <= 4; ++s) u = u * embed_site_op(random_unitary(rng), s, 4).matrix;
    const double after = negativity(Matrix(u * rho * u.adjoint()), 4, 2);
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("von Neumann entropy") {
  std::mt19937_64 rng(6);
  const Vector psi = random_state(3, rng);
  CHECK(von_neumann_entropy(Matrix(psi * psi.adjoint())) < 1e-10);
  CHECK(von_neumann_entropy(DensityMatrix::maximally_mixed(1)) == doctest::Approx(std::log(2.0)));
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.75;
  d(1, 1) = 0.25;
  CHECK(von_neumann_entropy(d) ==
        doctest::Approx(2.0 * std::log(2.0) - 0.75 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(StateVector(1, Vector::Ones(2)), InvalidArgument);
  CHECK_THROWS_AS(StateVector::normalized(2, Vector::Zero(4)), InvalidArgument);
  Matrix not_hermitian = Matrix::Identity(2, 2) * 0.5;
  not_hermitian(0, 1) = 0.1;
  CHECK_THROWS_AS(DensityMatrix(1, not_hermitian), InvalidArgument);
  CHECK_THROWS_AS(DensityMatrix(1, Matrix::Identity(2, 2)), InvalidArgument);
  Matrix negative = Matrix::Zero(2, 2);
  negative(0, 0) = 1.5;
  negative(1, 1) = -0.5;
  CHECK_FALSE(DensityMatrix(1, negative).is_positive());
  CHECK(DensityMatrix::maximally_mixed(3).is_positive());
}

TEST_CASE("excitation number and site permutation") {
  const auto counts = excitation_counts(3);
  CHECK(counts(0) == 3.0);
  CHECK(counts(7) == 0.0);
  const auto rho = DensityMatrix::pure(StateVector::product({true, false, true}));
  CHECK(excitation_number(rho.matrix(), 3) == doctest::Approx(2.0));
  const Vector psi = StateVector::product({true, false, false}).amplitudes();
  const Vector moved = permute_sites(psi, 3, {3, 2, 1});
  CHECK((moved - StateVector::product({false, false, true}).amplitudes()).norm() < 1e-15);
}
