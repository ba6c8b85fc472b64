#include <cmath>

#include "doctest.h"
#include "subrad/dicke.hpp"

using namespace subrad;

namespace {

// d_J = (2J+1) n! / ((n/2+J+1)! (n/2-J)!) evaluated in long double.
double degeneracy_factorial(int n, int two_j) {
  auto fact = [](int m) { return std::tgamma(static_cast<long double>(m) + 1.0L); };
  const int a = (n + two_j) / 2 + 1;
  const int b = (n - two_j) / 2;
  return static_cast<double>((two_j + 1) * fact(n) / (fact(a) * fact(b)));
}

// |e>|G> minus |g>|W> with equal weights: the state whose Schmidt weights
// reproduce the closed-form half-chain entropy.
Vector equal_weight_state(int n) {
  Vector psi = Vector::Zero(hilbert_dim(n));
  const auto ground = hilbert_dim(n) - 1;
  psi(ground & ~site_mask(1, n)) = 1.0 / std::sqrt(2.0);
  for (int j = 2; j <= n; ++j) {
    psi(ground & ~site_mask(j, n)) = -1.0 / std::sqrt(2.0 * (n - 1));
  }
  return psi;
}

std::vector<int> last_sites(int n, int count) {
  std::vector<int> s;
  for (int j = n - count + 1; j <= n; ++j) s.push_back(j);
  return s;
}

}  // namespace

TEST_CASE("degeneracy") {
  CHECK(degeneracy(3, 1) == 2);
  CHECK(degeneracy(7, 5) == 6);
  for (int n = 1; n <= 12; ++n) CHECK(degeneracy(n, n) == 1);
  CHECK_THROWS_AS(degeneracy(4, 1), InvalidArgument);
  CHECK_THROWS_AS(degeneracy(4, 6), InvalidArgument);
  for (int n = 1; n <= 12; ++n) {
    std::uint64_t total = 0;
    for (int two_j = n % 2; two_j <= n; two_j += 2) {
      total += static_cast<std::uint64_t>(two_j + 1) * degeneracy(n, two_j);
      CHECK(static_cast<double>(degeneracy(n, two_j)) ==
            doctest::Approx(degeneracy_factorial(n, two_j)));
    }
    CHECK(total == (std::uint64_t{1} << n));
  }
}

TEST_CASE("bright ladder") {
  const auto two = bright_ladder(2);
  REQUIRE(two.size() == 3);
  Vector sym = Vector::Zero(4);
  sym(1) = sym(2) = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(two[1].amplitudes().dot(sym)) - 1.0) < 1e-14);
  CHECK(std::abs(std::abs(two[2].amplitudes()(3)) - 1.0) < 1e-14);

  const auto one = bright_ladder(1);
  CHECK(std::abs(one[0].amplitudes()(0) - 1.0) < 1e-15);
  CHECK(std::abs(one[1].amplitudes()(1) - 1.0) < 1e-15);

  for (int n = 2; n <= 7; ++n) {
    const Matrix b = bright_ladder_matrix(n);
    CHECK((b.adjoint() * b - Matrix::Identity(n + 1, n + 1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(std::abs(b(hilbert_dim(n) - 1, n)) - 1.0) < 1e-12);
  }
}

TEST_CASE("bright and subradiant projectors") {
  const Matrix p_sub = subradiant_projector(2).matrix;
  Vector singlet = Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK((p_sub - singlet * singlet.adjoint()).norm() < 1e-14);
  for (int n = 2; n <= 7; ++n) {
    const Matrix pb = bright_projector(n).matrix;
    const Matrix ps = subradiant_projector(n).matrix;
    CHECK((pb * pb - pb).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((ps * ps - ps).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(pb.trace().real() == doctest::Approx(n + 1));
    CHECK(ps.trace().real() == doctest::Approx(static_cast<double>(hilbert_dim(n) - (n + 1))));
  }
  CHECK(subradiant_projector(7).matrix.trace().real() == doctest::Approx(120.0));
}

TEST_CASE("subradiant population of states and density matrices agree") {
  const Matrix ladder = bright_ladder_matrix(4);
  const Vector psi = dark_state(4).amplitudes();
  CHECK(subradiant_population(psi, ladder) == doctest::Approx(1.0));
  CHECK(subradiant_population(Matrix(psi * psi.adjoint()), ladder) == doctest::Approx(1.0));
  const Vector top = StateVector::all_excited(4).amplitudes();
  CHECK(std::abs(subradiant_population(top, ladder)) < 1e-14);
}

TEST_CASE("J spectrum") {
  const auto s2 = j_spectrum(2);
  REQUIRE(s2.sectors.size() == 2);
  CHECK(s2.sectors[0].two_j == 2);
  CHECK(s2.sectors[0].rank == 3);
  CHECK(s2.sectors[1].rank == 1);

  const auto s3 = j_spectrum(3);
  CHECK(s3.sectors[0].rank == 4);
  CHECK(s3.sectors[1].rank == 4);

  for (int n = 4; n <= 5; ++n) {
    for (const auto& sector : j_spectrum(n).sectors) {
      CHECK(static_cast<std::uint64_t>(sector.rank) ==
            static_cast<std::uint64_t>(sector.two_j + 1) * sector.degeneracy);
    }
  }
  for (int n = 1; n <= 8; ++n) {
    const auto spec = j_spectrum(n);
    Matrix total = Matrix::Zero(hilbert_dim(n), hilbert_dim(n));
    for (const auto& sector : spec.sectors) total += sector.projector.matrix;
    CHECK((total - Matrix::Identity(hilbert_dim(n), hilbert_dim(n))).cwiseAbs().maxCoeff() < 1e-9);
    if (n >= 2) {
      CHECK((spec.sectors[0].projector.matrix - bright_projector(n).matrix).cwiseAbs().maxCoeff() <
            1e-9);
    }
  }
}

TEST_CASE("dark state") {
  Vector singlet = Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(dark_state(2).amplitudes().dot(singlet)) - 1.0) < 1e-14);
  for (int n = 2; n <= 8; ++n) {
    const Vector psi = dark_state(n).amplitudes();
    CHECK((collective_lowering_sparse(n) * psi).norm() < 1e-12);
    CHECK(subradiant_population(psi, bright_ladder_matrix(n)) == doctest::Approx(1.0).epsilon(1e-10));
    const auto spec = j_spectrum(n);
    const double in_sector = psi.dot(spec.sectors[1].projector.matrix * psi).real();
    CHECK(in_sector == doctest::Approx(1.0).epsilon(1e-9));
  }
  const Vector moved = dark_state(4, 3).amplitudes();
  CHECK((collective_lowering_sparse(4) * moved).norm() < 1e-12);
  CHECK(std::abs(moved(hilbert_dim(4) - 1 - site_mask(3, 4))) ==
        doctest::Approx(3.0 / std::sqrt(12.0)));
}

TEST_CASE("Clebsch-Gordan split") {
  auto [a0, b0] = cg_split_coeffs(5, 0);
  CHECK(a0 == 1.0);
  CHECK(b0 == 0.0);
  auto [a, b] = cg_split_coeffs(2, 1);
  CHECK(a == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(b == doctest::Approx(1.0 / std::sqrt(2.0)));
  for (int n = 2; n <= 6; ++n) {
    const auto full = bright_ladder(n);
    const auto rest = bright_ladder(n - 1);
    for (int k = 0; k <= n; ++k) {
      const auto [ca, cb] = cg_split_coeffs(n, k);
      CHECK(ca * ca + cb * cb == doctest::Approx(1.0));
      Vector built = Vector::Zero(hilbert_dim(n));
      const auto half = hilbert_dim(n - 1);
      if (k < n) built.head(half) = ca * rest[k].amplitudes();
      if (k > 0) built.tail(half) = cb * rest[k - 1].amplitudes();
      CHECK((built - full[k].amplitudes()).norm() < 1e-10);
    }
  }
}

TEST_CASE("closed-form half-chain entropy") {
  CHECK(half_chain_entropy_dark(2) == doctest::Approx(std::log(2.0)));
  CHECK(half_chain_entropy_dark(4) == doctest::Approx(0.63651416829481278));
  CHECK(half_chain_entropy_dark(4000) ==
        doctest::Approx(2.0 * std::log(2.0) - 0.75 * std::log(3.0)).epsilon(1e-3));
  // n = 2: the reduced state of the singlet gives log 2.
  const Vector singlet = dark_state(2).amplitudes();
  CHECK(von_neumann_entropy(partial_trace(singlet * singlet.adjoint(), 2, {2})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (int n : {4, 6}) {
    const Vector psi = equal_weight_state(n);
    const double brute =
        von_neumann_entropy(partial_trace(psi * psi.adjoint(), n, last_sites(n, n / 2)));
    CHECK(std::abs(brute - half_chain_entropy_dark(n)) < 1e-9);
    // The exact dark state carries less entanglement across the same cut.
    const Vector dark = dark_state(n).amplitudes();
    const double dark_entropy =
        von_neumann_entropy(partial_trace(dark * dark.adjoint(), n, last_sites(n, n / 2)));
    CHECK(dark_entropy < half_chain_entropy_dark(n) - 0.05);
  }
}
