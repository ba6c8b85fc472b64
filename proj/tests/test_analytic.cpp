#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "doctest.h"
#include "subrad/analytic.hpp"

using namespace subrad;

namespace {

// Waiting-time distribution from the matrix exponential of the rate matrix.
RealVector expm_oracle(int n, double t) {
  RealMatrix a = RealMatrix::Zero(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    const double rate = static_cast<double>(n - k) * (k + 1);
    a(k, k) = -rate;
    if (k < n) a(k + 1, k) = rate;
  }
  const RealMatrix e = (a * t).exp();
  return e.col(0);
}

double psub_z_two(double t) { return t * std::exp(-2.0 * t); }

double psub_z_three(double t) {
  return 4.0 / 3.0 * std::exp(-4.0 * t) * (3.0 + std::exp(t) * (-3.0 + 4.0 * t));
}

}  // namespace

TEST_CASE("rates") {
  CHECK(waiting_rate(4, 0) == 4.0);
  CHECK(waiting_rate(4, 1) == 6.0);
  CHECK(waiting_rate(4, 3) == 4.0);
  CHECK(waiting_rate(4, 4) == 0.0);
}

TEST_CASE("waiting distribution closed forms") {
  for (auto method : {WaitingMethod::Ode, WaitingMethod::ExactIlt}) {
    for (double t : {0.0, 0.05, 0.5, 2.0}) {
      for (int n = 1; n <= 8; ++n) {
        CHECK(waiting_dist(n, t, method)(0) == doctest::Approx(std::exp(-n * t)).epsilon(1e-9));
      }
      CHECK(waiting_dist(2, t, method)(1) ==
            doctest::Approx(2.0 * t * std::exp(-2.0 * t)).epsilon(1e-9));
    }
    const RealVector late = waiting_dist(5, 40.0, method);
    CHECK(late(5) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(late.head(5).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("ODE and residue sum agree with the matrix exponential") {
  for (int n = 1; n <= 10; ++n) {
    for (double t : {0.01, 0.1, 0.3, 1.0, 3.0}) {
      const RealVector ref = expm_oracle(n, t);
      const RealVector ode = waiting_dist(n, t, WaitingMethod::Ode);
      CHECK((ode - ref).cwiseAbs().maxCoeff() < 1e-8);
      const RealVector ilt = waiting_dist(n, t, WaitingMethod::ExactIlt);
      CHECK((ilt - ref).cwiseAbs().maxCoeff() < 1e-7);
      if (n <= 8) CHECK((ode - ilt).cwiseAbs().maxCoeff() < 1e-7);
    }
  }
  CHECK_THROWS_AS(waiting_dist(13, 0.1, WaitingMethod::ExactIlt), InvalidArgument);
  CHECK_NOTHROW(waiting_dist(40, 0.1, WaitingMethod::Ode));
  CHECK_THROWS_AS(waiting_dist(3, -0.1), InvalidArgument);
  CHECK(waiting_method_from_string("exact_ilt") == WaitingMethod::ExactIlt);
  CHECK_THROWS_AS(waiting_method_from_string("laplace"), InvalidArgument);
}

TEST_CASE("waiting distribution is normalized and non-negative") {
  for (int n = 1; n <= 10; ++n) {
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
      const RealVector p = waiting_dist(n, t);
      CHECK(std::abs(p.sum() - 1.0) < 1e-9);
      CHECK(p.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("first and last populations are monotone") {
  for (int n = 2; n <= 8; ++n) {
    double prev_first = 2.0, prev_last = -1.0;
    for (int i = 0; i <= 40; ++i) {
      const RealVector p = waiting_dist(n, 0.1 * i);
      CHECK(p(0) < prev_first);
      CHECK(p(n) > prev_last);
      prev_first = p(0);
      prev_last = p(n);
    }
  }
}

TEST_CASE("back-action functions") {
  CHECK(f_z(4, 0) == 0.0);
  CHECK(f_z(4, 4) == 0.0);
  CHECK(f_z(4, 2) == 0.5);
  CHECK(f_x(4, 0) == doctest::Approx(0.375));
  for (int n = 1; n <= 20; ++n) {
    for (int k = 0; k <= n; ++k) {
      CHECK(f_z(n, k) >= 0.0);
      CHECK(f_z(n, k) <= 0.5);
      CHECK(f_x(n, k) + 0.5 * f_z(n, k) == doctest::Approx((n - 1.0) / (2.0 * n)));
      CHECK(f_mu(Observable::X, n, k) == f_x(n, k));
    }
  }
  CHECK_THROWS_AS(f_z(3, 4), InvalidArgument);
  CHECK_THROWS_AS(f_x(3, -1), InvalidArgument);
}

TEST_CASE("steady subradiant population closed forms") {
  for (double t : {0.0, 0.1, 0.5, 1.0, 2.5}) {
    CHECK(std::abs(psub_ss(2, Observable::Z, t) - psub_z_two(t)) < 1e-10);
    CHECK(std::abs(psub_ss(3, Observable::Z, t) - psub_z_three(t)) < 1e-10);
    CHECK(std::abs(psub_ss(3, Observable::Z, t, WaitingMethod::ExactIlt) - psub_z_three(t)) < 1e-10);
  }
  CHECK(psub_ss(2, Observable::Z, 0.5) == doctest::Approx(1.0 / (2.0 * std::exp(1.0))));
  for (int n = 2; n <= 30; ++n) {
    CHECK(psub_ss(n, Observable::X, 0.0) == (n - 1.0) / (2.0 * n));
  }
}

TEST_CASE("reciprocity") {
  CHECK(std::abs(reciprocity_residual(2, 0.5)) < 1e-12);
  CHECK(std::abs(reciprocity_residual(8, optimal_tm_z(8))) < 1e-10);
  CHECK(psub_ss(2, Observable::X, 0.0) == 0.25);
  CHECK(psub_ss(2, Observable::Z, 0.0) == 0.0);
  for (int n = 2; n <= 10; ++n) {
    for (int i = 0; i < 20; ++i) {
      const double t = std::pow(10.0, -2.0 + 3.0 * i / 19.0);
      CHECK(std::abs(reciprocity_residual(n, t)) < 1e-10);
    }
  }
}

TEST_CASE("optimal measurement time") {
  CHECK(optimal_tm_z(2) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(std::abs(optimal_tm_z(2) - 0.5) < 1e-5);
  double prev = 1e9;
  std::vector<double> scaled;
  for (int n : {8, 16, 32, 64}) {
    const double t = optimal_tm_z(n);
    CHECK(t < prev);
    prev = t;
    scaled.push_back(t * n / std::log(n));
  }
  const auto [lo, hi] = std::minmax_element(scaled.begin(), scaled.end());
  CHECK(*hi / *lo < 3.0);
  for (int n = 2; n <= 64; ++n) {
    const double t = optimal_tm_z(n);
    const double peak = psub_ss(n, Observable::Z, t);
    CHECK(peak < 0.42);
    CHECK(peak >= psub_ss(n, Observable::Z, t * 1.01));
    CHECK(peak >= psub_ss(n, Observable::Z, t * 0.99));
  }
  CHECK_THROWS_AS(optimal_tm_z(1), InvalidArgument);
}

TEST_CASE("steady-state entropy") {
  CHECK(entropy_ss(4, 0.0) == 0.0);
  CHECK(entropy_ss(4, 1.0) ==
        doctest::Approx(-(8.0 / 12) * std::log(8.0 / 12) - (4.0 / 12) * std::log(4.0 / 12)));
  CHECK(entropy_ss(4, 1.0) == doctest::Approx(0.63651).epsilon(1e-5));
  CHECK(entropy_ss(2, 0.5) == doctest::Approx(0.5 * std::log(2.0)));
  CHECK(entropy_ss(100000, 1.0) ==
        doctest::Approx(2.0 * std::log(2.0) - 0.75 * std::log(3.0)).epsilon(1e-4));
  CHECK(entropy_ss(6, 0.3) == doctest::Approx(0.3 * entropy_ss(6, 1.0)));
  CHECK_THROWS_AS(entropy_ss(5, 0.5), InvalidArgument);
  CHECK_THROWS_AS(entropy_ss(4, 1.5), InvalidArgument);
}
