#include <cmath>

#include "doctest.h"
#include "subrad/analytic.hpp"
#include "subrad/protocols.hpp"

using namespace subrad;

namespace {

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) v[i] = a + (b - a) * i / (count - 1);
  return v;
}

}  // namespace

TEST_CASE("measurement branches") {
  const Matrix top = DensityMatrix::pure(StateVector::all_excited(2)).matrix();
  const auto z = apply_measurement_branches(top, 2, 1, Observable::Z);
  REQUIRE(z.size() == 1);
  CHECK(z[0].outcome == 1);
  CHECK(z[0].probability == doctest::Approx(1.0));
  CHECK((z[0].rho - top).norm() < 1e-15);

  for (int n = 2; n <= 5; ++n) {
    const auto ladder = bright_ladder(n);
    for (int k = 0; k <= n; ++k) {
      const Matrix rho = DensityMatrix::pure(ladder[k]).matrix();
      const double m = 0.5 * n - k;
      double p_plus = 0.0, p_minus = 0.0;
      for (const auto& b : apply_measurement_branches(rho, n, 2, Observable::Z)) {
        (b.outcome > 0 ? p_plus : p_minus) = b.probability;
      }
      CHECK(p_plus == doctest::Approx((0.5 * n + m) / n));
      CHECK(p_minus == doctest::Approx((0.5 * n - m) / n));
      const auto x = apply_measurement_branches(rho, n, 1, Observable::X);
      REQUIRE(x.size() == 2);
      CHECK(x[0].probability == doctest::Approx(0.5));
      CHECK(x[1].probability == doctest::Approx(0.5));
    }
  }
}

TEST_CASE("branches reconstruct the nonselective state") {
  const auto model = build_couplings(WaveguideGeometry{0.3}, 3);
  const auto rho = evolve_master(DensityMatrix::pure(StateVector::all_excited(3)), model, 0.4);
  for (auto obs : {Observable::X, Observable::Z}) {
    const auto branches = apply_measurement_branches(rho.matrix(), 3, 2, obs);
    double total = 0.0;
    Matrix mix = Matrix::Zero(8, 8);
    for (const auto& b : branches) {
      total += b.probability;
      mix += b.probability * b.rho;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    const Matrix ns = nonselective_measure(rho.matrix(), 3, 2, obs);
    CHECK((mix - ns).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(ns.trace() - 1.0) < 1e-10);
    CHECK((ns - ns.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("single measurement closed forms") {
  const auto r = single_measurement_pse(2, Observable::Z, 0.5);
  CHECK(r.psub_ss == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(1e-6));
  for (int n = 2; n <= 6; ++n) {
    CHECK(std::abs(single_measurement_pse(n, Observable::Z, 0.0).psub_ss) < 1e-9);
    CHECK(single_measurement_pse(n, Observable::X, 0.0).psub_ss ==
          doctest::Approx(0.5 - 0.5 / n).epsilon(1e-8));
  }
  CHECK(single_measurement_pse(4, Observable::X, 0.0, PseBackend::Full).psub_ss ==
        doctest::Approx(0.375).epsilon(1e-8));
  CHECK_THROWS_AS(single_measurement_pse(1, Observable::X, 0.1), InvalidArgument);
}

TEST_CASE("reduced and full backends agree") {
  for (int n = 2; n <= 7; ++n) {
    for (auto obs : {Observable::X, Observable::Z}) {
      for (double t : {0.01, 0.1, optimal_tm_z(n), 1.0, 3.0}) {
        CHECK_NOTHROW(single_measurement_pse_checked(n, obs, t));
      }
    }
  }
}

TEST_CASE("numerical single measurement matches the convolution") {
  for (int n = 2; n <= 8; ++n) {
    for (double t : {0.01, 0.1, optimal_tm_z(n), 1.0, 3.0}) {
      const double x = single_measurement_pse(n, Observable::X, t).psub_ss;
      const double z = single_measurement_pse(n, Observable::Z, t).psub_ss;
      CHECK(std::abs(x - psub_ss(n, Observable::X, t)) < 1e-4);
      CHECK(std::abs(z - psub_ss(n, Observable::Z, t)) < 1e-4);
      CHECK(std::abs(x + 0.5 * z - (n - 1.0) / (2.0 * n)) < 1e-4);
    }
  }
}

TEST_CASE("lifetime") {
  const auto independent = build_couplings(WaveguideGeometry{0.25}, 2);
  const auto free = lifetime_t_sub(independent, Observable::X, std::nullopt);
  CHECK(free.ratio == 1.0);
  CHECK(std::abs(free.t_sub_unmeasured + std::log(0.05)) < 1e-3);
  CHECK_FALSE(free.lower_bound);

  const auto wg = build_couplings(WaveguideGeometry{0.1}, 6);
  const auto measured = lifetime_t_sub(wg, Observable::X, 0.3);
  CHECK(measured.ratio > 1.0);

  const auto pse = build_couplings(PseGeometry{}, 3);
  const auto trapped = lifetime_t_sub(pse, Observable::X, 0.0, 1, 20.0);
  CHECK(trapped.lower_bound);
  CHECK(trapped.t_sub == 20.0);
}

TEST_CASE("sampled and nonselective density engines agree on linear observables") {
  const auto model = build_couplings(WaveguideGeometry{0.34}, 4);
  MeasurementSchedule schedule{2, Observable::X, MeasurementSchedule::Periodic{0.25, 4.0}};
  const auto times = linspace(0.0, 2.0, 5);
  RunOptions opts;
  opts.n_samples = 1000;
  opts.base_seed = 3;
  const auto exact =
      repeated_measurement_run(model, schedule, Engine::DensityNonselective, 2.0, times, opts);
  const auto sampled =
      repeated_measurement_run(model, schedule, Engine::DensitySampled, 2.0, times, opts);
  for (const char* name : {"P_sub", "P_sub_rest", "n_exc", "n_exc_rest"}) {
    const auto c = exact.column(name);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(times.size()); ++i) {
      CHECK(std::abs(sampled.stats.mean(i, c) - exact.stats.mean(i, c)) <=
            3.0 * sampled.stats.stderr_(i, c) + 1e-9);
    }
  }
  CHECK_THROWS_AS(exact.column("fidelity"), InvalidArgument);
}

TEST_CASE("without further measurements the rest population decays") {
  const auto model = build_couplings(WaveguideGeometry{0.34}, 4);
  MeasurementSchedule once{2, Observable::X, MeasurementSchedule::Discrete{{0.25}}};
  const auto r = repeated_measurement_run(model, once, Engine::DensityNonselective, 60.0,
                                          {1.0, 60.0});
  const auto c = r.column("P_sub_rest");
  CHECK(r.stats.mean(1, c) < 0.2 * r.stats.mean(0, c) + 1e-6);
  CHECK(r.stats.mean(1, r.column("n_exc")) < 0.05);
}

TEST_CASE("repeated measurements of a symmetric ensemble keep J >= n/2 - 1") {
  const int n = 4;
  const auto model = build_couplings(PseGeometry{}, n);
  const LindbladGenerator gen(model);
  const auto spectrum = j_spectrum(n);
  Matrix rho = DensityMatrix::pure(StateVector::all_excited(n)).matrix();
  MasterEvolver evolver(gen, EvolutionConfig{});
  double t = 0.0;
  for (int k = 0; k < 10; ++k) {
    evolver.evolve(rho, t, t + 0.2);
    t += 0.2;
    rho = nonselective_measure(rho, n, 1, k % 2 ? Observable::X : Observable::Z);
  }
  const auto pops = sector_populations(rho, spectrum);
  for (std::size_t s = 2; s < pops.size(); ++s) CHECK(std::abs(pops[s]) < 1e-8);
}

TEST_CASE("drive runs") {
  const auto model = build_couplings(WaveguideGeometry{0.34}, 3);
  const std::vector<double> times{0.5, 2.0};
  RunOptions opts;
  opts.n_samples = 1;
  const auto undriven = strong_drive_run(model, 2, 0.0, 2.0, times, opts, Engine::DensityNonselective);
  MeasurementSchedule none{2, Observable::X, MeasurementSchedule::Discrete{}};
  const auto free =
      repeated_measurement_run(model, none, Engine::DensityNonselective, 2.0, times, opts);
  CHECK((undriven.stats.mean - free.stats.mean).cwiseAbs().maxCoeff() < 1e-12);

  const auto driven = strong_drive_run(model, 2, 10.0, 2.0, times, opts, Engine::DensityNonselective);
  CHECK(driven.stats.mean(1, driven.column("n_exc")) > 0.1);
  CHECK_THROWS_AS(strong_drive_run(model, 2, -1.0, 2.0, times), InvalidArgument);
}

TEST_CASE("mcwf engine agrees with the nonselective engine") {
  const auto model = build_couplings(WaveguideGeometry{0.34}, 3);
  MeasurementSchedule schedule{2, Observable::X, MeasurementSchedule::Periodic{0.25, 5.0}};
  const std::vector<double> times{0.5, 1.5};
  RunOptions opts;
  opts.n_samples = 2000;
  opts.base_seed = 17;
  const auto exact =
      repeated_measurement_run(model, schedule, Engine::DensityNonselective, 1.5, times, opts);
  const auto traj = repeated_measurement_run(model, schedule, Engine::Mcwf, 1.5, times, opts);
  for (const char* name : {"P_sub", "P_sub_rest", "n_exc", "n_exc_rest"}) {
    const auto c = exact.column(name);
    for (Eigen::Index i = 0; i < 2; ++i) {
      CHECK(std::abs(traj.stats.mean(i, c) - exact.stats.mean(i, c)) <=
            3.0 * traj.stats.stderr_(i, c) + 1e-9);
    }
  }
}

TEST_CASE("double measurements") {
  const auto same = pse_double_measurement(4, Observable::Z, 0.3, 0.3, true);
  REQUIRE(same.sectors.size() == 3);
  CHECK(std::abs(same.sectors[2].population) < 1e-8);
  CHECK(same.psub_total > 0.0);
  CHECK(same.psub_single > 0.0);

  const auto diff = pse_double_measurement(4, Observable::Z, 0.3, 0.3, false);
  CHECK(diff.sectors[2].population > 1e-6);
  double total = 0.0;
  for (const auto& s : diff.sectors) total += s.population;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-8));

  // A late second measurement converges as tau grows.
  const auto late1 = pse_double_measurement(4, Observable::Z, 0.3, 30.0, true);
  const auto late2 = pse_double_measurement(4, Observable::Z, 0.3, 40.0, true);
  CHECK(std::abs(late1.psub_total - late2.psub_total) < 1e-6);
}
