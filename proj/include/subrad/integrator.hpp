#pragma once

// Embedded Dormand-Prince 5(4) integrator for linear matrix/vector ODEs.

#include <algorithm>
#include <cmath>
#include <functional>

#include "subrad/types.hpp"

namespace subrad {

/// Integration and steady-state settings. Times in 1/gamma0.
struct EvolutionConfig {
  double dt_max = 1.0;
  double rtol = 1e-8;
  double atol = 1e-10;
  double t_horizon = 50.0;
  double steady_eps = 1e-8;
  double dt_initial = 1e-3;
  /// Divide the density matrix by its trace after each accepted step.
  bool renormalize_trace = true;

  void validate() const {
    if (!(dt_max > 0 && rtol > 0 && atol > 0 && t_horizon > 0 && steady_eps > 0 &&
          dt_initial > 0)) {
      throw InvalidArgument("evolution settings must all be positive");
    }
  }
};

inline constexpr double kMinStep = 1e-12;

template <class State>
class DormandPrince {
 public:
  /// Rescales the state after an accepted step and returns the factor used.
  /// Only valid for linear right-hand sides.
  using Normalizer = std::function<double(State&)>;

  explicit DormandPrince(const EvolutionConfig& cfg, Normalizer normalizer = {})
      : cfg_(cfg), normalizer_(std::move(normalizer)), h_(std::min(cfg.dt_initial, cfg.dt_max)) {
    cfg_.validate();
  }

  std::size_t accepted() const { return accepted_; }
  std::size_t rejected() const { return rejected_; }
  std::size_t rhs_calls() const { return rhs_calls_; }
  double suggested_step() const { return h_; }

  /// One error-controlled step from t, never past t_end. Returns the step taken.
  template <class Rhs>
  double step(State& y, double t, double t_end, Rhs&& f) {
    if (!(t_end > t)) return 0.0;
    prime(y, f);
    bool clipped = false;
    double h = h_;
    if (t + h >= t_end) {
      h = t_end - t;
      clipped = true;
    }
    while (true) {
      if (h < kMinStep && !clipped) {
        throw NumericalFailure("step underflow",
                               "step size " + std::to_string(h) + " at t = " + std::to_string(t));
      }
      const double err = attempt(y, h, f);
      if (err <= 1.0) {
        const double grow = err > 0.0 ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0) : 5.0;
        const double proposal = std::min(cfg_.dt_max, h * grow);
        h_ = clipped ? std::max(h_, proposal) : proposal;
        y.swap(y_new_);
        k1_.swap(k7_);
        if (normalizer_) {
          const double factor = normalizer_(y);
          if (factor != 1.0) k1_ *= factor;
        }
        y_cached_ = y;
        fsal_ = true;
        ++accepted_;
        return h;
      }
      ++rejected_;
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
      clipped = false;
      h_ = h;
    }
  }

  /// Integrates y from t0 to t1.
  template <class Rhs>
  void integrate(State& y, double t0, double t1, Rhs&& f) {
    double t = t0;
    while (t < t1) {
      const double h = step(y, t, t1, f);
      t = (t1 - (t + h) <= 1e-14 * std::max(1.0, std::abs(t1))) ? t1 : t + h;
    }
  }

  /// Fifth-order step of fixed size h from y into out, without error control.
  template <class Rhs>
  void single_step(const State& y, double h, Rhs&& f, State& out) {
    eval(f, y, k1_);
    fsal_ = false;
    stages(y, h, f);
    out = y_new_;
  }

  /// Drops the cached derivative; call after modifying the state externally.
  void invalidate() { fsal_ = false; }

 private:
  template <class Rhs>
  void eval(Rhs& f, const State& y, State& out) {
    f(y, out);
    ++rhs_calls_;
  }

  template <class Rhs>
  void prime(const State& y, Rhs& f) {
    if (fsal_ && y.rows() == y_cached_.rows() && y.cols() == y_cached_.cols() && y == y_cached_) {
      return;
    }
    eval(f, y, k1_);
    fsal_ = true;
    y_cached_ = y;
  }

  template <class Rhs>
  void stages(const State& y, double h, Rhs& f) {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                            a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    tmp_ = y + (h * a21) * k1_;
    eval(f, tmp_, k2_);
    tmp_ = y + h * (a31 * k1_ + a32 * k2_);
    eval(f, tmp_, k3_);
    tmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    eval(f, tmp_, k4_);
    tmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    eval(f, tmp_, k5_);
    tmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    eval(f, tmp_, k6_);
    y_new_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
  }

  template <class Rhs>
  double attempt(const State& y, double h, Rhs& f) {
    static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                            e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    stages(y, h, f);
    eval(f, y_new_, k7_);
    tmp_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
    const auto scale =
        (cfg_.atol + cfg_.rtol * y.array().abs().max(y_new_.array().abs())).eval();
    const double err = (tmp_.array().abs() / scale).maxCoeff();
    if (!std::isfinite(err)) {
      throw NumericalFailure("finite state", "non-finite value during integration");
    }
    return err;
  }

  EvolutionConfig cfg_;
  Normalizer normalizer_;
  double h_;
  bool fsal_ = false;
  std::size_t accepted_ = 0, rejected_ = 0, rhs_calls_ = 0;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_, y_cached_;
};

}  // namespace subrad
