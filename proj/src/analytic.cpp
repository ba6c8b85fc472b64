#include "subrad/analytic.hpp"

#include <cmath>
#include <map>
#include <vector>

#include "subrad/integrator.hpp"

namespace subrad {

std::string to_string(WaitingMethod m) { return m == WaitingMethod::Ode ? "ode" : "exact_ilt"; }

WaitingMethod waiting_method_from_string(const std::string& s) {
  if (s == "ode") return WaitingMethod::Ode;
  if (s == "exact_ilt") return WaitingMethod::ExactIlt;
  throw InvalidArgument("unknown waiting-time method '" + s + "'");
}

double waiting_rate(int n, int k) { return static_cast<double>(n - k) * (k + 1); }

namespace {

void check_n(int n) {
  if (n < 1) throw InvalidArgument("need n >= 1");
}

RealVector waiting_ode(int n, double t) {
  RealVector p = RealVector::Zero(n + 1);
  p(0) = 1.0;
  if (t == 0.0) return p;
  RealVector rates(n + 1);
  for (int k = 0; k <= n; ++k) rates(k) = waiting_rate(n, k);
  EvolutionConfig cfg;
  cfg.rtol = 1e-10;
  cfg.atol = 1e-14;
  cfg.dt_max = 10.0;
  cfg.dt_initial = 1e-4;
  DormandPrince<RealVector> stepper(cfg);
  stepper.integrate(p, 0.0, t, [&](const RealVector& y, RealVector& dy) {
    dy.resize(y.size());
    dy(0) = -rates(0) * y(0);
    for (int k = 1; k <= n; ++k) dy(k) = -rates(k) * y(k) + rates(k - 1) * y(k - 1);
  });
  return p;
}

double waiting_ilt(int n, int k, double t) {
  if (k == 0) return std::exp(-static_cast<double>(n) * t);
  // Prefactor prod_{j<k} lambda_j = k! n! / (n-k)!.
  long double prefactor = 1.0L;
  for (int j = 0; j < k; ++j) prefactor *= static_cast<long double>(waiting_rate(n, j));
  std::map<long, int> poles;
  for (int j = 0; j <= k; ++j) ++poles[static_cast<long>(waiting_rate(n, j))];
  long double total = 0.0L;
  for (const auto& [lambda, mult] : poles) {
    long double inv_prod = 1.0L, inv_sum = 0.0L;
    for (const auto& [other, m] : poles) {
      if (other == lambda) continue;
      const long double diff = static_cast<long double>(other - lambda);
      for (int r = 0; r < m; ++r) {
        inv_prod /= diff;
        inv_sum += 1.0L / diff;
      }
    }
    const long double decay = std::exp(-static_cast<long double>(lambda) * t);
    if (mult == 1) {
      total += inv_prod * decay;
    } else {
      total += (inv_prod * t - inv_prod * inv_sum) * decay;
    }
  }
  return static_cast<double>(prefactor * total);
}

}  // namespace

RealVector waiting_dist(int n, double t, WaitingMethod method) {
  check_n(n);
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("time must be finite and >= 0");
  if (method == WaitingMethod::Ode) return waiting_ode(n, t);
  if (n > 12) {
    throw InvalidArgument("exact_ilt is limited to n <= 12; the residue sum cancels catastrophically");
  }
  RealVector p(n + 1);
  for (int k = 0; k <= n; ++k) p(k) = waiting_ilt(n, k, t);
  return p;
}

double f_z(int n, int k) {
  check_n(n);
  if (k < 0 || k > n) throw InvalidArgument("need 0 <= k <= n");
  const long long nn = n;
  return static_cast<double>(2LL * k * (nn - k)) / static_cast<double>(nn * nn);
}

double f_x(int n, int k) {
  check_n(n);
  if (k < 0 || k > n) throw InvalidArgument("need 0 <= k <= n");
  // Integer numerator and denominator, so the result is correctly rounded.
  const long long nn = n;
  const long long d = nn - 2LL * k;
  return static_cast<double>(nn * nn + d * d - 2LL * nn) / static_cast<double>(4LL * nn * nn);
}

double f_mu(Observable obs, int n, int k) { return obs == Observable::Z ? f_z(n, k) : f_x(n, k); }

double psub_ss(const RealVector& waiting, Observable obs) {
  const int n = static_cast<int>(waiting.size()) - 1;
  double s = 0.0;
  for (int k = 0; k <= n; ++k) s += waiting(k) * f_mu(obs, n, k);
  return s;
}

double psub_ss(int n, Observable obs, double t_m, WaitingMethod method) {
  return psub_ss(waiting_dist(n, t_m, method), obs);
}

double reciprocity_residual(int n, double t_m) {
  const RealVector p = waiting_dist(n, t_m);
  return psub_ss(p, Observable::X) + 0.5 * psub_ss(p, Observable::Z) -
         (n - 1.0) / (2.0 * n);
}

double optimal_tm_z(int n) {
  if (n < 2) throw InvalidArgument("optimal_tm_z needs n >= 2");
  auto value = [n](double t) { return psub_ss(n, Observable::Z, t); };
  // Coarse log-spaced scan, then golden-section refinement on the bracket.
  constexpr int kGrid = 121;
  const double lo_exp = -4.0, hi_exp = 1.0;
  std::vector<double> grid(kGrid), vals(kGrid);
  int best = 0;
  for (int i = 0; i < kGrid; ++i) {
    grid[i] = std::pow(10.0, lo_exp + (hi_exp - lo_exp) * i / (kGrid - 1));
    vals[i] = value(grid[i]);
    if (vals[i] > vals[best]) best = i;
  }
  double a = best > 0 ? grid[best - 1] : 0.0;
  double b = best + 1 < kGrid ? grid[best + 1] : grid[best];
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = value(c), fd = value(d);
  while (b - a > 1e-7) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = value(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = value(d);
    }
  }
  return 0.5 * (a + b);
}

double entropy_ss(int n, double psub) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("entropy_ss needs even n >= 2");
  if (!(psub >= 0.0 && psub <= 1.0)) throw InvalidArgument("psub must lie in [0, 1]");
  const double p = (3.0 * n - 4.0) / (4.0 * (n - 1.0));
  const double q = n / (4.0 * (n - 1.0));
  auto term = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
  return psub * (term(p) + term(q));
}

}  // namespace subrad
