#include "subrad/protocols.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "subrad/parallel.hpp"

namespace subrad {

std::vector<Branch> apply_measurement_branches(const Matrix& rho, int n_sites, int site,
                                               Observable obs) {
  std::vector<Branch> branches;
  for (int sign : {+1, -1}) {
    const SparseMatrix p = embed_site_sparse(pauli::projector(obs, sign), site, n_sites);
    const Matrix left = p * rho;
    Matrix post = (p * left.adjoint()).adjoint();
    const double prob = post.trace().real();
    if (prob < 1e-14) continue;
    post /= prob;
    branches.push_back({sign, prob, std::move(post)});
  }
  return branches;
}

Matrix nonselective_measure(const Matrix& rho, int n_sites, int site, Observable obs) {
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (int sign : {+1, -1}) {
    const SparseMatrix p = embed_site_sparse(pauli::projector(obs, sign), site, n_sites);
    const Matrix left = p * rho;
    out += (p * left.adjoint()).adjoint();
  }
  return out;
}

namespace {

// Small dense master equation d rho = -i(H rho - rho H^+) + sum L rho L^+.
struct DenseLindblad {
  Matrix h_eff;
  std::vector<Matrix> jumps;

  void operator()(const Matrix& rho, Matrix& out) const {
    const Matrix a = (-kI) * (h_eff * rho);
    out = a + a.adjoint();
    for (const auto& l : jumps) out.noalias() += l * rho * l.adjoint();
  }
};

DenseLindblad collective_decay(const Matrix& lowering) {
  return {Complex(0.0, -0.5) * lowering.adjoint() * lowering, {lowering}};
}

// Evolves until |d n_exc/dt| < steady_eps on two consecutive steps; returns elapsed time.
double settle(Matrix& rho, const DenseLindblad& gen, const RealVector& counts,
              const EvolutionConfig& cfg) {
  DormandPrince<Matrix> stepper(cfg);
  double t = 0.0;
  int quiet = 0;
  Matrix d;
  while (t < cfg.t_horizon) {
    t += stepper.step(rho, t, cfg.t_horizon, gen);
    gen(rho, d);
    const double rate = (d.diagonal().real().array() * counts.array()).sum();
    quiet = std::abs(rate) < cfg.steady_eps ? quiet + 1 : 0;
    if (quiet >= 2) break;
  }
  return t;
}

SingleMeasurementResult single_reduced(int n, Observable obs, double t_m, const EvolutionConfig& cfg) {
  // Bright ladder of n sites, k = photons emitted.
  Matrix lower = Matrix::Zero(n + 1, n + 1);
  for (int k = 0; k < n; ++k) lower(k + 1, k) = std::sqrt(static_cast<double>(n - k) * (k + 1));
  Matrix ladder_rho = Matrix::Zero(n + 1, n + 1);
  ladder_rho(0, 0) = 1.0;
  if (t_m > 0.0) {
    DormandPrince<Matrix> stepper(cfg);
    stepper.integrate(ladder_rho, 0.0, t_m, collective_decay(lower));
  }

  // Product space {|e>, |g>} x (ladder of the other n-1 sites), index s * n + q.
  const int dim = 2 * n;
  Matrix embed = Matrix::Zero(dim, n + 1);
  for (int k = 0; k <= n; ++k) {
    const auto [a, b] = cg_split_coeffs(n, k);
    if (k < n) embed(k, k) = a;
    if (k > 0) embed(n + k - 1, k) = b;
  }
  Matrix rho = embed * ladder_rho * embed.adjoint();

  Matrix site_lower = Matrix::Zero(dim, dim);
  Matrix rest_lower = Matrix::Zero(dim, dim);
  RealVector counts(dim);
  for (int s = 0; s < 2; ++s) {
    for (int q = 0; q < n; ++q) {
      if (s == 0) site_lower(n + q, q) = 1.0;
      if (q + 1 < n) rest_lower(s * n + q + 1, s * n + q) = std::sqrt(static_cast<double>(n - 1 - q) * (q + 1));
      counts(s * n + q) = (s == 0 ? 1.0 : 0.0) + (n - 1 - q);
    }
  }

  SingleMeasurementResult result;
  Matrix measured = Matrix::Zero(dim, dim);
  for (int sign : {+1, -1}) {
    const Matrix p = Eigen::kroneckerProduct(pauli::projector(obs, sign), Matrix::Identity(n, n));
    const Matrix branch = p * rho * p;
    const double prob = branch.trace().real();
    (sign > 0 ? result.p_plus : result.p_minus) = prob;
    measured += branch;
  }
  result.settle_time = settle(measured, collective_decay(site_lower + rest_lower), counts, cfg);
  result.psub_ss = 1.0 - measured(dim - 1, dim - 1).real();
  return result;
}

SingleMeasurementResult single_full(int n, Observable obs, double t_m, const EvolutionConfig& cfg) {
  const LindbladGenerator gen(build_couplings(PseGeometry{}, n));
  Matrix rho = DensityMatrix::pure(StateVector::all_excited(n)).matrix();
  if (t_m > 0.0) MasterEvolver(gen, cfg).evolve(rho, 0.0, t_m);
  SingleMeasurementResult result;
  for (const auto& b : apply_measurement_branches(rho, n, 1, obs)) {
    (b.outcome > 0 ? result.p_plus : result.p_minus) = b.probability;
  }
  rho = nonselective_measure(rho, n, 1, obs);
  MasterEvolver settle_evolver(gen, cfg);
  result.settle_time = settle_evolver.evolve_to_steady(rho, 0.0);
  const auto ground = hilbert_dim(n) - 1;
  result.psub_ss = 1.0 - rho(ground, ground).real() / rho.trace().real();
  return result;
}

}  // namespace

SingleMeasurementResult single_measurement_pse(int n, Observable obs, double t_m, PseBackend backend,
                                               const EvolutionConfig& cfg) {
  if (n < 2) throw InvalidArgument("single_measurement_pse needs n >= 2");
  if (!(t_m >= 0.0) || !std::isfinite(t_m)) throw InvalidArgument("t_m must be finite and >= 0");
  return backend == PseBackend::Reduced ? single_reduced(n, obs, t_m, cfg)
                                        : single_full(n, obs, t_m, cfg);
}

SingleMeasurementResult single_measurement_pse_checked(int n, Observable obs, double t_m,
                                                       const EvolutionConfig& cfg) {
  const auto reduced = single_measurement_pse(n, obs, t_m, PseBackend::Reduced, cfg);
  const auto full = single_measurement_pse(n, obs, t_m, PseBackend::Full, cfg);
  const double diff = std::abs(reduced.psub_ss - full.psub_ss);
  if (diff > 1e-6) {
    throw NumericalFailure("reduced and full backends agree",
                           "difference " + std::to_string(diff) + " for n = " + std::to_string(n));
  }
  return reduced;
}

namespace {

struct Crossing {
  double time = 0.0;
  bool reached = false;
};

Crossing excitation_crossing(const LindbladGenerator& gen, Observable obs, std::optional<double> t_m,
                             int site, double horizon, const EvolutionConfig& cfg) {
  const int n = gen.n_sites();
  const RealVector counts = excitation_counts(n);
  const double threshold = 0.05 * n;
  auto n_exc = [&counts](const Matrix& rho) {
    return (rho.diagonal().real().array() * counts.array()).sum() / rho.trace().real();
  };
  MasterEvolver evolver(gen, cfg);
  Matrix rho = DensityMatrix::pure(StateVector::all_excited(n)).matrix();
  bool measured = !t_m.has_value();
  double t = 0.0;
  while (t < horizon) {
    if (!measured && *t_m <= t) {
      rho = nonselective_measure(rho, n, site, obs);
      measured = true;
    }
    const double stop = measured ? horizon : std::min(*t_m, horizon);
    const Matrix before = rho;
    const double h = evolver.step(rho, t, stop);
    if (n_exc(rho) <= threshold) {
      // <n_exc> decreases monotonically, so bisect inside the step.
      double lo = 0.0, hi = h;
      Matrix trial;
      while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        evolver.trial_step(before, mid, trial);
        (n_exc(trial) > threshold ? lo : hi) = mid;
      }
      return {t + hi, true};
    }
    t = (stop - (t + h) <= 1e-14 * std::max(1.0, stop)) ? stop : t + h;
  }
  return {horizon, false};
}

}  // namespace

LifetimeResult lifetime_t_sub(const CouplingModel& model, Observable obs, std::optional<double> t_m,
                              int site, double horizon, const EvolutionConfig& cfg) {
  if (site < 1 || site > model.n) throw InvalidArgument("measured site out of range");
  if (t_m && !(*t_m >= 0.0)) throw InvalidArgument("t_m must be non-negative");
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be positive");
  const LindbladGenerator gen(model);
  const Crossing free = excitation_crossing(gen, obs, std::nullopt, site, horizon, cfg);
  LifetimeResult result;
  result.t_sub_unmeasured = free.time;
  result.unmeasured_lower_bound = !free.reached;
  if (!t_m) {
    result.t_sub = free.time;
    result.lower_bound = !free.reached;
  } else {
    const Crossing with = excitation_crossing(gen, obs, t_m, site, horizon, cfg);
    result.t_sub = with.time;
    result.lower_bound = !with.reached;
  }
  result.ratio = result.t_sub / result.t_sub_unmeasured;
  return result;
}

std::string to_string(Engine e) {
  switch (e) {
    case Engine::DensitySampled: return "density_sampled";
    case Engine::DensityNonselective: return "density_nonselective";
    case Engine::Mcwf: return "mcwf";
  }
  return "unknown";
}

Engine engine_from_string(const std::string& s) {
  if (s == "density_sampled") return Engine::DensitySampled;
  if (s == "density_nonselective") return Engine::DensityNonselective;
  if (s == "mcwf") return Engine::Mcwf;
  throw InvalidArgument("unknown engine '" + s + "'");
}

ProtocolObservables::ProtocolObservables(int n, int s)
    : n_sites(n), site(s) {
  if (n < 2) throw InvalidArgument("observables need n >= 2");
  if (s < 1 || s > n) throw InvalidArgument("site out of range");
  ladder_ = bright_ladder_matrix(n);
  ladder_rest_ = bright_ladder_matrix(n - 1);
  counts_ = excitation_counts(n);
  counts_rest_ = excitation_counts(n - 1);
}

const std::vector<std::string>& ProtocolObservables::names() {
  static const std::vector<std::string> kNames{"P_sub",      "P_sub_rest",  "n_exc",
                                               "n_exc_rest", "purity_rest", "negativity_rest"};
  return kNames;
}

RealVector ProtocolObservables::evaluate(const Matrix& rho_in) const {
  const Matrix rho = rho_in / rho_in.trace().real();
  const Matrix rest = partial_trace(rho, n_sites, {site});
  RealVector v(6);
  v(0) = subradiant_population(rho, ladder_);
  v(1) = subradiant_population(rest, ladder_rest_);
  v(2) = (rho.diagonal().real().array() * counts_.array()).sum();
  v(3) = (rest.diagonal().real().array() * counts_rest_.array()).sum();
  v(4) = purity(rest);
  v(5) = n_sites - 1 >= 2 ? negativity(rest, n_sites - 1, default_partition_size(n_sites - 1)) : 0.0;
  return v;
}

RealVector ProtocolObservables::evaluate(const Vector& psi) const {
  return evaluate(Matrix(psi * psi.adjoint()));
}

Eigen::Index ProtocolResult::column(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidArgument("no observable named '" + name + "'");
  return it - names.begin();
}

namespace {

void check_times(double t_final, const std::vector<double>& sample_times) {
  if (!(t_final >= 0.0)) throw InvalidArgument("t_final must be non-negative");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw InvalidArgument("sample times must be sorted");
  }
  for (double t : sample_times) {
    if (t < 0.0 || t > t_final) throw InvalidArgument("sample times must lie in [0, t_final]");
  }
}

// One density-matrix realization. `measure` is called at each event time.
template <class Measure>
RealMatrix density_run(const LindbladGenerator& gen, const std::vector<MeasurementEvent>& events,
                       double t_final, const std::vector<double>& sample_times,
                       const ProtocolObservables& obs, const EvolutionConfig& cfg,
                       Measure&& measure) {
  MasterEvolver evolver(gen, cfg);
  Matrix rho = DensityMatrix::pure(StateVector::all_excited(gen.n_sites())).matrix();
  RealMatrix samples(static_cast<Eigen::Index>(sample_times.size()),
                     static_cast<Eigen::Index>(ProtocolObservables::names().size()));
  std::size_t next_event = 0, next_sample = 0;
  double t = 0.0;
  while (true) {
    while (next_event < events.size() && events[next_event].time <= t) {
      measure(rho, events[next_event++]);
    }
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
      samples.row(static_cast<Eigen::Index>(next_sample++)) = obs.evaluate(rho).transpose();
    }
    if (t >= t_final) break;
    double stop = t_final;
    if (next_event < events.size()) stop = std::min(stop, events[next_event].time);
    if (next_sample < sample_times.size()) stop = std::min(stop, sample_times[next_sample]);
    evolver.evolve(rho, t, stop);
    t = stop;
  }
  return samples;
}

ProtocolResult run_engine(const LindbladGenerator& gen, int site,
                          const std::vector<MeasurementEvent>& events, Engine engine,
                          double t_final, const std::vector<double>& sample_times,
                          const RunOptions& options) {
  check_times(t_final, sample_times);
  const int n = gen.n_sites();
  const ProtocolObservables obs(n, site);
  ProtocolResult result;
  result.engine = to_string(engine);
  result.names = ProtocolObservables::names();
  result.base_seed = options.base_seed;

  switch (engine) {
    case Engine::DensityNonselective: {
      auto measure = [n](Matrix& rho, const MeasurementEvent& ev) {
        rho = nonselective_measure(rho, n, ev.site, ev.observable);
      };
      const RealMatrix samples =
          density_run(gen, events, t_final, sample_times, obs, options.cfg, measure);
      result.stats = reduce_samples({samples}, sample_times);
      break;
    }
    case Engine::DensitySampled: {
      if (options.n_samples == 0) throw InvalidArgument("need at least one sample");
      std::vector<RealMatrix> samples(options.n_samples);
      parallel_for(options.n_samples, options.workers, [&](std::size_t k) {
        Rng rng(stream_seed(options.base_seed, k));
        auto measure = [n, &rng](Matrix& rho, const MeasurementEvent& ev) {
          const auto branches = apply_measurement_branches(rho, n, ev.site, ev.observable);
          const double u = rng.uniform();
          double acc = 0.0;
          for (const auto& b : branches) {
            acc += b.probability;
            if (u < acc || &b == &branches.back()) {
              rho = b.rho;
              return;
            }
          }
        };
        samples[k] = density_run(gen, events, t_final, sample_times, obs, options.cfg, measure);
      });
      result.stats = reduce_samples(samples, sample_times);
      break;
    }
    case Engine::Mcwf: {
      if (options.n_samples == 0) throw InvalidArgument("need at least one trajectory");
      TrajectoryEnsemble ens{StateVector::all_excited(n), &gen, events, t_final, sample_times};
      auto sampler = [&obs](const Vector& psi) { return obs.evaluate(psi); };
      result.stats = average_trajectories(ens, sampler, static_cast<int>(result.names.size()),
                                          options.n_samples, options.base_seed, options.cfg,
                                          options.workers);
      break;
    }
  }
  return result;
}

}  // namespace

ProtocolResult repeated_measurement_run(const CouplingModel& model,
                                        const MeasurementSchedule& schedule, Engine engine,
                                        double t_final, const std::vector<double>& sample_times,
                                        const RunOptions& options) {
  schedule.validate(model.n);
  const LindbladGenerator gen(model);
  return run_engine(gen, schedule.site, schedule.events_until(t_final), engine, t_final,
                    sample_times, options);
}

ProtocolResult strong_drive_run(const CouplingModel& model, int site, double rabi, double t_final,
                                const std::vector<double>& sample_times, const RunOptions& options,
                                Engine engine) {
  if (site < 1 || site > model.n) throw InvalidArgument("driven site out of range");
  if (!(rabi >= 0.0)) throw InvalidArgument("Rabi frequency must be non-negative");
  if (engine == Engine::DensitySampled) {
    throw InvalidArgument("a drive without measurements has nothing to sample; use mcwf or density_nonselective");
  }
  const SparseMatrix drive = rabi * embed_site_sparse(pauli::x(), site, model.n);
  const LindbladGenerator gen(model, drive);
  return run_engine(gen, site, {}, engine, t_final, sample_times, options);
}

DoubleMeasurementResult pse_double_measurement(int n, Observable obs, double t_m, double tau,
                                               bool same_site, const EvolutionConfig& cfg) {
  if (n < 3) throw InvalidArgument("double measurement needs n >= 3");
  if (!(t_m >= 0.0) || !(tau >= 0.0)) throw InvalidArgument("times must be non-negative");
  const LindbladGenerator gen(build_couplings(PseGeometry{}, n));
  const JSpectrum spectrum = j_spectrum(n);

  Matrix rho = DensityMatrix::pure(StateVector::all_excited(n)).matrix();
  MasterEvolver(gen, cfg).evolve(rho, 0.0, t_m);
  rho = nonselective_measure(rho, n, 1, obs);

  DoubleMeasurementResult result;
  {
    Matrix single = rho;
    MasterEvolver(gen, cfg).evolve_to_steady(single, 0.0);
    result.psub_single = 1.0 - sector_populations(single, spectrum).front();
  }
  MasterEvolver(gen, cfg).evolve(rho, 0.0, tau);
  rho = nonselective_measure(rho, n, same_site ? 1 : 2, obs);
  MasterEvolver(gen, cfg).evolve_to_steady(rho, 0.0);

  const auto pops = sector_populations(rho, spectrum);
  for (std::size_t s = 0; s < pops.size(); ++s) {
    result.sectors.push_back({spectrum.sectors[s].two_j, pops[s]});
  }
  result.psub_total = 1.0 - pops.front();
  return result;
}

}  // namespace subrad
