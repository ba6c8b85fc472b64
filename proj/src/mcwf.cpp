#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "subrad/dynamics.hpp"
#include "subrad/parallel.hpp"

namespace subrad {

namespace {

class ProjectorCache {
 public:
  explicit ProjectorCache(int n) : n_(n) {}

  const SparseMatrix& get(int site, Observable obs, int sign) {
    const auto key = std::make_tuple(site, obs, sign);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      it = cache_.emplace(key, embed_site_sparse(pauli::projector(obs, sign), site, n_)).first;
    }
    return it->second;
  }

 private:
  int n_;
  std::map<std::tuple<int, Observable, int>, SparseMatrix> cache_;
};

void normalize_or_throw(Vector& psi, const char* where) {
  const double norm = psi.norm();
  if (!(norm > 1e-150) || !std::isfinite(norm)) {
    throw NumericalFailure("non-zero state norm", std::string("state vanished ") + where);
  }
  psi /= norm;
}

}  // namespace

TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const LindbladGenerator& generator,
                                 const std::vector<MeasurementEvent>& events, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times,
                                 const std::vector<StateObservable>& observables) {
  auto sampler = [&observables](const Vector& psi) {
    RealVector row(static_cast<Eigen::Index>(observables.size()));
    for (std::size_t o = 0; o < observables.size(); ++o) {
      row(static_cast<Eigen::Index>(o)) = observables[o](psi);
    }
    return row;
  };
  return mcwf_trajectory(psi0, generator, events, t_final, cfg, seed, sample_times, sampler,
                         static_cast<int>(observables.size()));
}

TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const LindbladGenerator& generator,
                                 const std::vector<MeasurementEvent>& events_in, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times,
                                 const StateSampler& sampler, int width) {
  const int n = generator.n_sites();
  if (psi0.n_sites() != n) throw InvalidArgument("state and model sizes differ");
  if (!(t_final >= 0.0)) throw InvalidArgument("t_final must be non-negative");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw InvalidArgument("sample times must be sorted");
  }
  const auto events = normalize_events(events_in);
  for (const auto& ev : events) {
    if (ev.site < 1 || ev.site > n) throw InvalidArgument("measured site out of range");
  }

  TrajectoryRecord record;
  record.seed = seed;
  record.sample_times = sample_times;
  record.samples = RealMatrix::Zero(static_cast<Eigen::Index>(sample_times.size()), width);

  const SparseMatrix& h_eff = generator.effective_hamiltonian();
  const auto& jumps = generator.jump_operators();
  auto rhs = [&h_eff](const Vector& y, Vector& dy) { dy.noalias() = (-kI) * (h_eff * y); };

  EvolutionConfig vcfg = cfg;
  vcfg.renormalize_trace = false;
  DormandPrince<Vector> stepper(vcfg);
  ProjectorCache projectors(n);
  Rng rng(seed);

  Vector psi = psi0.amplitudes();
  double threshold = rng.uniform();
  double t = 0.0;
  std::size_t next_event = 0, next_sample = 0;

  auto measure = [&](const MeasurementEvent& ev) {
    normalize_or_throw(psi, "before a measurement");
    const SparseMatrix& p_plus = projectors.get(ev.site, ev.observable, +1);
    Vector projected = p_plus * psi;
    const double prob_plus = std::clamp(projected.squaredNorm(), 0.0, 1.0);
    const int outcome = rng.uniform() < prob_plus ? +1 : -1;
    if (outcome < 0) projected = projectors.get(ev.site, ev.observable, -1) * psi;
    psi = std::move(projected);
    normalize_or_throw(psi, "after a measurement");
    record.measurement_events.push_back({ev.time, ev.site, ev.observable, outcome});
    threshold = rng.uniform();
    stepper.invalidate();
  };

  auto sample = [&] {
    if (width > 0) {
      const RealVector row = sampler(psi / psi.norm());
      if (row.size() != width) throw InvalidArgument("sampler returned the wrong number of values");
      record.samples.row(static_cast<Eigen::Index>(next_sample)) = row.transpose();
    }
    ++next_sample;
  };

  auto jump = [&](double when) {
    std::vector<double> weights(jumps.size());
    std::vector<Vector> candidates(jumps.size());
    double total = 0.0;
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      candidates[k] = jumps[k] * psi;
      weights[k] = candidates[k].squaredNorm();
      total += weights[k];
    }
    if (!(total > 0.0)) {
      throw NumericalFailure("jump rate positive at a jump", "no channel can act on the state");
    }
    const double pick = rng.uniform() * total;
    std::size_t k = 0;
    double acc = weights[0];
    while (acc < pick && k + 1 < jumps.size()) acc += weights[++k];
    psi = std::move(candidates[k]);
    normalize_or_throw(psi, "after a jump");
    record.jump_events.push_back({when, static_cast<int>(k)});
    threshold = rng.uniform();
    stepper.invalidate();
  };

  while (true) {
    while (next_event < events.size() && events[next_event].time <= t) measure(events[next_event++]);
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) sample();
    if (t >= t_final) break;

    double stop = t_final;
    if (next_event < events.size()) stop = std::min(stop, events[next_event].time);
    if (next_sample < sample_times.size()) stop = std::min(stop, sample_times[next_sample]);

    while (t < stop) {
      const Vector before = psi;
      const double h = stepper.step(psi, t, stop, rhs);
      if (psi.squaredNorm() > threshold) {
        t = (stop - (t + h) <= 1e-14 * std::max(1.0, stop)) ? stop : t + h;
        continue;
      }
      // The squared norm decreases monotonically, so bisect on the step size.
      double lo = 0.0, hi = h;
      Vector trial;
      while (hi - lo > 1e-10 * std::max(h, 1e-300)) {
        const double mid = 0.5 * (lo + hi);
        stepper.single_step(before, mid, rhs, trial);
        if (trial.squaredNorm() > threshold) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      stepper.single_step(before, hi, rhs, psi);
      t += hi;
      jump(t);
      if (t > stop) t = stop;
    }
  }

  normalize_or_throw(psi, "at the end of the trajectory");
  record.final_state = std::move(psi);
  return record;
}

TrajectoryRecord mcwf_trajectory(const StateVector& psi0, const CouplingModel& model,
                                 const MeasurementSchedule& schedule, double t_final,
                                 const EvolutionConfig& cfg, std::uint64_t seed,
                                 const std::vector<double>& sample_times,
                                 const std::vector<StateObservable>& observables) {
  schedule.validate(model.n);
  const LindbladGenerator generator(model);
  return mcwf_trajectory(psi0, generator, schedule.events_until(t_final), t_final, cfg, seed,
                         sample_times, observables);
}

EnsembleStats reduce_samples(const std::vector<RealMatrix>& samples, std::vector<double> times) {
  if (samples.empty()) throw InvalidArgument("no samples to reduce");
  const auto count = static_cast<double>(samples.size());
  std::vector<RealMatrix> squares(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].rows() != samples[0].rows() || samples[k].cols() != samples[0].cols()) {
      throw InvalidArgument("sample matrices differ in shape");
    }
    squares[k] = samples[k].array().square().matrix();
  }
  EnsembleStats stats;
  stats.times = std::move(times);
  stats.n_samples = samples.size();
  stats.mean = pairwise_sum(samples, 0, samples.size()) / count;
  const RealMatrix second = pairwise_sum(squares, 0, squares.size()) / count;
  if (samples.size() > 1) {
    const RealMatrix var =
        ((second - stats.mean.array().square().matrix()) * (count / (count - 1.0)))
            .cwiseMax(0.0);
    stats.stderr_ = (var / count).cwiseSqrt();
  } else {
    stats.stderr_ = RealMatrix::Zero(stats.mean.rows(), stats.mean.cols());
  }
  return stats;
}

EnsembleStats average_trajectories(const TrajectoryEnsemble& ensemble,
                                   const std::vector<StateObservable>& observables,
                                   std::size_t n_traj, std::uint64_t base_seed,
                                   const EvolutionConfig& cfg, int workers) {
  auto sampler = [&observables](const Vector& psi) {
    RealVector row(static_cast<Eigen::Index>(observables.size()));
    for (std::size_t o = 0; o < observables.size(); ++o) {
      row(static_cast<Eigen::Index>(o)) = observables[o](psi);
    }
    return row;
  };
  return average_trajectories(ensemble, sampler, static_cast<int>(observables.size()), n_traj,
                              base_seed, cfg, workers);
}

EnsembleStats average_trajectories(const TrajectoryEnsemble& ensemble, const StateSampler& sampler,
                                   int width, std::size_t n_traj, std::uint64_t base_seed,
                                   const EvolutionConfig& cfg, int workers) {
  if (ensemble.generator == nullptr) throw InvalidArgument("ensemble has no generator");
  if (n_traj == 0) throw InvalidArgument("need at least one trajectory");
  std::vector<RealMatrix> samples(n_traj);
  parallel_for(n_traj, workers, [&](std::size_t k) {
    samples[k] = mcwf_trajectory(ensemble.psi0, *ensemble.generator, ensemble.events,
                                 ensemble.t_final, cfg, stream_seed(base_seed, k),
                                 ensemble.sample_times, sampler, width)
                     .samples;
  });
  return reduce_samples(samples, ensemble.sample_times);
}

}  // namespace subrad
