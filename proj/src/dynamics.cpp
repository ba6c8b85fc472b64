#include "subrad/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace subrad {

LindbladGenerator::LindbladGenerator(const CouplingModel& model)
    : LindbladGenerator(model, SparseMatrix(hilbert_dim(model.n), hilbert_dim(model.n))) {}

LindbladGenerator::LindbladGenerator(const CouplingModel& model,
                                     const SparseMatrix& extra_hamiltonian)
    : model_(model), channels_(jump_channels(model)) {
  const auto dim = hilbert_dim(model.n);
  if (extra_hamiltonian.rows() != dim || extra_hamiltonian.cols() != dim) {
    throw InvalidArgument("extra Hamiltonian has the wrong dimension");
  }
  hamiltonian_ = interaction_hamiltonian(model);
  hamiltonian_ += extra_hamiltonian;
  SparseMatrix decay(dim, dim);
  for (const auto& ch : channels_) {
    SparseMatrix op = std::sqrt(ch.rate) * channel_operator(ch.coeffs, model.n);
    SparseMatrix adj = op.adjoint();
    decay += SparseMatrix(adj * op);
    jumps_.push_back(std::move(op));
    jumps_adj_.push_back(std::move(adj));
  }
  h_eff_ = hamiltonian_ - Complex(0.0, 0.5) * decay;
  h_eff_.prune(Complex(0.0, 0.0));
  h_eff_adj_ = h_eff_.adjoint();
}

void LindbladGenerator::apply(const Matrix& rho, Matrix& out) const {
  out.noalias() = (-kI) * (h_eff_ * rho);
  out.noalias() += kI * (rho * h_eff_adj_);
  for (std::size_t k = 0; k < jumps_.size(); ++k) {
    const Matrix left = jumps_[k] * rho;
    out.noalias() += left * jumps_adj_[k];
  }
}

Matrix LindbladGenerator::apply(const Matrix& rho) const {
  Matrix out;
  apply(rho, out);
  return out;
}

void LindbladGenerator::apply_hermitian(const Matrix& rho, Matrix& out) const {
  const Matrix a = (-kI) * (h_eff_ * rho);
  out = a + a.adjoint();
  for (const auto& op : jumps_) {
    const Matrix left = op * rho;
    out.noalias() += op * left.adjoint();
  }
}

Matrix lindblad_rhs(const DensityMatrix& rho, const CouplingModel& model) {
  if (rho.n_sites() != model.n) throw InvalidArgument("state and model sizes differ");
  return LindbladGenerator(model).apply(rho.matrix());
}

namespace {

DormandPrince<Matrix>::Normalizer trace_normalizer(const EvolutionConfig& cfg) {
  if (!cfg.renormalize_trace) return {};
  return [](Matrix& rho) {
    const double tr = rho.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) {
      throw NumericalFailure("positive trace", "trace became " + std::to_string(tr));
    }
    const double factor = 1.0 / tr;
    rho *= factor;
    return factor;
  };
}

}  // namespace

MasterEvolver::MasterEvolver(const LindbladGenerator& generator, const EvolutionConfig& cfg)
    : generator_(generator),
      cfg_(cfg),
      counts_(excitation_counts(generator.n_sites())),
      stepper_(cfg, trace_normalizer(cfg)) {}

void MasterEvolver::evolve(Matrix& rho, double t0, double t1) {
  if (t1 < t0) throw InvalidArgument("cannot evolve backwards in time");
  stepper_.integrate(rho, t0, t1,
                     [this](const Matrix& y, Matrix& dy) { generator_.apply_hermitian(y, dy); });
}

double MasterEvolver::step(Matrix& rho, double t, double t_end) {
  return stepper_.step(rho, t, t_end,
                       [this](const Matrix& y, Matrix& dy) { generator_.apply_hermitian(y, dy); });
}

void MasterEvolver::trial_step(const Matrix& rho, double h, Matrix& out) {
  stepper_.single_step(rho, h,
                       [this](const Matrix& y, Matrix& dy) { generator_.apply_hermitian(y, dy); },
                       out);
}

double MasterEvolver::excitation_rate(const Matrix& rho) const {
  Matrix d;
  generator_.apply_hermitian(rho, d);
  return (d.diagonal().real().array() * counts_.array()).sum();
}

double MasterEvolver::evolve_to_steady(Matrix& rho, double t0) {
  const double t_end = t0 + cfg_.t_horizon;
  double t = t0;
  int quiet = 0;
  while (t < t_end) {
    const double h = step(rho, t, t_end);
    t = (t_end - (t + h) <= 1e-14 * std::max(1.0, t_end)) ? t_end : t + h;
    quiet = std::abs(excitation_rate(rho)) < cfg_.steady_eps ? quiet + 1 : 0;
    if (quiet >= 2) break;
  }
  return t;
}

DensityMatrix evolve_master(const DensityMatrix& rho0, const CouplingModel& model, double t,
                            const EvolutionConfig& cfg) {
  if (rho0.n_sites() != model.n) throw InvalidArgument("state and model sizes differ");
  if (t < 0.0) throw InvalidArgument("evolution time must be non-negative");
  const LindbladGenerator generator(model);
  MasterEvolver evolver(generator, cfg);
  Matrix rho = rho0.matrix();
  evolver.evolve(rho, 0.0, t);
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityMatrix(model.n, std::move(rho));
}

void MeasurementSchedule::validate(int n_sites) const {
  if (site < 1 || site > n_sites) throw InvalidArgument("measured site out of range");
  if (const auto* periodic = std::get_if<Periodic>(&mode)) {
    if (!(periodic->rate > 0.0) || !std::isfinite(periodic->rate)) {
      throw InvalidArgument("measurement rate must be positive");
    }
    if (!(periodic->t_in >= 0.0)) throw InvalidArgument("t_in must be non-negative");
  } else {
    for (double t : std::get<Discrete>(mode).times) {
      if (!(t >= 0.0) || !std::isfinite(t)) {
        throw InvalidArgument("measurement times must be finite and non-negative");
      }
    }
  }
}

std::vector<MeasurementEvent> MeasurementSchedule::events_until(double t_final) const {
  std::vector<MeasurementEvent> events;
  if (const auto* periodic = std::get_if<Periodic>(&mode)) {
    const double slack = 1e-12 * std::max(1.0, t_final);
    for (std::int64_t k = 0;; ++k) {
      const double t = periodic->t_in + static_cast<double>(k) / periodic->rate;
      if (t > t_final + slack) break;
      events.push_back({std::min(t, t_final), site, observable});
    }
  } else {
    for (double t : std::get<Discrete>(mode).times) {
      if (t <= t_final) events.push_back({t, site, observable});
    }
  }
  return normalize_events(std::move(events));
}

std::vector<MeasurementEvent> normalize_events(std::vector<MeasurementEvent> events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const auto& a, const auto& b) { return a.time < b.time; });
  auto same = [](const MeasurementEvent& a, const MeasurementEvent& b) {
    return a.time == b.time && a.site == b.site && a.observable == b.observable;
  };
  events.erase(std::unique(events.begin(), events.end(), same), events.end());
  return events;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(splitmix64(base_seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

}  // namespace subrad
