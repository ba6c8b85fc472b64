#include "subrad/zeno.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>
#include <unsupported/Eigen/KroneckerProduct>

#include "subrad/dicke.hpp"
#include "subrad/parallel.hpp"

namespace subrad {

namespace {

SparseMatrix build_field(const CouplingModel& model, int site) {
  const int rest = model.n - 1;
  const auto dim = hilbert_dim(rest);
  SparseMatrix field(dim, dim);
  int l_rest = 0;
  for (int l = 1; l <= model.n; ++l) {
    if (l == site) continue;
    ++l_rest;
    const double wx = 0.5 * model.omega(site - 1, l - 1);
    const double wy = 0.25 * model.gamma(site - 1, l - 1);
    if (wx == 0.0 && wy == 0.0) continue;
    const Matrix2 local = wx * pauli::x() + wy * pauli::y();
    field += embed_site_sparse(local, l_rest, rest);
  }
  field.prune(Complex(0.0, 0.0));
  return field;
}

std::pair<Eigen::Vector2cd, Eigen::Vector2cd> basis_vectors(Observable basis) {
  Eigen::Vector2cd plus, minus;
  if (basis == Observable::X) {
    plus << 1.0, 1.0;
    minus << 1.0, -1.0;
    plus /= std::sqrt(2.0);
    minus /= std::sqrt(2.0);
  } else {
    plus << 1.0, 0.0;
    minus << 0.0, 1.0;
  }
  return {plus, minus};
}

double pair_trace(const Matrix& stacked) {
  const auto d = stacked.cols();
  return (stacked.topRows(d).trace() + stacked.bottomRows(d).trace()).real();
}

DormandPrince<Matrix>::Normalizer pair_normalizer(const EvolutionConfig& cfg) {
  if (!cfg.renormalize_trace) return {};
  return [](Matrix& y) {
    const double tr = pair_trace(y);
    if (!(tr > 0.0) || !std::isfinite(tr)) {
      throw NumericalFailure("positive trace", "Zeno pair trace became " + std::to_string(tr));
    }
    const double factor = 1.0 / tr;
    y *= factor;
    return factor;
  };
}

}  // namespace

ZenoGenerator::ZenoGenerator(const CouplingModel& model, int site, Observable basis)
    : model_(model), site_(site), basis_(basis) {
  if (model.n < 2) throw InvalidArgument("the Zeno generator needs at least two sites");
  if (site < 1 || site > model.n) throw InvalidArgument("measured site out of range");
  reduced_ = remove_site(model, site);
  const auto dim = hilbert_dim(reduced_.n);
  if (basis == Observable::X) {
    field_ = build_field(model, site);
    mixing_ = 0.25 * model.gamma(site - 1, site - 1);
    plus_ = std::make_unique<LindbladGenerator>(reduced_, field_);
    minus_ = std::make_unique<LindbladGenerator>(reduced_, SparseMatrix(-field_));
  } else {
    field_ = SparseMatrix(dim, dim);
    mixing_ = model.gamma(site - 1, site - 1);
    plus_ = std::make_unique<LindbladGenerator>(reduced_);
  }
}

void ZenoGenerator::apply(const Matrix& stacked, Matrix& out) const {
  const auto d = stacked.cols();
  out.resize(stacked.rows(), d);
  Matrix top, bottom;
  const Matrix a = stacked.topRows(d);
  const Matrix b = stacked.bottomRows(d);
  if (basis_ == Observable::X) {
    plus_->apply_hermitian(a, top);
    minus_->apply_hermitian(b, bottom);
    out.topRows(d) = top - mixing_ * (a - b);
    out.bottomRows(d) = bottom - mixing_ * (b - a);
  } else {
    plus_->apply_hermitian(a, top);
    plus_->apply_hermitian(b, bottom);
    out.topRows(d) = top - mixing_ * a;
    out.bottomRows(d) = bottom + mixing_ * a;
  }
}

void ZenoGenerator::apply_general(const Matrix& stacked, Matrix& out) const {
  const auto d = stacked.cols();
  out.resize(stacked.rows(), d);
  Matrix top, bottom;
  const Matrix a = stacked.topRows(d);
  const Matrix b = stacked.bottomRows(d);
  const LindbladGenerator& second = basis_ == Observable::X ? *minus_ : *plus_;
  plus_->apply(a, top);
  second.apply(b, bottom);
  if (basis_ == Observable::X) {
    out.topRows(d) = top - mixing_ * (a - b);
    out.bottomRows(d) = bottom - mixing_ * (b - a);
  } else {
    out.topRows(d) = top - mixing_ * a;
    out.bottomRows(d) = bottom + mixing_ * a;
  }
}

Eigen::SparseMatrix<Complex> ZenoGenerator::liouvillian() const {
  using ColSparse = Eigen::SparseMatrix<Complex>;
  const auto d = hilbert_dim(reduced_.n);
  const auto dd = d * d;
  ColSparse id(d, d);
  id.setIdentity();
  auto single = [&](const LindbladGenerator& g) {
    const ColSparse h(g.effective_hamiltonian());
    ColSparse out = ColSparse(Eigen::kroneckerProduct(id, h)) * Complex(0.0, -1.0);
    out += ColSparse(Eigen::kroneckerProduct(ColSparse(h.conjugate()), id)) * Complex(0.0, 1.0);
    for (const auto& jump : g.jump_operators()) {
      const ColSparse l(jump);
      out += ColSparse(Eigen::kroneckerProduct(ColSparse(l.conjugate()), l));
    }
    return out;
  };
  const ColSparse a = single(*plus_);
  const ColSparse b = basis_ == Observable::X ? single(*minus_) : a;

  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(a.nonZeros() + b.nonZeros() + 4 * dd));
  auto copy = [&entries](const ColSparse& m, Eigen::Index row0, Eigen::Index col0) {
    for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
      for (ColSparse::InnerIterator it(m, c); it; ++it) {
        entries.emplace_back(row0 + it.row(), col0 + it.col(), it.value());
      }
    }
  };
  copy(a, 0, 0);
  copy(b, dd, dd);
  for (Eigen::Index k = 0; k < dd; ++k) {
    if (basis_ == Observable::X) {
      entries.emplace_back(k, k, -mixing_);
      entries.emplace_back(k, dd + k, mixing_);
      entries.emplace_back(dd + k, dd + k, -mixing_);
      entries.emplace_back(dd + k, k, mixing_);
    } else {
      entries.emplace_back(k, k, -mixing_);
      entries.emplace_back(dd + k, k, mixing_);
    }
  }
  ColSparse out(2 * dd, 2 * dd);
  out.setFromTriplets(entries.begin(), entries.end());
  out.prune(Complex(0.0, 0.0));
  return out;
}

ZenoGenerator build_zeno_generator(const CouplingModel& model, int site, Observable basis) {
  return ZenoGenerator(model, site, basis);
}

Matrix stack(const ZenoState& s) {
  if (s.chi_plus.rows() != s.chi_minus.rows() || s.chi_plus.cols() != s.chi_minus.cols() ||
      s.chi_plus.rows() != s.chi_plus.cols()) {
    throw InvalidArgument("Zeno pair blocks must be square and of equal size");
  }
  Matrix out(2 * s.chi_plus.rows(), s.chi_plus.cols());
  out << s.chi_plus, s.chi_minus;
  return out;
}

ZenoState unstack(const Matrix& stacked) {
  const auto d = stacked.cols();
  if (stacked.rows() != 2 * d) throw InvalidArgument("stacked Zeno pair has the wrong shape");
  return {stacked.topRows(d), stacked.bottomRows(d)};
}

ZenoState evolve_zeno(const ZenoState& state, const ZenoGenerator& generator, double t,
                      const EvolutionConfig& cfg) {
  if (t < 0.0) throw InvalidArgument("cannot evolve backwards in time");
  if (state.chi_plus.rows() != hilbert_dim(generator.n_rest())) {
    throw InvalidArgument("Zeno state and generator sizes differ");
  }
  Matrix y = stack(state);
  DormandPrince<Matrix> stepper(cfg, pair_normalizer(cfg));
  stepper.integrate(y, 0.0, t, [&generator](const Matrix& s, Matrix& ds) { generator.apply(s, ds); });
  return unstack(y);
}

double zeno_psub(const ZenoState& state, const Matrix& rest_ladder) {
  return subradiant_population(state.total(), rest_ladder);
}

std::vector<double> zeno_psub_series(const ZenoState& initial, const ZenoGenerator& generator,
                                     const std::vector<double>& times, const EvolutionConfig& cfg) {
  if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < 0.0)) {
    throw InvalidArgument("sample times must be sorted and non-negative");
  }
  const Matrix ladder = bright_ladder_matrix(generator.n_rest());
  Matrix y = stack(initial);
  DormandPrince<Matrix> stepper(cfg, pair_normalizer(cfg));
  auto rhs = [&generator](const Matrix& s, Matrix& ds) { generator.apply(s, ds); };
  std::vector<double> out;
  out.reserve(times.size());
  double t = 0.0;
  for (double target : times) {
    stepper.integrate(y, t, target, rhs);
    t = std::max(t, target);
    out.push_back(zeno_psub(unstack(y), ladder));
  }
  return out;
}

ZenoState zeno_initial_state(const CouplingModel& model, int site, double t_in, Observable basis,
                             const EvolutionConfig& cfg) {
  if (!(t_in >= 0.0)) throw InvalidArgument("t_in must be non-negative");
  if (site < 1 || site > model.n) throw InvalidArgument("measured site out of range");
  const auto rho =
      evolve_master(DensityMatrix::pure(StateVector::all_excited(model.n)), model, t_in, cfg);
  const auto [plus, minus] = basis_vectors(basis);
  ZenoState s{site_matrix_element(rho.matrix(), model.n, site, plus, plus),
              site_matrix_element(rho.matrix(), model.n, site, minus, minus)};
  return s;
}

std::string to_string(ZenoMethod m) {
  switch (m) {
    case ZenoMethod::LongTime: return "longtime";
    case ZenoMethod::LinearSolve: return "linear_solve";
    case ZenoMethod::SparseSolve: return "sparse_solve";
  }
  return "unknown";
}

ZenoMethod zeno_method_from_string(const std::string& s) {
  if (s == "longtime") return ZenoMethod::LongTime;
  if (s == "linear_solve") return ZenoMethod::LinearSolve;
  if (s == "sparse_solve") return ZenoMethod::SparseSolve;
  throw InvalidArgument("unknown Zeno method '" + s + "'");
}

namespace {

using ColSparse = Eigen::SparseMatrix<Complex>;

// The equation in row `row` is replaced by Tr(chi_+ + chi_-) = 1.
ColSparse bordered_system(const ColSparse& full, Eigen::Index d, Eigen::Index row) {
  const auto dd = d * d;
  std::vector<Eigen::Triplet<Complex>> entries;
  entries.reserve(static_cast<std::size_t>(full.nonZeros() + 2 * d));
  for (Eigen::Index c = 0; c < full.outerSize(); ++c) {
    for (ColSparse::InnerIterator it(full, c); it; ++it) {
      if (it.row() != row) entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Eigen::Index a = 0; a < d; ++a) {
    entries.emplace_back(row, a + d * a, 1.0);
    entries.emplace_back(row, dd + a + d * a, 1.0);
  }
  ColSparse system(2 * dd, 2 * dd);
  system.setFromTriplets(entries.begin(), entries.end());
  return system;
}

Vector direct_steady_vector(const ColSparse& full, Eigen::Index d) {
  const auto n = 2 * d * d;
  const ColSparse system = bordered_system(full, d, 0);
  Eigen::SparseLU<ColSparse, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(system);
  lu.factorize(system);
  if (lu.info() != Eigen::Success) {
    throw NumericalFailure("unique Zeno steady state", "sparse factorization failed: " + lu.lastErrorMessage());
  }
  // A second steady state makes the bordered system singular up to rounding,
  // which shows up as enormous growth on a generic right-hand side.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Vector probe(n);
  for (Eigen::Index k = 0; k < n; ++k) probe(k) = Complex(normal(rng), normal(rng));
  const double growth = Vector(lu.solve(probe)).cwiseAbs().maxCoeff() / probe.cwiseAbs().maxCoeff();
  if (!(growth < 1e10)) {
    throw NumericalFailure("unique Zeno steady state",
                           "steady-state system is singular (growth " + std::to_string(growth) + ")");
  }
  Vector rhs = Vector::Zero(n);
  rhs(0) = 1.0;
  return lu.solve(rhs);
}

Vector krylov_solve(const ColSparse& system, Eigen::Index row) {
  Eigen::GMRES<ColSparse, Eigen::IncompleteLUT<Complex>> gmres;
  gmres.preconditioner().setFillfactor(1);
  gmres.preconditioner().setDroptol(1e-2);
  gmres.set_restart(200);
  gmres.setTolerance(1e-13);
  gmres.setMaxIterations(20000);
  gmres.compute(system);
  Vector rhs = Vector::Zero(system.rows());
  rhs(row) = 1.0;
  Vector x = gmres.solve(rhs);
  if (gmres.info() != Eigen::Success) {
    throw NumericalFailure("unique Zeno steady state",
                           "GMRES did not converge (error " + std::to_string(gmres.error()) + ")");
  }
  return x;
}

// Factorizing the large pair Liouvillian fills in badly, so big systems go
// through preconditioned GMRES. With a unique steady state the solution does
// not depend on which equation the trace condition replaces; two placements
// that disagree expose a degenerate null space.
Vector iterative_steady_vector(const ColSparse& full, Eigen::Index d) {
  const auto last = 2 * d * d - 1;
  const Vector x = krylov_solve(bordered_system(full, d, 0), 0);
  const Vector y = krylov_solve(bordered_system(full, d, last), last);
  const double spread = (x - y).cwiseAbs().maxCoeff();
  if (!(spread < 1e-7)) {
    throw NumericalFailure("unique Zeno steady state",
                           "steady-state system is singular (placement spread " + std::to_string(spread) + ")");
  }
  return x;
}

ZenoState sparse_steady_state(const ZenoGenerator& generator) {
  const auto d = hilbert_dim(generator.n_rest());
  const auto dd = d * d;
  const ColSparse full = generator.liouvillian();
  const Vector x = generator.n_rest() <= 5 ? direct_steady_vector(full, d) : iterative_steady_vector(full, d);
  const double residual = (full * x).cwiseAbs().maxCoeff();
  const double largest = x.cwiseAbs().maxCoeff();
  if (!std::isfinite(largest) || largest > 1.0 + 1e-6 || residual > 1e-8) {
    throw NumericalFailure("unique Zeno steady state",
                           "sparse solution is not a density matrix (residual " +
                               std::to_string(residual) + ", largest entry " +
                               std::to_string(largest) + ")");
  }
  ZenoState s{x.head(dd).reshaped(d, d), x.tail(dd).reshaped(d, d)};
  for (Matrix* m : {&s.chi_plus, &s.chi_minus}) {
    *m = 0.5 * (*m + m->adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(*m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-7) {
      throw NumericalFailure("unique Zeno steady state", "sparse solution is not positive");
    }
  }
  return s;
}

}  // namespace

ZenoSteady zeno_steady_state(const ZenoGenerator& generator, ZenoMethod method,
                             const ZenoSteadyOptions& options) {
  const int rest = generator.n_rest();
  const auto d = hilbert_dim(rest);
  const Matrix ladder = bright_ladder_matrix(rest);
  ZenoSteady result;
  result.method = method;

  if (method == ZenoMethod::SparseSolve) {
    result.state = sparse_steady_state(generator);
    result.psub = zeno_psub(result.state, ladder);
    result.null_dimension = 1;
    return result;
  }

  if (method == ZenoMethod::LinearSolve) {
    if (rest > 4) throw InvalidArgument("the linear solve is limited to at most 4 unmeasured sites");
    const auto dd = d * d;
    const auto dim = 2 * dd;
    Matrix liouvillian(dim, dim);
    Matrix unit = Matrix::Zero(2 * d, d);
    Matrix image;
    // Column-major vectorization of the stacked (2d x d) pair.
    for (Eigen::Index c = 0; c < dim; ++c) {
      unit(c % (2 * d), c / (2 * d)) = 1.0;
      generator.apply_general(unit, image);
      liouvillian.col(c) = image.reshaped();
      unit(c % (2 * d), c / (2 * d)) = 0.0;
    }
    Eigen::BDCSVD<Matrix> svd(liouvillian, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double cut = 1e-10 * sv(0);
    int nullity = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv(k) <= cut) ++nullity;
    }
    result.null_dimension = nullity;
    if (nullity > 1) {
      throw NumericalFailure("unique Zeno steady state",
                             "null space of dimension " + std::to_string(nullity));
    }
    const Vector v = svd.matrixV().col(dim - 1);
    Matrix y = v.reshaped(2 * d, d);
    const Complex tr = y.topRows(d).trace() + y.bottomRows(d).trace();
    if (std::abs(tr) < 1e-12) {
      throw NumericalFailure("unique Zeno steady state", "null vector has zero trace");
    }
    y /= tr;
    ZenoState s = unstack(y);
    s.chi_plus = 0.5 * (s.chi_plus + s.chi_plus.adjoint()).eval();
    s.chi_minus = 0.5 * (s.chi_minus + s.chi_minus.adjoint()).eval();
    result.state = std::move(s);
    result.psub = zeno_psub(result.state, ladder);
    result.settle_time = 0.0;
    return result;
  }

  ZenoState start = options.initial ? *options.initial
                                    : zeno_initial_state(generator.model(), generator.site(), 0.0,
                                                         generator.basis(), options.cfg);
  Matrix y = stack(start);
  DormandPrince<Matrix> stepper(options.cfg, pair_normalizer(options.cfg));
  auto rhs = [&generator](const Matrix& s, Matrix& ds) { generator.apply(s, ds); };
  const RealVector counts = excitation_counts(rest);
  auto observe = [&](const Matrix& stacked) {
    const Matrix total = stacked.topRows(d) + stacked.bottomRows(d);
    double n_exc = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) n_exc += counts(k) * total(k, k).real();
    return std::make_pair(subradiant_population(total, ladder), n_exc);
  };
  auto [psub, n_exc] = observe(y);
  double t = 0.0;
  int quiet = 0;
  while (t < options.horizon) {
    const double h = stepper.step(y, t, options.horizon, rhs);
    t += h;
    const auto [p_new, n_new] = observe(y);
    const double rate = std::max(std::abs(p_new - psub), std::abs(n_new - n_exc)) / h;
    psub = p_new;
    n_exc = n_new;
    quiet = rate < options.rate_tol ? quiet + 1 : 0;
    if (quiet >= 2) break;
  }
  result.state = unstack(y);
  result.psub = psub;
  result.settle_time = t;
  return result;
}

double zeno_steady_psub(const ZenoGenerator& generator, ZenoMethod method,
                        const ZenoSteadyOptions& options) {
  return zeno_steady_state(generator, method, options).psub;
}

ZenoSweep zeno_sweep(int n, const std::vector<double>& d_grid, const std::vector<int>& sites,
                     int workers, std::optional<ZenoMethod> method,
                     const ZenoSteadyOptions& options) {
  if (n < 2) throw InvalidArgument("the sweep needs at least two sites");
  if (d_grid.empty() || sites.empty()) throw InvalidArgument("empty sweep grid");
  for (double d : d_grid) {
    if (!(d >= 0.0 && d <= 1.0)) throw InvalidArgument("spacings must lie in [0, 1]");
  }
  for (int i : sites) {
    if (i < 1 || i > n) throw InvalidArgument("measured site out of range");
  }
  const ZenoMethod chosen = method.value_or(ZenoMethod::SparseSolve);
  if (chosen == ZenoMethod::LinearSolve && n - 1 > 4) {
    throw InvalidArgument("the linear solve is limited to at most 4 unmeasured sites");
  }

  ZenoSweep sweep;
  sweep.n = n;
  sweep.d_grid = d_grid;
  sweep.sites = sites;
  const auto rows = static_cast<Eigen::Index>(d_grid.size());
  const auto cols = static_cast<Eigen::Index>(sites.size());
  sweep.table = RealMatrix::Zero(rows, cols);
  std::atomic<int> fallbacks{0};

  parallel_for(static_cast<std::size_t>(rows * cols), workers, [&](std::size_t cell) {
    const auto r = static_cast<Eigen::Index>(cell) / cols;
    const auto c = static_cast<Eigen::Index>(cell) % cols;
    const auto model = build_couplings(WaveguideGeometry{d_grid[r]}, n);
    const ZenoGenerator generator(model, sites[c]);
    double value = 0.0;
    if (chosen != ZenoMethod::LongTime) {
      try {
        value = zeno_steady_psub(generator, chosen, options);
      } catch (const NumericalFailure&) {
        value = zeno_steady_psub(generator, ZenoMethod::LongTime, options);
        ++fallbacks;
      }
    } else {
      value = zeno_steady_psub(generator, ZenoMethod::LongTime, options);
    }
    sweep.table(r, c) = value;
  });

  sweep.fallbacks = fallbacks.load();
  Eigen::Index br = 0, bc = 0;
  sweep.best_value = sweep.table.maxCoeff(&br, &bc);
  sweep.best_d = d_grid[br];
  sweep.best_site = sites[bc];
  return sweep;
}

}  // namespace subrad
