// Command-line front end: one subcommand per experiment, CSV tables plus a
// JSON manifest per run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "config.hpp"
#include "subrad/analytic.hpp"
#include "subrad/protocols.hpp"
#include "subrad/zeno.hpp"

#ifndef SUBRAD_VERSION
#define SUBRAD_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace subrad;
using namespace subrad::cli;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  std::optional<std::string> engine;
};

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  Csv& num(double v) {
    char buf[64];
    if (std::isnan(v)) {
      std::snprintf(buf, sizeof buf, "nan");
    } else {
      std::snprintf(buf, sizeof buf, "%.11e", v);
    }
    cells_.emplace_back(buf);
    return *this;
  }
  Csv& integer(long long v) {
    cells_.push_back(std::to_string(v));
    return *this;
  }
  void end_row() {
    if (cells_.size() != header_.size()) throw std::logic_error("CSV row width mismatch");
    rows_.push_back(std::move(cells_));
    cells_.clear();
  }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_line(out, header_);
    for (const auto& r : rows_) write_line(out, r);
  }

 private:
  static void write_line(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::string> cells_;
  std::vector<std::vector<std::string>> rows_;
};

/// Shared state of one run: resolved settings, outputs and extra results.
struct Run {
  std::string subcommand;
  json resolved = json::object();
  json results = json::object();
  std::vector<std::pair<std::string, Csv>> tables;
  fs::path out_dir = "out";
  std::uint64_t base_seed = 0;
  int workers = 1;

  void add(const std::string& name, Csv csv) { tables.emplace_back(name, std::move(csv)); }
};

// Keys shared by several subcommands. Each reader records the value it used.
std::uint64_t read_seed(Section& root, Run& run, const Overrides& o) {
  run.base_seed = o.seed.value_or(root.get<std::uint64_t>("base_seed", 0));
  run.resolved["base_seed"] = run.base_seed;
  return run.base_seed;
}

int read_workers(Section& root, Run& run, const Overrides& o) {
  run.workers = o.workers.value_or(root.get<int>("workers", 1));
  if (run.workers < 1) throw ConfigError("workers: must be at least 1");
  run.resolved["workers"] = run.workers;
  return run.workers;
}

Engine read_engine(Section& root, Run& run, const Overrides& o, Engine fallback) {
  const std::string name = o.engine.value_or(root.get<std::string>("engine", to_string(fallback)));
  try {
    const Engine e = engine_from_string(name);
    run.resolved["engine"] = to_string(e);
    return e;
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("engine: ") + e.what());
  }
}

Observable read_observable(Section& s, const std::string& key, Observable fallback) {
  const std::string name = s.get<std::string>(key, to_string(fallback));
  try {
    return observable_from_string(name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(s.where(key) + ": " + e.what());
  }
}

int read_n(Section& root, Run& run, int fallback, int lo, int hi) {
  const int n = root.get<int>("n", fallback);
  if (n < lo || n > hi) {
    throw ConfigError("n: must lie in " + std::to_string(lo) + ".." + std::to_string(hi));
  }
  run.resolved["n"] = n;
  return n;
}

std::vector<double> grid(Section& s, Run& run, const std::string& key,
                         const std::vector<double>& fallback, double lo = 0.0) {
  auto g = read_grid(s, key, fallback);
  if (g.empty()) throw ConfigError(s.where(key) + ": empty grid");
  for (double v : g) {
    if (!(v >= lo) || !std::isfinite(v)) {
      throw ConfigError(s.where(key) + ": values must be finite and >= " + std::to_string(lo));
    }
  }
  run.resolved[key] = g;
  return g;
}

void check_site(int site, int n, const std::string& key) {
  if (site < 1 || site > n) throw ConfigError(key + ": must lie in 1.." + std::to_string(n));
}

void reject_engine(const Overrides& o, const std::string& sub) {
  if (o.engine) throw ConfigError("--engine is not used by " + sub);
}

// ---------------------------------------------------------------------------

std::function<void()> setup_pse_single(Section& root, Run& run, const Overrides& o) {
  reject_engine(o, run.subcommand);
  const int n = read_n(root, run, 4, 2, 12);
  std::vector<std::string> obs_names =
      root.get<std::vector<std::string>>("observables", {"x", "z"});
  std::vector<Observable> observables;
  for (const auto& s : obs_names) {
    try {
      observables.push_back(observable_from_string(s));
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("observables: ") + e.what());
    }
  }
  run.resolved["observables"] = obs_names;
  const auto tms = grid(root, run, "t_m", log_grid(1e-3, 10.0, 20));
  const std::string backend_name = root.get<std::string>("backend", "reduced");
  if (backend_name != "reduced" && backend_name != "full") {
    throw ConfigError("backend: expected reduced or full");
  }
  if (backend_name == "full" && n > 8) throw ConfigError("backend: full is limited to n <= 8");
  run.resolved["backend"] = backend_name;
  const auto backend = backend_name == "full" ? PseBackend::Full : PseBackend::Reduced;
  const auto cfg = read_evolution(root);
  run.resolved["evolution"] = evolution_to_json(cfg);

  return [=, &run] {
    double worst = 0.0;
    for (Observable obs : observables) {
      Csv csv({"t_m", "P_sub_analytic", "P_sub_numeric", "abs_diff"});
      double max_diff = 0.0;
      for (double t : tms) {
        const double a = psub_ss(n, obs, t);
        const double b = single_measurement_pse(n, obs, t, backend, cfg).psub_ss;
        max_diff = std::max(max_diff, std::abs(a - b));
        csv.num(t).num(a).num(b).num(std::abs(a - b)).end_row();
      }
      run.results[std::string("max_abs_diff_") + to_string(obs)] = max_diff;
      worst = std::max(worst, max_diff);
      run.add(std::string("pse_single_") + to_string(obs) + ".csv", std::move(csv));
    }
    if (worst >= 1e-4) {
      throw NumericalFailure("numeric and analytic steady states agree within 1e-4",
                             "largest difference " + std::to_string(worst));
    }
  };
}

std::function<void()> setup_lifetime(Section& root, Run& run, const Overrides& o) {
  reject_engine(o, run.subcommand);
  const auto model_cfg = read_model(root, ModelConfig{6, "waveguide", 0.1});
  if (model_cfg.n < 2) throw ConfigError("model.n: must be at least 2");
  run.resolved["model"] = model_cfg.to_json();
  const int site = root.get<int>("site", 1);
  check_site(site, model_cfg.n, "site");
  run.resolved["site"] = site;
  const Observable obs = read_observable(root, "observable", Observable::X);
  run.resolved["observable"] = to_string(obs);
  const auto tms = grid(root, run, "t_m", log_grid(1e-2, 3.0, 20));
  const double horizon = root.get<double>("horizon", 200.0);
  if (!(horizon > 0.0)) throw ConfigError("horizon: must be positive");
  run.resolved["horizon"] = horizon;
  const auto cfg = read_evolution(root);
  run.resolved["evolution"] = evolution_to_json(cfg);

  return [=, &run] {
    const auto model = model_cfg.build();
    Csv csv({"t_m", "t_sub", "t_sub_unmeasured", "ratio", "lower_bound"});
    for (double t : tms) {
      const auto r = lifetime_t_sub(model, obs, t, site, horizon, cfg);
      csv.num(t).num(r.t_sub).num(r.t_sub_unmeasured).num(r.ratio).integer(r.lower_bound ? 1 : 0);
      csv.end_row();
    }
    run.add("lifetime.csv", std::move(csv));
  };
}

MeasurementSchedule read_schedule(Section& root, Run& run, int n, double default_t_in,
                                  double default_rate) {
  Section s = root.child("schedule");
  MeasurementSchedule schedule;
  schedule.site = s.get<int>("site", (n + 1) / 2);
  check_site(schedule.site, n, "schedule.site");
  schedule.observable = read_observable(s, "observable", Observable::X);
  json resolved{{"site", schedule.site}, {"observable", to_string(schedule.observable)}};
  if (s.has("times")) {
    if (s.has("t_in") || s.has("rate")) {
      throw ConfigError("schedule: give either times or t_in/rate, not both");
    }
    const auto times = s.require<std::vector<double>>("times");
    for (double t : times) {
      if (!(t >= 0.0)) throw ConfigError("schedule.times: must be non-negative");
    }
    schedule.mode = MeasurementSchedule::Discrete{times};
    resolved["times"] = times;
  } else {
    const double t_in = s.get<double>("t_in", default_t_in);
    const double rate = s.get<double>("rate", default_rate);
    if (!(t_in >= 0.0)) throw ConfigError("schedule.t_in: must be non-negative");
    if (!(rate > 0.0)) throw ConfigError("schedule.rate: must be positive");
    schedule.mode = MeasurementSchedule::Periodic{t_in, rate};
    resolved["t_in"] = t_in;
    resolved["rate"] = rate;
  }
  s.finish();
  run.resolved["schedule"] = resolved;
  return schedule;
}

RunOptions read_run_options(Section& root, Run& run, const Overrides& o, std::size_t fallback) {
  RunOptions opts;
  opts.n_samples = root.get<std::size_t>("n_samples", fallback);
  if (opts.n_samples < 1) throw ConfigError("n_samples: must be positive");
  run.resolved["n_samples"] = opts.n_samples;
  opts.base_seed = read_seed(root, run, o);
  opts.workers = read_workers(root, run, o);
  opts.cfg = read_evolution(root);
  run.resolved["evolution"] = evolution_to_json(opts.cfg);
  return opts;
}

std::function<void()> setup_repeated(Section& root, Run& run, const Overrides& o) {
  const auto model_cfg = read_model(root, ModelConfig{5, "waveguide", 0.34});
  if (model_cfg.n < 2) throw ConfigError("model.n: must be at least 2");
  run.resolved["model"] = model_cfg.to_json();
  const auto schedule = read_schedule(root, run, model_cfg.n, 0.25, 20.0);
  const double t_final = root.get<double>("t_final", 10.0);
  if (!(t_final > 0.0)) throw ConfigError("t_final: must be positive");
  run.resolved["t_final"] = t_final;
  const auto samples = grid(root, run, "samples", linear_grid(0.0, t_final, 101));
  if (samples.back() > t_final) throw ConfigError("samples: must not exceed t_final");
  const Engine engine = read_engine(root, run, o, Engine::DensityNonselective);
  const auto opts = read_run_options(root, run, o, 1000);
  const bool zeno = root.get<bool>("zeno", false);
  const auto* periodic = std::get_if<MeasurementSchedule::Periodic>(&schedule.mode);
  if (zeno && (periodic == nullptr || schedule.observable != Observable::X)) {
    throw ConfigError("zeno: needs a periodic sigma^x schedule");
  }
  run.resolved["zeno"] = zeno;
  const double zeno_start = periodic != nullptr ? periodic->t_in : 0.0;

  return [=, &run] {
    const auto model = model_cfg.build();
    const auto result = repeated_measurement_run(model, schedule, engine, t_final, samples, opts);
    std::vector<double> zeno_curve(samples.size(), std::nan(""));
    if (zeno) {
      const ZenoGenerator gen(model, schedule.site);
      const auto start = zeno_initial_state(model, schedule.site, zeno_start, Observable::X,
                                            opts.cfg);
      std::vector<double> shifted;
      std::size_t first = 0;
      while (first < samples.size() && samples[first] < zeno_start) ++first;
      for (std::size_t k = first; k < samples.size(); ++k) {
        shifted.push_back(samples[k] - zeno_start);
      }
      const auto values = zeno_psub_series(start, gen, shifted, opts.cfg);
      for (std::size_t k = 0; k < values.size(); ++k) zeno_curve[first + k] = values[k];
    }
    for (const auto& name : result.names) {
      const auto c = result.column(name);
      const bool with_zeno = zeno && name == "P_sub_rest";
      std::vector<std::string> header{"t", "mean", "stderr"};
      if (with_zeno) header.push_back("zeno");
      Csv csv(header);
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        csv.num(samples[k]).num(result.stats.mean(i, c)).num(result.stats.stderr_(i, c));
        if (with_zeno) csv.num(zeno_curve[k]);
        csv.end_row();
      }
      run.add("repeated_" + name + ".csv", std::move(csv));
    }
  };
}

std::function<void()> setup_purity(Section& root, Run& run, const Overrides& o) {
  const auto model_cfg = read_model(root, ModelConfig{5, "waveguide", 0.34});
  if (model_cfg.n < 2) throw ConfigError("model.n: must be at least 2");
  run.resolved["model"] = model_cfg.to_json();
  const auto schedule = read_schedule(root, run, model_cfg.n, 0.25, 20.0);
  const double rabi = root.get<double>("rabi", 10.0);
  if (!(rabi >= 0.0)) throw ConfigError("rabi: must be non-negative");
  run.resolved["rabi"] = rabi;
  const double t_final = root.get<double>("t_final", 10.0);
  if (!(t_final > 0.0)) throw ConfigError("t_final: must be positive");
  run.resolved["t_final"] = t_final;
  const auto samples = grid(root, run, "samples", linear_grid(0.0, t_final, 51));
  if (samples.back() > t_final) throw ConfigError("samples: must not exceed t_final");
  const Engine engine = read_engine(root, run, o, Engine::Mcwf);
  if (engine == Engine::DensitySampled) {
    throw ConfigError("engine: density_sampled cannot run the driven comparison");
  }
  const auto opts = read_run_options(root, run, o, 2000);

  return [=, &run] {
    const auto model = model_cfg.build();
    const auto measured = repeated_measurement_run(model, schedule, engine, t_final, samples, opts);
    const auto driven = strong_drive_run(model, schedule.site, rabi, t_final, samples, opts, engine);
    for (const auto& name : measured.names) {
      const auto c = measured.column(name);
      Csv csv({"t", "measured_mean", "measured_stderr", "driven_mean", "driven_stderr"});
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        csv.num(samples[k])
            .num(measured.stats.mean(i, c))
            .num(measured.stats.stderr_(i, c))
            .num(driven.stats.mean(i, c))
            .num(driven.stats.stderr_(i, c))
            .end_row();
      }
      run.add("purity_" + name + ".csv", std::move(csv));
    }
  };
}

std::function<void()> setup_zeno_sweep(Section& root, Run& run, const Overrides& o) {
  reject_engine(o, run.subcommand);
  const int n = read_n(root, run, 5, 2, 9);
  const auto ds = grid(root, run, "d", linear_grid(0.0, 1.0, 101));
  for (double d : ds) {
    if (d > 1.0) throw ConfigError("d: values must lie in [0, 1]");
  }
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i + 1;
  const auto sites = root.get<std::vector<int>>("sites", all);
  if (sites.empty()) throw ConfigError("sites: must not be empty");
  for (int s : sites) check_site(s, n, "sites");
  run.resolved["sites"] = sites;
  const std::string method_name = root.get<std::string>("method", "sparse_solve");
  std::optional<ZenoMethod> method;
  try {
    method = zeno_method_from_string(method_name);
  } catch (const InvalidArgument&) {
    throw ConfigError("method: expected longtime, linear_solve or sparse_solve");
  }
  if (method == ZenoMethod::LinearSolve && n - 1 > 4) {
    throw ConfigError("method: linear_solve is limited to n <= 5");
  }
  run.resolved["method"] = method_name;
  ZenoSteadyOptions zopts;
  zopts.rate_tol = root.get<double>("rate_tol", zopts.rate_tol);
  zopts.horizon = root.get<double>("horizon", zopts.horizon);
  if (!(zopts.rate_tol > 0.0 && zopts.horizon > 0.0)) {
    throw ConfigError("rate_tol and horizon must be positive");
  }
  run.resolved["rate_tol"] = zopts.rate_tol;
  run.resolved["horizon"] = zopts.horizon;
  zopts.cfg = read_evolution(root);
  run.resolved["evolution"] = evolution_to_json(zopts.cfg);
  const int workers = read_workers(root, run, o);

  return [=, &run] {
    const auto sweep = zeno_sweep(n, ds, sites, workers, method, zopts);
    std::vector<std::string> header{"d"};
    for (int s : sites) header.push_back("site_" + std::to_string(s));
    Csv csv(header);
    for (std::size_t r = 0; r < ds.size(); ++r) {
      csv.num(ds[r]);
      for (std::size_t c = 0; c < sites.size(); ++c) {
        csv.num(sweep.table(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
      }
      csv.end_row();
    }
    run.add("zeno_sweep.csv", std::move(csv));
    run.results["best_d"] = sweep.best_d;
    run.results["best_site"] = sweep.best_site;
    run.results["best_value"] = sweep.best_value;
    run.results["fallbacks"] = sweep.fallbacks;
  };
}

std::function<void()> setup_double_measure(Section& root, Run& run, const Overrides& o) {
  reject_engine(o, run.subcommand);
  const int n = read_n(root, run, 4, 3, 8);
  const Observable obs = read_observable(root, "observable", Observable::Z);
  run.resolved["observable"] = to_string(obs);
  const double t_m = root.get<double>("t_m", optimal_tm_z(n));
  if (!(t_m >= 0.0)) throw ConfigError("t_m: must be non-negative");
  run.resolved["t_m"] = t_m;
  const auto taus = grid(root, run, "tau", linear_grid(0.0, 3.0, 31));
  const auto cfg = read_evolution(root);
  run.resolved["evolution"] = evolution_to_json(cfg);

  return [=, &run] {
    Csv totals({"tau", "psub_same", "psub_different", "psub_single"});
    Csv sectors({"tau", "two_j", "population_same", "population_different"});
    for (double tau : taus) {
      const auto same = pse_double_measurement(n, obs, t_m, tau, true, cfg);
      const auto diff = pse_double_measurement(n, obs, t_m, tau, false, cfg);
      totals.num(tau).num(same.psub_total).num(diff.psub_total).num(same.psub_single).end_row();
      for (std::size_t k = 0; k < same.sectors.size(); ++k) {
        sectors.num(tau)
            .integer(same.sectors[k].two_j)
            .num(same.sectors[k].population)
            .num(diff.sectors[k].population)
            .end_row();
      }
    }
    run.add("double_measure.csv", std::move(totals));
    run.add("double_measure_sectors.csv", std::move(sectors));
  };
}

std::function<void()> setup_analytic_tables(Section& root, Run& run, const Overrides& o) {
  reject_engine(o, run.subcommand);
  const int n = read_n(root, run, 4, 2, 64);
  const auto ts = grid(root, run, "t", linear_grid(0.0, 5.0, 51));
  const auto tms = grid(root, run, "t_m", log_grid(1e-3, 10.0, 20));
  const std::string method_name = root.get<std::string>("method", "ode");
  WaitingMethod method;
  try {
    method = waiting_method_from_string(method_name);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("method: ") + e.what());
  }
  if (method == WaitingMethod::ExactIlt && n > 12) {
    throw ConfigError("method: exact_ilt is limited to n <= 12");
  }
  run.resolved["method"] = to_string(method);

  return [=, &run] {
    Csv waiting({"t", "k", "P"});
    for (double t : ts) {
      const RealVector p = waiting_dist(n, t, method);
      for (Eigen::Index k = 0; k < p.size(); ++k) waiting.num(t).integer(k).num(p(k)).end_row();
    }
    Csv fmu({"k", "f_x", "f_z"});
    for (int k = 0; k <= n; ++k) fmu.integer(k).num(f_x(n, k)).num(f_z(n, k)).end_row();
    Csv recip({"t_m", "P_x", "P_z", "residual"});
    for (double t : tms) {
      const RealVector p = waiting_dist(n, t, method);
      recip.num(t)
          .num(psub_ss(p, Observable::X))
          .num(psub_ss(p, Observable::Z))
          .num(reciprocity_residual(n, t))
          .end_row();
    }
    run.add("waiting_dist.csv", std::move(waiting));
    run.add("f_mu.csv", std::move(fmu));
    run.add("reciprocity.csv", std::move(recip));
    run.results["optimal_t_m_z"] = optimal_tm_z(n);
  };
}

using Setup = std::function<std::function<void()>(Section&, Run&, const Overrides&)>;

const std::map<std::string, std::pair<Setup, std::string>>& subcommands() {
  static const std::map<std::string, std::pair<Setup, std::string>> table{
      {"pse-single", {setup_pse_single, "steady subradiance after one measurement, analytic and numeric"}},
      {"lifetime", {setup_lifetime, "decay time of the excitation number with and without a measurement"}},
      {"repeated", {setup_repeated, "observables under repeated measurements of one site"}},
      {"purity", {setup_purity, "repeated measurements compared with a strong drive"}},
      {"zeno-sweep", {setup_zeno_sweep, "steady subradiance in the Zeno limit over spacing and site"}},
      {"double-measure", {setup_double_measure, "two measurements on a symmetric ensemble"}},
      {"analytic-tables", {setup_analytic_tables, "waiting-time distribution, f_mu and reciprocity"}},
  };
  return table;
}

json versions() {
  return json{{"subrad", SUBRAD_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"cli11", CLI11_VERSION},
              {"compiler", __VERSION__}};
}

int execute(const std::string& sub, const std::optional<std::string>& config_path,
            const Overrides& overrides) {
  const auto start = std::chrono::steady_clock::now();
  const json config = config_path ? load_config(*config_path) : json::object();
  Section root(config, "");
  Run run;
  run.subcommand = sub;
  const std::string tag = root.get<std::string>("experiment", sub);
  if (tag != sub) {
    throw ConfigError("experiment: config is for '" + tag + "', not '" + sub + "'");
  }
  run.resolved["experiment"] = sub;
  run.out_dir = overrides.out.value_or(root.get<std::string>("output_dir", "out"));

  auto body = subcommands().at(sub).first(root, run, overrides);
  root.finish();
  run.resolved["output_dir"] = run.out_dir.string();

  body();

  fs::create_directories(run.out_dir);
  json outputs = json::array();
  for (const auto& [name, csv] : run.tables) {
    csv.write(run.out_dir / name);
    outputs.push_back(name);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest{{"subcommand", sub},
                {"config", run.resolved},
                {"base_seed", run.base_seed},
                {"workers", run.workers},
                {"outputs", outputs},
                {"results", run.results},
                {"versions", versions()},
                {"wall_time_s", wall}};
  std::ofstream(run.out_dir / (sub + "_manifest.json")) << manifest.dump(2) << '\n';
  std::cout << "wrote " << outputs.size() << " table(s) to " << run.out_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subradiance from local measurements: experiment runner"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out, engine;
  auto* config_opt = app.add_option("--config", config_path, "JSON run configuration")
                         ->envname("SUBRAD_CONFIG");
  auto* seed_opt = app.add_option("--seed", seed, "base seed")->envname("SUBRAD_SEED");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads")
                          ->envname("SUBRAD_WORKERS");
  auto* out_opt = app.add_option("--out", out, "output directory")->envname("SUBRAD_OUT");
  auto* engine_opt = app.add_option("--engine", engine,
                                    "density_sampled, density_nonselective or mcwf")
                         ->envname("SUBRAD_ENGINE");

  for (const auto& [name, entry] : subcommands()) app.add_subcommand(name, entry.second);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  Overrides overrides;
  if (*seed_opt) overrides.seed = seed;
  if (*workers_opt) overrides.workers = workers;
  if (*out_opt) overrides.out = out;
  if (*engine_opt) overrides.engine = engine;
  std::optional<std::string> config;
  if (*config_opt) config = config_path;

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return execute(sub, config, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: invariant '" << e.invariant() << "' violated: " << e.what()
              << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
