#include "config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace subrad::cli {

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    // Translate the byte offset into a line and column.
    const std::size_t offset = std::min<std::size_t>(e.byte, text.size());
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < offset; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(column) +
                      ": parse error: " + e.what());
  }
}

Section::Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
  if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
}

bool Section::has(const std::string& key) const { return node_.contains(key); }

const json& Section::raw(const std::string& key) {
  used_.insert(key);
  return node_.at(key);
}

Section Section::child(const std::string& key) {
  used_.insert(key);
  if (!node_.contains(key)) {
    static const json empty = json::object();
    return Section(empty, where(key));
  }
  return Section(node_.at(key), where(key));
}

void Section::finish() const {
  for (auto it = node_.begin(); it != node_.end(); ++it) {
    if (!used_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown key");
  }
}

std::string Section::where(const std::string& key) const {
  return path_.empty() ? key : path_ + "." + key;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (points < 1) throw ConfigError("a grid needs at least one point");
  if (points == 1) return {lo};
  std::vector<double> v(points);
  for (int i = 0; i < points; ++i) v[i] = lo + (hi - lo) * i / (points - 1);
  v.back() = hi;
  return v;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi > 0.0)) throw ConfigError("log grids need positive bounds");
  auto v = linear_grid(std::log10(lo), std::log10(hi), points);
  for (auto& x : v) x = std::pow(10.0, x);
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::vector<double> read_grid(Section& parent, const std::string& key,
                              const std::vector<double>& fallback) {
  if (!parent.has(key)) return fallback;
  const json& node = parent.raw(key);
  if (node.is_array()) {
    try {
      return node.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(parent.where(key) + ": " + e.what());
    }
  }
  Section grid(node, parent.where(key));
  const double lo = grid.require<double>("min");
  const double hi = grid.require<double>("max");
  const int points = grid.require<int>("points");
  const std::string spacing = grid.get<std::string>("spacing", "linear");
  grid.finish();
  if (points < 1) throw ConfigError(parent.where(key) + ".points: must be positive");
  if (hi < lo) throw ConfigError(parent.where(key) + ": max is below min");
  if (spacing == "linear") return linear_grid(lo, hi, points);
  if (spacing == "log") return log_grid(lo, hi, points);
  throw ConfigError(parent.where(key) + ".spacing: expected linear or log");
}

CouplingModel ModelConfig::build() const {
  if (geometry == "pse") return build_couplings(PseGeometry{}, n);
  return build_couplings(WaveguideGeometry{d}, n);
}

json ModelConfig::to_json() const {
  json j{{"n", n}, {"geometry", geometry}};
  if (geometry == "waveguide") j["d"] = d;
  return j;
}

ModelConfig read_model(Section& root, const ModelConfig& fallback) {
  Section s = root.child("model");
  ModelConfig m = fallback;
  m.n = s.get<int>("n", fallback.n);
  m.geometry = s.get<std::string>("geometry", fallback.geometry);
  if (m.geometry != "pse" && m.geometry != "waveguide") {
    throw ConfigError(s.where("geometry") + ": expected pse or waveguide");
  }
  m.d = s.get<double>("d", fallback.d);
  s.finish();
  if (m.n < 1 || m.n > 12) throw ConfigError(s.where("n") + ": must lie in 1..12");
  if (!(m.d >= 0.0)) throw ConfigError(s.where("d") + ": must be non-negative");
  return m;
}

EvolutionConfig read_evolution(Section& root) {
  Section s = root.child("evolution");
  EvolutionConfig cfg;
  cfg.rtol = s.get<double>("rtol", cfg.rtol);
  cfg.atol = s.get<double>("atol", cfg.atol);
  cfg.dt_max = s.get<double>("dt_max", cfg.dt_max);
  cfg.dt_initial = s.get<double>("dt_initial", cfg.dt_initial);
  cfg.t_horizon = s.get<double>("t_horizon", cfg.t_horizon);
  cfg.steady_eps = s.get<double>("steady_eps", cfg.steady_eps);
  cfg.renormalize_trace = s.get<bool>("renormalize_trace", cfg.renormalize_trace);
  s.finish();
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw ConfigError(root.where("evolution") + ": " + e.what());
  }
  return cfg;
}

json evolution_to_json(const EvolutionConfig& cfg) {
  return json{{"rtol", cfg.rtol},
              {"atol", cfg.atol},
              {"dt_max", cfg.dt_max},
              {"dt_initial", cfg.dt_initial},
              {"t_horizon", cfg.t_horizon},
              {"steady_eps", cfg.steady_eps},
              {"renormalize_trace", cfg.renormalize_trace}};
}

}  // namespace subrad::cli
