#pragma once

// JSON run configuration with strict key checking.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "subrad/integrator.hpp"
#include "subrad/qops.hpp"

namespace subrad::cli {

using json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a config file; errors carry the line and column.
json load_config(const std::string& path);

/// View of one JSON object. Every key must be read before finish() is called,
/// otherwise the leftover keys are reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path);

  bool has(const std::string& key) const;
  const json& raw(const std::string& key);

  template <class T>
  T get(const std::string& key, const T& fallback) {
    if (!has(key)) return fallback;
    return convert<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(where(key) + ": required key is missing");
    return convert<T>(key);
  }

  Section child(const std::string& key);
  void finish() const;
  std::string where(const std::string& key) const;

 private:
  template <class T>
  T convert(const std::string& key) {
    used_.insert(key);
    try {
      return node_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

/// A list of numbers, or {"min", "max", "points", "spacing": "linear" | "log"}.
std::vector<double> read_grid(Section& parent, const std::string& key,
                              const std::vector<double>& fallback);
std::vector<double> linear_grid(double lo, double hi, int points);
std::vector<double> log_grid(double lo, double hi, int points);

struct ModelConfig {
  int n = 4;
  std::string geometry = "waveguide";
  double d = 0.34;

  CouplingModel build() const;
  json to_json() const;
};

ModelConfig read_model(Section& root, const ModelConfig& fallback);
EvolutionConfig read_evolution(Section& root);
json evolution_to_json(const EvolutionConfig& cfg);

}  // namespace subrad::cli
