#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmcplace/predictor.hpp"

namespace mmcplace {

struct ScenarioSection {
  int cells = 19;                 // MMCs; the backend is added on top
  double anchor_lat = 37.762;
  double anchor_lon = -122.43;
  double spacing = 1000.0;        // m between adjacent cell centers
  int slots = 200;
  int slot_seconds = 60;
  int staleness = 600;            // s
  std::int64_t start = 1212192000;
  std::string trace;              // normalized CSV; empty = generated mobility
  int users = 10;                 // generated mobility only
  std::uint64_t mobility_seed = 1;
  double speed_min = 3.0;
  double speed_max = 10.0;
  double pause_mean = 300.0;
  double report_mean = 60.0;
  // Bounds on demands and departures per slot; only reported, never enforced.
  double a_max = 1.5;
  double b_max = 1.5;
  int max_departures = 1;

  bool operator==(const ScenarioSection&) const = default;
};

struct DemandSection {
  double mean_on = 50.0;   // slots
  double mean_off = 10.0;  // slots
  double local_demand = 1.0;
  double migration_demand = 1.0;
  int max_lifetime = 0;    // slots; 0 = unbounded

  bool operator==(const DemandSection&) const = default;
};

struct CostSection {
  double capacity = 5.0;            // Y
  double backend_local = 3.0;       // g~
  double backend_migration = 3.0;   // h~
  double distance_local = 0.2;      // g
  double distance_migration = 0.2;  // h

  bool operator==(const CostSection&) const = default;
};

struct PredictorSection {
  double beta = 0.4;
  double alpha = 1.1;
  NoiseShape noise = NoiseShape::Uniform;
  int instance_bound = 0;  // 0 = number of users

  bool operator==(const PredictorSection&) const = default;
};

struct WindowSection {
  double gamma = 1.5;
  double sigma = 2.0;
  int window = 0;      // fixed window for D and E; 0 = optimizer
  int max_window = 0;  // cap on the optimizer's choice; 0 = none
  int t_min = 1;       // sweep range
  int t_max = 30;
  std::vector<double> betas{0.1, 0.4};

  bool operator==(const WindowSection&) const = default;
};

struct SimulateSection {
  std::uint64_t seed = 1;
  int seeds = 8;               // sweep seeds seed .. seed + seeds - 1
  std::string policies = "all";
  int jobs = 0;                // 0 = hardware concurrency
  std::string out_dir = "results";

  bool operator==(const SimulateSection&) const = default;
};

struct OracleSection {
  std::string model = "quadratic";  // linear | quadratic
  int instances = 2;
  int trials = 100;
  int clouds = 3;
  int slots = 3;
  std::uint64_t seed = 1;

  bool operator==(const OracleSection&) const = default;
};

struct SyntheticSection {
  int arrivals = 4000;
  int seeds = 20;
  int clouds = 5;  // including the backend
  double capacity = 5.0;
  double backend_local = 3.0;
  double departure_probability = 0.1;
  double demand_low = 0.5;
  double demand_high = 1.5;

  bool operator==(const SyntheticSection&) const = default;
};

struct Config {
  ScenarioSection scenario;
  DemandSection demand;
  CostSection cost;
  PredictorSection predictor;
  WindowSection window;
  SimulateSection simulate;
  OracleSection oracle;
  SyntheticSection synthetic;

  bool operator==(const Config&) const = default;
};

/// Parse or validation failure; line is 0 when unknown.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, int line, std::string field, const std::string& message);
  const std::string& source() const { return source_; }
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::string source_;
  int line_;
  std::string field_;
};

/// INI text with one section per module. Unknown sections or keys are errors;
/// missing keys keep their defaults.
Config parse_config(std::istream& in, const std::string& source = "<config>");
Config load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const Config& config);
std::string to_string(const Config& config);

/// Range checks across fields; throws ConfigError.
void validate(const Config& config, const std::string& source = "<config>");

NoiseShape parse_noise_shape(const std::string& text);
std::string to_string(NoiseShape shape);

}  // namespace mmcplace
