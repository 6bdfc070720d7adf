#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mmcplace/config.hpp"
#include "mmcplace/cost.hpp"
#include "mmcplace/scenario.hpp"

namespace mmcplace {

/// A: MMC-only, never migrate. B: MMC-only, follow the user. C: backend only.
/// D: online with exact costs and known departures. E: online with predicted costs.
enum class Policy { A, B, C, D, E };

char policy_letter(Policy p);
std::optional<Policy> parse_policy(char c);
/// "all" or a list of letters such as "a,c,e"; order follows A..E.
std::vector<Policy> parse_policy_list(const std::string& text);

/// Topology, activity and instances for one demand seed.
struct Scenario {
  HexTopology topology;
  UserActivity activity;
  std::vector<ServiceInstance> instances;
  int slots = 0;
};

/// The mobility trace of a config: the referenced file, or generated from
/// mobility_seed when no file is given. Throws TraceIoError.
MobilityTrace scenario_trace(const Config& config);
/// Ingests the trace and draws service demand from `seed`.
Scenario build_scenario(const Config& config, const MobilityTrace& trace, std::uint64_t seed);

/// Largest demands and departures per slot of a scenario against the configured bounds.
struct AssumptionReport {
  double max_local_demand = 0.0;
  double max_migration_demand = 0.0;
  int max_departures = 0;
  bool demands_bounded = true;
  bool departures_bounded = true;
};

AssumptionReport check_assumptions(const Scenario& scenario, const ScenarioSection& bounds);

MmcBackendCostModel scenario_cost_model(const Config& config, const HexTopology& topology);

/// Window used by D and E for a given beta: the configured one, or the closed-form T*
/// capped at max_window when set.
int policy_window(const Config& config, double beta);

struct SlotRecord {
  int slot = 0;
  double actual_cost = 0.0;
  int num_active = 0;
  int num_migrations = 0;
  double migration_cost = 0.0;
};

struct PolicyResult {
  Policy policy = Policy::A;
  std::vector<SlotRecord> slots;
  ConfigurationMatrix placement;
  int window = 0;  // D and E only
  double runtime_ms = 0.0;
  std::vector<std::string> decisions;  // overflow and infeasibility notes

  double average_cost() const;
  double max_migration_cost() const;
};

struct RunOptions {
  std::optional<int> window;  // overrides policy_window
  std::optional<double> beta;  // overrides predictor.beta for E
};

/// Actual per-slot costs of one policy. `seed` drives the prediction noise.
PolicyResult run_policy(const Scenario& scenario, const Config& config, Policy policy,
                        std::uint64_t seed, const RunOptions& options = {});

struct SweepRow {
  int T = 0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  double avg_cost = 0.0;
  bool is_tstar = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // ordered by (beta, T, seed)
  std::vector<double> betas;
  std::vector<int> T_values;
  std::vector<int> T_star;  // per beta
  /// Mean over seeds, [beta index][T index].
  std::vector<std::vector<double>> mean;

  /// T with the lowest mean cost for beta index b (lowest T on ties).
  int measured_argmin(std::size_t b) const;
};

/// Policy E at every (T, beta, seed). T* per beta comes from the window optimizer
/// over the same T range. Runs are spread over `jobs` threads (0 = all cores).
SweepResult sweep_window(const Config& config, const MobilityTrace& trace,
                         const std::vector<int>& T_values, const std::vector<double>& betas,
                         const std::vector<std::uint64_t>& seeds, int jobs = 0);

struct RatioPoint {
  int arrivals = 0;
  double mean_online = 0.0;
  double mean_fractional = 0.0;
  double ratio = 1.0;
};

/// Single-slot synthetic arrivals placed greedily on arrival, against the
/// fractional lower bound, after every arrival m = 1..n. Seeds are 1..seeds.
std::vector<RatioPoint> synthetic_ratio_experiment(const SyntheticSection& params, int jobs = 0);

struct OracleTrial {
  int trial = 0;
  double online = 0.0;
  double offline = 0.0;
  double ratio = 1.0;
  double phi = 1.0;
  double psi = 1.0;
  bool gap_ok = true;
  bool linear_exact = true;  // always true for non-linear models
};

/// Random single-window instances: online placement against exhaustive search.
std::vector<OracleTrial> oracle_check(const OracleSection& params);

void write_results_csv(std::ostream& out, const std::vector<PolicyResult>& results);
void write_summary_csv(std::ostream& out, const std::vector<PolicyResult>& results);
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
void write_ratio_csv(std::ostream& out, const std::vector<RatioPoint>& points);
void write_oracle_csv(std::ostream& out, const std::vector<OracleTrial>& trials);

/// Runs f(0) .. f(n-1) on up to `jobs` threads (0 = hardware concurrency).
void parallel_for(int n, int jobs, const std::function<void(int)>& f);

}  // namespace mmcplace
