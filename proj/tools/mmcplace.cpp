// mmcplace: run placement policies, window sweeps and oracle checks from a config file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "mmcplace/config.hpp"
#include "mmcplace/scenario.hpp"
#include "mmcplace/simulator.hpp"

namespace fs = std::filesystem;
using namespace mmcplace;

namespace {

constexpr int kExitOracle = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTrace = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("mmcplace");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MMCPLACE_LOG"))
    spdlog::set_level(spdlog::level::from_str(level));
}

Config read_config(const std::string& path) {
  if (path.empty()) return Config{};
  return load_config(path);
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / name);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", (dir / name).string()));
  return out;
}

std::vector<int> parse_T_range(const std::string& text) {
  int lo = 0, hi = 0;
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      lo = hi = std::stoi(text);
    } else {
      lo = std::stoi(text.substr(0, dots));
      hi = std::stoi(text.substr(dots + 2));
    }
  } catch (const std::exception&) {
    throw UsageError(fmt::format("--T-range: expected N or A..B, got '{}'", text));
  }
  if (lo < 1 || hi < lo) throw UsageError(fmt::format("--T-range: invalid range '{}'", text));
  std::vector<int> out;
  for (int T = lo; T <= hi; ++T) out.push_back(T);
  return out;
}

std::vector<double> parse_beta_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size() || out.back() < 0) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(fmt::format("--beta-list: bad value '{}'", item));
    }
  }
  if (out.empty()) throw UsageError("--beta-list: no values");
  return out;
}

// A count ("8", seeds base..base+7) or an explicit list ("1,4,9").
std::vector<std::uint64_t> parse_seeds(const std::string& text, std::uint64_t base) {
  std::vector<std::uint64_t> out;
  try {
    if (text.find(',') == std::string::npos) {
      const int n = std::stoi(text);
      if (n < 1) throw std::invalid_argument(text);
      for (int i = 0; i < n; ++i) out.push_back(base + static_cast<std::uint64_t>(i));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
    }
  } catch (const std::exception&) {
    throw UsageError(fmt::format("--seeds: expected a count or a list, got '{}'", text));
  }
  return out;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> slots;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "Scenario config (INI)");
    cmd->add_option("--seed", seed, "Base random seed");
    cmd->add_option("--slots", slots, "Number of slots to simulate");
    cmd->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
    cmd->add_option("--out-dir", out_dir, "Directory for CSV output");
  }

  Config load() const {
    Config c = read_config(config);
    if (seed) c.simulate.seed = *seed;
    if (slots) c.scenario.slots = *slots;
    if (jobs) c.simulate.jobs = *jobs;
    if (out_dir) c.simulate.out_dir = *out_dir;
    validate(c, config.empty() ? "<defaults>" : config);
    return c;
  }
};

int cmd_simulate(const Common& common, const std::string& policy_text,
                 const std::optional<int>& window) {
  Config config = common.load();
  if (window) config.window.window = *window;
  if (!policy_text.empty()) config.simulate.policies = policy_text;
  std::vector<Policy> policies;
  try {
    policies = parse_policy_list(config.simulate.policies);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(common.config, 0, "simulate.policies", e.what());
  }

  const MobilityTrace trace = scenario_trace(config);
  const Scenario sc = build_scenario(config, trace, config.simulate.seed);
  spdlog::info("{} users, {} instances, {} slots", sc.activity.user_count(), sc.instances.size(),
               sc.slots);
  const AssumptionReport bounds = check_assumptions(sc, config.scenario);
  std::vector<PolicyResult> results(policies.size());
  parallel_for(static_cast<int>(policies.size()), config.simulate.jobs, [&](int i) {
    results[i] = run_policy(sc, config, policies[i], config.simulate.seed);
  });

  const fs::path dir = config.simulate.out_dir;
  auto results_csv = open_output(dir, "results.csv");
  write_results_csv(results_csv, results);
  auto summary_csv = open_output(dir, "summary.csv");
  write_summary_csv(summary_csv, results);
  auto decisions = open_output(dir, "decisions.csv");
  decisions << "policy,message\n";
  for (const PolicyResult& r : results)
    for (const std::string& d : r.decisions) decisions << policy_letter(r.policy) << "," << d << "\n";

  std::cout << fmt::format("{:<8}{:>14}{:>10}{:>14}\n", "policy", "avg_cost", "window", "runtime_ms");
  for (const PolicyResult& r : results)
    std::cout << fmt::format("{:<8}{:>14.6f}{:>10}{:>14.1f}\n", policy_letter(r.policy),
                             r.average_cost(), r.window > 0 ? std::to_string(r.window) : "-",
                             r.runtime_ms);
  std::cout << fmt::format("bounded inputs: demands {} (max {}/{}, bounds {}/{}), departures per slot {} "
                           "(max {}, bound {})\n",
                           bounds.demands_bounded ? "hold" : "exceed", bounds.max_local_demand,
                           bounds.max_migration_demand, config.scenario.a_max, config.scenario.b_max,
                           bounds.departures_bounded ? "hold" : "exceed", bounds.max_departures,
                           config.scenario.max_departures);
  return 0;
}

int cmd_sweep(const Common& common, const std::string& T_range, const std::string& betas_text,
              const std::string& seeds_text) {
  const Config config = common.load();
  const std::vector<int> T_values =
      T_range.empty() ? parse_T_range(fmt::format("{}..{}", config.window.t_min, config.window.t_max))
                      : parse_T_range(T_range);
  const std::vector<double> betas = betas_text.empty() ? config.window.betas : parse_beta_list(betas_text);
  const std::vector<std::uint64_t> seeds =
      parse_seeds(seeds_text.empty() ? std::to_string(config.simulate.seeds) : seeds_text,
                  config.simulate.seed);

  const MobilityTrace trace = scenario_trace(config);
  const SweepResult res = sweep_window(config, trace, T_values, betas, seeds, config.simulate.jobs);
  auto csv = open_output(config.simulate.out_dir, "sweep.csv");
  write_sweep_csv(csv, res);

  for (std::size_t b = 0; b < betas.size(); ++b) {
    std::cout << fmt::format("beta {}: T* = {}, lowest measured cost at T = {}\n", betas[b],
                             res.T_star[b], res.measured_argmin(b));
    for (std::size_t j = 0; j < T_values.size(); ++j)
      std::cout << fmt::format("  T={:<4}{:>12.6f}{}\n", T_values[j], res.mean[b][j],
                               T_values[j] == res.T_star[b] ? "  *" : "");
  }
  return 0;
}

int cmd_oracle(const Common& common, const std::optional<int>& instances,
               const std::optional<int>& trials, const std::string& model) {
  Config config = common.load();
  if (instances) config.oracle.instances = *instances;
  if (trials) config.oracle.trials = *trials;
  if (!model.empty()) config.oracle.model = model;
  if (common.seed) config.oracle.seed = *common.seed;
  validate(config, common.config);

  const auto trials_out = oracle_check(config.oracle);
  auto csv = open_output(config.simulate.out_dir, "oracle.csv");
  write_oracle_csv(csv, trials_out);
  if (trials_out.empty()) {
    std::cout << "no instances to place; nothing to check\n";
    return 0;
  }
  int failures = 0;
  const bool linear = config.oracle.model == "linear";
  for (const OracleTrial& t : trials_out) {
    const bool ok = t.gap_ok && t.linear_exact;
    failures += !ok;
    std::cout << fmt::format("trial {:>4}: online/offline {:.6f}  gap {}{}\n", t.trial, t.ratio,
                             t.gap_ok ? "pass" : "FAIL",
                             linear ? fmt::format("  linear-exact {}", t.linear_exact ? "pass" : "FAIL")
                                    : "");
  }
  std::cout << fmt::format("{} of {} trials passed\n", trials_out.size() - failures, trials_out.size());
  return failures == 0 ? 0 : kExitOracle;
}

int cmd_convert(const std::string& input, const std::string& output) {
  const MobilityTrace trace = convert_cabspotting_dir(input);
  write_trace_csv(fs::path(output), trace);
  std::cout << fmt::format("wrote {} records from {} users to {} ({} malformed lines skipped)\n",
                           trace.records.size(), trace.users().size(), output, trace.malformed);
  return 0;
}

int cmd_synthetic(const Common& common, const std::optional<int>& arrivals,
                  const std::optional<int>& seeds) {
  Config config = common.load();
  if (arrivals) config.synthetic.arrivals = *arrivals;
  if (seeds) config.synthetic.seeds = *seeds;
  validate(config, common.config);
  const auto points = synthetic_ratio_experiment(config.synthetic, config.simulate.jobs);
  auto csv = open_output(config.simulate.out_dir, "ratio.csv");
  write_ratio_csv(csv, points);
  for (const RatioPoint& p : points)
    if (p.arrivals == 1 || p.arrivals % 500 == 0 || p.arrivals == static_cast<int>(points.size()))
      std::cout << fmt::format("m={:<6}online {:>12.4f}  bound {:>12.4f}  ratio {:.4f}\n", p.arrivals,
                               p.mean_online, p.mean_fractional, p.ratio);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Service placement for mobile micro-clouds"};
  app.require_subcommand(1);

  Common common;
  std::string policy, T_range, beta_list, seeds_text, model, input_dir, output_csv;
  std::optional<int> window, instances, trials, arrivals, synth_seeds;

  auto* simulate = app.add_subcommand("simulate", "Run policies A-E over the scenario");
  common.add(simulate);
  simulate->add_option("--policy", policy, "a|b|c|d|e|all, or a list such as a,e");
  simulate->add_option("--window", window, "Fixed look-ahead window for D and E");

  auto* sweep = app.add_subcommand("sweep-window", "Average cost of E per window size and beta");
  common.add(sweep);
  sweep->add_option("--T-range", T_range, "Window sizes, N or A..B");
  sweep->add_option("--beta-list", beta_list, "Comma-separated error-bound scales");
  sweep->add_option("--seeds", seeds_text, "Seed count from --seed, or a comma-separated list");

  auto* oracle = app.add_subcommand("oracle-check", "Online placement against exhaustive search");
  common.add(oracle);
  oracle->add_option("--instances", instances, "Instances per trial");
  oracle->add_option("--trials", trials, "Number of trials");
  oracle->add_option("--model", model, "linear or quadratic");

  auto* convert = app.add_subcommand("convert-trace", "Normalize a directory of taxi traces");
  convert->add_option("input_dir", input_dir, "Directory of per-taxi files")->required();
  convert->add_option("output_csv", output_csv, "Normalized CSV to write")->required();

  auto* synthetic = app.add_subcommand("synthetic-ratio", "Single-slot online vs fractional bound");
  common.add(synthetic);
  synthetic->add_option("--arrivals", arrivals, "Arrivals per seed");
  synthetic->add_option("--synthetic-seeds", synth_seeds, "Number of seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*simulate) return cmd_simulate(common, policy, window);
    if (*sweep) return cmd_sweep(common, T_range, beta_list, seeds_text);
    if (*oracle) return cmd_oracle(common, instances, trials, model);
    if (*convert) return cmd_convert(input_dir, output_csv);
    if (*synthetic) return cmd_synthetic(common, arrivals, synth_seeds);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TraceIoError& e) {
    std::cerr << "trace error: " << e.what() << "\n";
    return kExitTrace;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
