// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "mmcplace/offline.hpp"
#include "mmcplace/online.hpp"
#include "mmcplace/oracle.hpp"
#include "mmcplace/scenario.hpp"
#include "mmcplace/simulator.hpp"
#include "mmcplace/window.hpp"
#include "support.hpp"

using namespace mmcplace;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

constexpr double kExactRel = 1e-12;          // 1
constexpr double kLinearRel = 1e-9;          // 2
constexpr double kGapRel = 1e-9;             // 3
constexpr double kPolyEnvelope = 4.0 + 0.5;  // 4: Omega^Omega + delta, Omega = 2
constexpr double kBoundSlack = 1e-12;        // 6
constexpr double kRatioDrift = 0.05;         // 7
constexpr int kSweepTolerance = 2;           // 9
constexpr double kScalingTolerance = 0.25;   // 10

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

bool rel_close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(1.0, std::abs(b));
}

// Largest M with K^(M T) <= budget, capped.
int max_columns(int K, int T, int cap, double budget = 1e6) {
  if (K == 1) return cap;
  int M = 1;
  while (M < cap && std::pow(K, (M + 1) * T) <= budget) ++M;
  return M;
}

Outcome offline_exactness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  int mismatches = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int K = uniform_int(rng, 1, 3), M = uniform_int(rng, 1, 2);
    const Window w{1, uniform_int(rng, 1, 4)};
    const auto model = random_quadratic(rng, K, w.length);
    WindowProblem p;
    p.window = w;
    p.columns = random_instances(rng, w, M);
    const ActualPricer pricer(model);
    const double dp = solve_window_offline(p, pricer).cost;
    const double bf = brute_force_offline(p, pricer).cost;
    const double rel = std::abs(dp - bf) / std::max(1.0, std::abs(bf));
    worst = std::max(worst, rel);
    mismatches += rel >= kExactRel;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 30.0,
          fmt::format("200 instances, {} mismatches, max rel diff {:.2e}, {:.2f} s", mismatches, worst, secs)};
}

Outcome linear_online_optimality() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  int mismatches = 0, largest_M = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int K = uniform_int(rng, 1, 4);
    const Window w{1, uniform_int(rng, 1, 3)};
    const int M = uniform_int(rng, 1, max_columns(K, w.length, 8));
    largest_M = std::max(largest_M, M);
    const auto model = random_linear(rng, K, w.length);
    const auto inst = random_instances(rng, w, M);
    const ActualPricer pricer(model);
    WindowState st(w);
    for (const auto& i : inst) place_on_arrival(i, i.arrival_slot, st, pricer);
    const double online = window_cost(pricer, st.placement, st.columns, st.prev_config);
    WindowProblem p;
    p.window = w;
    p.columns = inst;
    const double best = brute_force_offline(p, pricer).cost;
    worst = std::max(worst, std::abs(online - best) / std::max(1.0, std::abs(best)));
    mismatches += !rel_close(online, best, kLinearRel);
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 60.0,
          fmt::format("200 instances (up to {} arrivals), {} mismatches, max rel diff {:.2e}, {:.2f} s",
                      largest_M, mismatches, worst, secs)};
}

struct GreedyRun {
  double online = 0.0;
  double offline = 0.0;
  LoadVector online_loads;
  LoadVector offline_loads;
  std::vector<LoadVector> states;
};

GreedyRun greedy_vs_offline(const CostModel& model, const Window& w,
                            const std::vector<ServiceInstance>& inst) {
  const int K = model.clouds();
  const ActualPricer pricer(model);
  WindowState st(w);
  GreedyRun r;
  for (const auto& i : inst) {
    place_on_arrival(i, i.arrival_slot, st, pricer);
    r.states.push_back(aggregate_loads(st.placement, st.columns, st.prev_config, K));
  }
  r.online_loads = r.states.back();
  r.online = window_cost(pricer, st.placement, st.columns, st.prev_config);
  WindowProblem p;
  p.window = w;
  p.columns = inst;
  const auto best = brute_force_offline(p, pricer);
  r.offline = best.cost;
  r.offline_loads = aggregate_loads(best.placement, inst, {}, K);
  return r;
}

Outcome gap_inequality() {
  std::mt19937_64 rng(303);
  int violations = 0;
  double phi_max = 1.0, psi_max = 1.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = uniform_int(rng, 2, 3);
    const Window w{1, uniform_int(rng, 1, 3)};
    const auto model = random_quadratic(rng, K, w.length);
    const auto inst = random_instances(rng, w, uniform_int(rng, 1, 3));
    const GreedyRun r = greedy_vs_offline(model, w, inst);
    const auto g = gap_constants(model, r.online_loads, elementwise_max(r.states),
                                 candidate_increments(inst, {}, w, K));
    const double psi = g.psi.value_or(1.0);
    phi_max = std::max(phi_max, g.phi);
    psi_max = std::max(psi_max, psi);
    const double lhs = window_cost(model, r.online_loads);
    const double rhs = window_cost(model, scale_loads(r.offline_loads, g.phi * psi));
    violations += lhs > rhs + kGapRel * std::max(1.0, std::abs(rhs));
  }
  return {violations == 0, fmt::format("100 instances, {} violations, max phi {:.4f}, max psi {:.4f}",
                                       violations, phi_max, psi_max)};
}

// Demands in [0.5, 1.5] and at most one departure per slot.
std::vector<ServiceInstance> bounded_instances(std::mt19937_64& rng, const Window& w, int M) {
  auto inst = random_instances(rng, w, M);
  std::map<int, int> departures;
  for (auto& i : inst) {
    i.max_lifetime.reset();
    if (i.departure_slot && departures[*i.departure_slot]++ > 0) i.departure_slot.reset();
  }
  return inst;
}

Outcome polynomial_envelope() {
  std::mt19937_64 rng(404);
  const ScenarioSection bounds;
  double worst = 0.0;
  int over = 0, unbounded = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int K = uniform_int(rng, 2, 3);
    const Window w{1, uniform_int(rng, 1, 3)};
    const auto model = random_quadratic(rng, K, w.length);
    const auto inst = bounded_instances(rng, w, uniform_int(rng, 1, max_columns(K, w.length, 4, 2e5)));
    Scenario sc;
    sc.slots = w.length;
    sc.instances = inst;
    const auto report = check_assumptions(sc, bounds);
    unbounded += !(report.demands_bounded && report.departures_bounded);
    const GreedyRun r = greedy_vs_offline(model, w, inst);
    const double ratio = r.offline > 0 ? r.online / r.offline : 1.0;
    worst = std::max(worst, ratio);
    over += ratio > kPolyEnvelope;
  }
  return {over == 0 && unbounded == 0,
          fmt::format("100 instances, max ratio {:.4f} (limit {}), {} above, {} outside bounds", worst,
                      kPolyEnvelope, over, unbounded)};
}

Outcome window_theory() {
  std::mt19937_64 rng(505);
  int a_fail = 0, b_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    WindowObjective obj{uniform(rng, 1.0, 5.0), uniform(rng, 0.1, 20.0), ErrorBound::zero()};
    if (trial % 2 == 0) {
      obj.bound = ErrorBound::power_law(uniform(rng, 0.01, 2.0), uniform(rng, 1.05, 3.0));
    } else {
      std::vector<double> eps(200);
      double e = 0.0;
      for (double& v : eps) v = e += uniform(rng, 0.0, 0.05);
      obj.bound = ErrorBound::tabulated(eps);
    }
    a_fail += optimal_window_binary_search(obj, 200) != optimal_window_scan(obj, 200);
  }
  for (int trial = 0; trial < 1000; ++trial) {
    const double gamma = uniform(rng, 1.0, 5.0), sigma = uniform(rng, 0.1, 20.0),
                 beta = uniform(rng, 0.01, 2.0), alpha = uniform(rng, 1.05, 3.0);
    const auto cf = closed_form_T0(gamma, sigma, beta, alpha);
    const WindowObjective obj{gamma, sigma, ErrorBound::power_law(beta, alpha)};
    const int T_m = std::max(200, static_cast<int>(std::ceil(cf.T0)) + 2);
    const int best = optimal_window_scan(obj, T_m);
    const int lo = std::max(1, static_cast<int>(std::floor(cf.T0))), hi = std::max(1, static_cast<int>(std::ceil(cf.T0)));
    b_fail += best != lo && best != hi;
  }
  const auto cf = closed_form_T0(1.5, 2.0, 0.4, 1.1);
  const WindowObjective obj{1.5, 2.0, ErrorBound::power_law(0.4, 1.1)};
  const int scan = optimal_window_scan(obj, 200);
  const bool c_ok = (scan == static_cast<int>(std::floor(cf.T0)) || scan == static_cast<int>(std::ceil(cf.T0))) &&
                    scan == cf.T_star && scan == optimal_window_binary_search(obj, 200);
  return {a_fail == 0 && b_fail == 0 && c_ok,
          fmt::format("(a) {}/100 disagree, (b) {}/1000 outside bracket, (c) T0 = {:.4f}, scan argmin {}, "
                      "closed-form T* {}",
                      a_fail, b_fail, cf.T0, scan, cf.T_star)};
}

Outcome prediction_bound() {
  const Config config;
  const Scenario sc = build_scenario(config, scenario_trace(config), 1);
  const auto model = scenario_cost_model(config, sc.topology);
  const CellDistances dist(sc.topology, sc.activity);
  PredictionSettings ps;
  ps.bound = ErrorBound::power_law(config.predictor.beta, config.predictor.alpha);
  ps.seed = 1;
  ps.instance_bound = sc.activity.user_count();
  const CostOracle oracle(model, &dist, ps);
  std::mt19937_64 rng(606);
  const int K = sc.topology.clouds();
  int violations = 0, infinite = 0;
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const int t = uniform_int(rng, 1, sc.slots);
    const int t0 = uniform_int(rng, std::max(1, t - 30), std::min(sc.slots, t + 5));
    std::vector<ServiceInstance> cols;
    std::vector<CloudId> prev, now;
    for (const auto& i : sc.instances) {
      if (!i.running_at(t) && !i.running_at(t - 1)) continue;
      cols.push_back(i);
      prev.push_back(t > 1 && i.running_at(t - 1) ? uniform_int(rng, 1, K) : kNotRunning);
      now.push_back(i.running_at(t) ? uniform_int(rng, 1, K) : kNotRunning);
    }
    const double A = oracle.actual().slot_cost(t, cols, prev, now);
    const double D = oracle.predicted(t0).slot_cost(t, cols, prev, now);
    if (!std::isfinite(A)) {
      ++infinite;
      violations += A != D;
      continue;
    }
    const double eps = t < t0 ? 0.0 : epsilon(ps.bound, t - t0);
    worst = std::max(worst, eps > 0 ? std::abs(A - D) / eps : std::abs(A - D));
    violations += std::abs(A - D) > eps + kBoundSlack;
  }
  return {violations == 0, fmt::format("10000 samples ({} at infinite cost), {} violations, max |A-D|/eps {:.4f}",
                                       infinite, violations, worst)};
}

Outcome synthetic_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const SyntheticSection p;  // K = 5, Y = 5, backend 3, U[0.5, 1.5], 0.1 departures, 4000 x 20
  const auto points = synthetic_ratio_experiment(p, 0);
  double lowest = kInfiniteCost;
  for (const auto& r : points) lowest = std::min(lowest, r.ratio);
  const double r3000 = points.at(2999).ratio, r4000 = points.at(3999).ratio;
  const double secs = seconds_since(start);
  return {lowest >= 1.0 && std::abs(r4000 - r3000) < kRatioDrift && secs < 300.0,
          fmt::format("min ratio {:.6f}, ratio(3000) {:.6f}, ratio(4000) {:.6f}, {:.1f} s", lowest, r3000,
                      r4000, secs)};
}

Outcome policy_ordering() {
  const Config config;  // 19 cells, 10 users, 200 slots, beta 0.4
  const Scenario sc = build_scenario(config, scenario_trace(config), config.simulate.seed);
  std::map<char, double> avg;
  for (Policy p : {Policy::A, Policy::B, Policy::C, Policy::D, Policy::E})
    avg[policy_letter(p)] = run_policy(sc, config, p, config.simulate.seed).average_cost();
  const bool ok = avg['E'] <= avg['A'] && avg['E'] <= avg['B'] && avg['E'] <= avg['C'] && avg['D'] <= avg['E'];
  return {ok, fmt::format("A {:.4f}, B {:.4f}, C {:.4f}, D {:.4f}, E {:.4f}", avg['A'], avg['B'], avg['C'],
                          avg['D'], avg['E'])};
}

Outcome window_sweep() {
  const Config config;
  std::vector<int> T_values;
  for (int T = 1; T <= 30; ++T) T_values.push_back(T);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 8; ++s) seeds.push_back(s);
  const auto res = sweep_window(config, scenario_trace(config), T_values, {0.1, 0.4}, seeds, 0);
  bool ok = true;
  std::string detail;
  for (std::size_t b = 0; b < res.betas.size(); ++b) {
    const int argmin = res.measured_argmin(b);
    ok = ok && std::abs(argmin - res.T_star[b]) <= kSweepTolerance;
    detail += fmt::format("{}beta {}: T* {}, measured argmin {}", b ? "; " : "", res.betas[b], res.T_star[b], argmin);
  }
  return {ok, detail};
}

double ratio_error(double measured, double expected) { return std::abs(measured / expected - 1.0); }

Outcome complexity_scaling() {
  bool ok = true;
  std::string detail;
  // Online: one arrival spanning a 10-slot window.
  auto online_count = [](int K) {
    const auto model = LinearCostModel::uniform(K, 1, 0, 0, 1);
    WindowState st({1, 10});
    ServiceInstance a;
    a.id = 1;
    return static_cast<double>(place_on_arrival(a, 1, st, ActualPricer(model)).relaxations);
  };
  double worst_online = 0.0;
  for (int K : {2, 4, 8}) worst_online = std::max(worst_online, ratio_error(online_count(2 * K) / online_count(K), 4.0));
  ok = ok && worst_online <= kScalingTolerance;
  detail += fmt::format("online 2K/K vs 4: max error {:.1f}%", 100 * worst_online);

  // Offline: M columns over a 5-slot window.
  auto offline_count = [](int K, int M) {
    const auto model = LinearCostModel::uniform(K, 1, 0, 0, 1);
    WindowProblem p;
    p.window = {1, 5};
    for (int i = 0; i < M; ++i) {
      ServiceInstance inst;
      inst.id = i + 1;
      p.columns.push_back(inst);
    }
    return static_cast<double>(solve_window_offline(p, ActualPricer(model)).relaxations);
  };
  double worst_m = 0.0, worst_k = 0.0;
  for (int K : {2, 4, 8}) worst_m = std::max(worst_m, ratio_error(offline_count(K, 2) / offline_count(K, 1), K * K));
  for (int M : {1, 2})
    for (int K : {2, 4})
      worst_k = std::max(worst_k, ratio_error(offline_count(2 * K, M) / offline_count(K, M), std::pow(2.0, 2 * M)));
  ok = ok && worst_m <= kScalingTolerance && worst_k <= kScalingTolerance;
  detail += fmt::format("; offline M=2/M=1 vs K^2: {:.1f}%; offline 2K/K vs 2^(2M): {:.1f}%", 100 * worst_m,
                        100 * worst_k);
  return {ok, detail};
}

// Drops the last column of every line.
std::string without_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

Outcome cli_determinism() {
  const fs::path root = fresh_dir("acceptance_cli");
  // A small taxi directory for convert-trace.
  fs::create_directories(root / "cabs");
  {
    const auto topo = HexTopology::build(19);
    MobilityOptions m;
    m.users = 3;
    m.slots = 30;
    const auto trace = generate_taxi_trace(topo, m);
    std::map<std::string, std::ofstream> files;
    for (const auto& r : trace.records) {
      auto& f = files[r.user];
      if (!f.is_open()) f.open(root / "cabs" / ("new_" + r.user + ".txt"));
      f << fmt::format("{:.6f} {:.6f} 0 {}\n", r.lat, r.lon, r.timestamp);
    }
  }
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate --seed 7 --slots 60 --out-dir {}"},
      {"sweep-window", "sweep-window --seed 7 --slots 40 --T-range 1..4 --seeds 2 --out-dir {}"},
      {"oracle-check", "oracle-check --seed 7 --trials 10 --out-dir {}"},
      {"synthetic-ratio", "synthetic-ratio --arrivals 300 --synthetic-seeds 3 --out-dir {}"},
      {"convert-trace", "convert-trace " + (root / "cabs").string() + " {}/trace.csv"},
  };
  int failures = 0, files = 0;
  std::string detail;
  for (const auto& [name, pattern] : commands) {
    std::vector<fs::path> dirs{root / (name + "_1"), root / (name + "_2")};
    bool ran = true;
    for (const auto& d : dirs) {
      fs::create_directories(d);
      ran = ran && testsupport::run_cli(fmt::format(fmt::runtime(pattern), d.string())) == 0;
    }
    bool same = ran;
    int count = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto file = entry.path().filename();
      std::string a = slurp(dirs[0] / file), b = slurp(dirs[1] / file);
      if (file == "summary.csv") {
        a = without_last_column(a);
        b = without_last_column(b);
      }
      same = same && !a.empty() && a == b;
      ++count;
    }
    same = same && count > 0;
    files += count;
    failures += !same;
    if (!same) detail += fmt::format(" {} differs or failed;", name);
  }
  return {failures == 0, fmt::format("5 commands, {} csv files compared,{} {} failures", files, detail, failures)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"offline exactness", offline_exactness},
      {"linear online optimality", linear_online_optimality},
      {"performance-gap inequality", gap_inequality},
      {"polynomial competitiveness envelope", polynomial_envelope},
      {"window-size theory", window_theory},
      {"prediction-bound respect", prediction_bound},
      {"synthetic ratio convergence", synthetic_convergence},
      {"policy ordering", policy_ordering},
      {"window sweep", window_sweep},
      {"complexity scaling", complexity_scaling},
      {"determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    failed += !o.pass;
    std::cout << fmt::format("criterion {:>2} {:<38} {}  {}", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                             o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
