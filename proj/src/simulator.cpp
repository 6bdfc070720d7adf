#include "mmcplace/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mmcplace/offline.hpp"
#include "mmcplace/online.hpp"
#include "mmcplace/oracle.hpp"
#include "mmcplace/window.hpp"

namespace mmcplace {

char policy_letter(Policy p) { return static_cast<char>('A' + static_cast<int>(p)); }

std::optional<Policy> parse_policy(char c) {
  c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (c < 'A' || c > 'E') return std::nullopt;
  return static_cast<Policy>(c - 'A');
}

std::vector<Policy> parse_policy_list(const std::string& text) {
  std::vector<bool> chosen(5, false);
  if (text == "all") {
    chosen.assign(5, true);
  } else {
    for (char c : text) {
      if (c == ',' || c == ' ') continue;
      const auto p = parse_policy(c);
      if (!p) throw std::invalid_argument(fmt::format("unknown policy '{}'", c));
      chosen[static_cast<int>(*p)] = true;
    }
  }
  std::vector<Policy> out;
  for (int i = 0; i < 5; ++i)
    if (chosen[i]) out.push_back(static_cast<Policy>(i));
  if (out.empty()) throw std::invalid_argument("no policy selected");
  return out;
}

MobilityTrace scenario_trace(const Config& config) {
  const auto& s = config.scenario;
  if (!s.trace.empty()) return read_trace_csv(s.trace);
  const HexTopology topo = HexTopology::build(s.cells, s.anchor_lat, s.anchor_lon, s.spacing);
  MobilityOptions m;
  m.users = s.users;
  m.slots = s.slots;
  m.slot_seconds = s.slot_seconds;
  m.start = s.start;
  m.speed_min = s.speed_min;
  m.speed_max = s.speed_max;
  m.pause_mean = s.pause_mean;
  m.report_mean = s.report_mean;
  m.seed = s.mobility_seed;
  return generate_taxi_trace(topo, m);
}

Scenario build_scenario(const Config& config, const MobilityTrace& trace, std::uint64_t seed) {
  const auto& s = config.scenario;
  Scenario sc;
  sc.topology = HexTopology::build(s.cells, s.anchor_lat, s.anchor_lon, s.spacing);
  IngestOptions ingest;
  ingest.slot_seconds = s.slot_seconds;
  ingest.staleness = s.staleness;
  ingest.start = s.start;
  ingest.slots = s.slots;
  sc.activity = ingest_trace(trace, sc.topology, ingest);
  sc.slots = sc.activity.slots;
  sc.instances = generate_service_demand(sc.activity, {config.demand.mean_on,
                                                       config.demand.mean_off, seed});
  for (ServiceInstance& inst : sc.instances) {
    inst.local_demand = config.demand.local_demand;
    inst.migration_demand = config.demand.migration_demand;
    if (config.demand.max_lifetime > 0) inst.max_lifetime = config.demand.max_lifetime;
  }
  return sc;
}

AssumptionReport check_assumptions(const Scenario& sc, const ScenarioSection& bounds) {
  AssumptionReport r;
  std::map<int, int> departures;
  for (const ServiceInstance& i : sc.instances) {
    r.max_local_demand = std::max(r.max_local_demand, i.local_demand);
    r.max_migration_demand = std::max(r.max_migration_demand, i.migration_demand);
    if (i.last_slot() < sc.slots) r.max_departures = std::max(r.max_departures, ++departures[i.last_slot()]);
  }
  r.demands_bounded = r.max_local_demand <= bounds.a_max && r.max_migration_demand <= bounds.b_max;
  r.departures_bounded = r.max_departures <= bounds.max_departures;
  return r;
}

MmcBackendCostModel scenario_cost_model(const Config& config, const HexTopology& topology) {
  const auto& c = config.cost;
  return MmcBackendCostModel({topology.clouds(), topology.backend(), c.capacity, c.backend_local,
                              c.backend_migration, c.distance_local, c.distance_migration});
}

int policy_window(const Config& config, double beta) {
  if (config.window.window > 0) return config.window.window;
  int T = kUnboundedSlot;
  if (beta > 0)
    T = closed_form_T0(config.window.gamma, config.window.sigma, beta, config.predictor.alpha).T_star;
  if (config.window.max_window > 0) T = std::min(T, config.window.max_window);
  return std::max(1, std::min(T, std::max(1, config.scenario.slots)));
}

double PolicyResult::average_cost() const {
  if (slots.empty()) return 0.0;
  double sum = 0.0;
  for (const SlotRecord& r : slots) sum += r.actual_cost;
  return sum / static_cast<double>(slots.size());
}

double PolicyResult::max_migration_cost() const {
  double m = 0.0;
  for (const SlotRecord& r : slots) m = std::max(m, r.migration_cost);
  return m;
}

namespace {

// Nearest MMC to `cell` with room for `demand`, or the backend.
CloudId nearest_with_room(const HexTopology& topo, int cell, double demand,
                          const std::vector<double>& load, double capacity) {
  CloudId best = topo.backend();
  int best_d = std::numeric_limits<int>::max();
  for (int k = 1; k <= topo.cell_count(); ++k) {
    if (load[k - 1] + demand >= capacity) continue;
    const int d = topo.hex_distance(k, cell);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

// Policies A and B. Instances that keep their cloud are settled first, the rest
// choose in id order.
void place_nearest(const Scenario& sc, const Config& config, bool follow, PolicyResult& out) {
  const HexTopology& topo = sc.topology;
  const CellDistances dist(topo, sc.activity);
  const int N = static_cast<int>(sc.instances.size());
  const double Y = config.cost.capacity;
  for (int t = 1; t <= sc.slots; ++t) {
    std::vector<double> load(topo.cell_count(), 0.0);
    std::vector<int> movers;
    for (int i = 0; i < N; ++i) {
      const ServiceInstance& inst = sc.instances[i];
      if (!inst.running_at(t)) continue;
      const bool fresh = inst.arrival_slot == t;
      const bool moved = follow && !fresh && dist.user_cell(inst.user, t) != dist.user_cell(inst.user, t - 1);
      if (fresh || moved) {
        movers.push_back(i);
        continue;
      }
      const CloudId k = out.placement.at_slot(t - 1, i);
      out.placement.set_at_slot(t, i, k);
      if (k != topo.backend()) load[k - 1] += inst.local_demand;
    }
    for (int i : movers) {
      const ServiceInstance& inst = sc.instances[i];
      const int cell = dist.user_cell(inst.user, t);
      CloudId k = topo.backend();
      if (cell != 0) {
        k = nearest_with_room(topo, cell, inst.local_demand, load, Y);
        if (k == topo.backend() || topo.hex_distance(k, cell) > 0)
          out.decisions.push_back(fmt::format("slot {}: instance {} overflows from cell {} to {}", t,
                                              inst.id, cell,
                                              k == topo.backend() ? std::string("backend")
                                                                  : fmt::format("cell {}", k)));
      }
      out.placement.set_at_slot(t, i, k);
      if (k != topo.backend()) load[k - 1] += inst.local_demand;
    }
  }
}

PredictionSettings prediction_settings(const Config& config, const Scenario& sc, double beta,
                                       std::uint64_t seed) {
  PredictionSettings p;
  p.bound = beta > 0 ? ErrorBound::power_law(beta, config.predictor.alpha) : ErrorBound::zero();
  p.seed = seed;
  p.shape = config.predictor.noise;
  p.instance_bound = config.predictor.instance_bound > 0 ? config.predictor.instance_bound
                                                         : std::max(1, sc.activity.user_count());
  return p;
}

// Migration part of C(t) from two configuration rows.
double row_migration_cost(const CostModel& model, const DistanceProvider& dist, int t,
                          std::span<const ServiceInstance> cols, std::span<const CloudId> prev,
                          std::span<const CloudId> now, int& moves) {
  const int K = model.clouds();
  std::vector<double> y_prev(K, 0.0), y_now(K, 0.0);
  std::map<std::pair<int, int>, std::pair<double, double>> flows;
  moves = 0;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (prev[i] != kNotRunning) y_prev[prev[i] - 1] += cols[i].local_demand;
    if (now[i] != kNotRunning) y_now[now[i] - 1] += cols[i].local_demand;
    if (prev[i] != kNotRunning && now[i] != kNotRunning && prev[i] != now[i]) {
      ++moves;
      auto& f = flows[{prev[i], now[i]}];
      f.first += cols[i].migration_demand;
      f.second += dist.cloud_distance(prev[i], now[i]);
    }
  }
  double total = 0.0;
  for (const auto& [kl, f] : flows)
    total += model.migration(kl.first, kl.second, t, y_prev[kl.first - 1], y_now[kl.second - 1],
                             f.first, f.second);
  return total;
}

}  // namespace

PolicyResult run_policy(const Scenario& sc, const Config& config, Policy policy,
                        std::uint64_t seed, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const int N = static_cast<int>(sc.instances.size());
  const MmcBackendCostModel model = scenario_cost_model(config, sc.topology);
  const CellDistances dist(sc.topology, sc.activity);
  PolicyResult out;
  out.policy = policy;
  out.placement = ConfigurationMatrix(1, sc.slots, N);

  switch (policy) {
    case Policy::A:
    case Policy::B:
      place_nearest(sc, config, policy == Policy::B, out);
      break;
    case Policy::C:
      for (int i = 0; i < N; ++i)
        for (int t = 1; t <= sc.slots; ++t)
          if (sc.instances[i].running_at(t)) out.placement.set_at_slot(t, i, sc.topology.backend());
      break;
    case Policy::D:
    case Policy::E: {
      const double beta = options.beta.value_or(config.predictor.beta);
      out.window = options.window.value_or(policy_window(config, beta));
      const bool exact = policy == Policy::D;
      const CostOracle oracle(model, &dist, prediction_settings(config, sc, exact ? 0.0 : beta, seed));
      OnlineOptions online;
      online.departures_known = exact;
      out.placement = run_online(sc.slots, out.window, sc.instances, oracle, online).placement;
      break;
    }
  }

  const ActualPricer actual(model, &dist);
  const std::vector<double> costs = per_slot_costs(actual, out.placement, sc.instances, {});
  std::vector<CloudId> zero(N, kNotRunning);
  for (int t = 1; t <= sc.slots; ++t) {
    SlotRecord r;
    r.slot = t;
    r.actual_cost = costs[t - 1];
    const auto now = out.placement.row_at_slot(t);
    const std::span<const CloudId> prev = t == 1 ? std::span<const CloudId>(zero)
                                                 : out.placement.row_at_slot(t - 1);
    r.num_active = running_count(now);
    r.migration_cost = row_migration_cost(model, dist, t, sc.instances, prev, now, r.num_migrations);
    if (!std::isfinite(r.actual_cost))
      out.decisions.push_back(fmt::format("slot {}: infinite actual cost", t));
    out.slots.push_back(r);
  }
  out.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  spdlog::debug("policy {}: average {:.6f} over {} slots, {} ms", policy_letter(policy),
                out.average_cost(), sc.slots, out.runtime_ms);
  return out;
}

int SweepResult::measured_argmin(std::size_t b) const {
  std::size_t best = 0;
  for (std::size_t j = 1; j < T_values.size(); ++j)
    if (mean[b][j] < mean[b][best]) best = j;
  return T_values.empty() ? 0 : T_values[best];
}

SweepResult sweep_window(const Config& config, const MobilityTrace& trace,
                         const std::vector<int>& T_values, const std::vector<double>& betas,
                         const std::vector<std::uint64_t>& seeds, int jobs) {
  SweepResult res;
  res.betas = betas;
  res.T_values = T_values;
  if (T_values.empty() || betas.empty() || seeds.empty()) return res;
  const int T_max = *std::max_element(T_values.begin(), T_values.end());
  for (double beta : betas) {
    WindowObjective obj{config.window.gamma, config.window.sigma,
                        beta > 0 ? ErrorBound::power_law(beta, config.predictor.alpha)
                                 : ErrorBound::zero()};
    res.T_star.push_back(optimal_window_binary_search(obj, T_max));
  }

  std::vector<Scenario> scenarios(seeds.size());
  parallel_for(static_cast<int>(seeds.size()), jobs,
               [&](int s) { scenarios[s] = build_scenario(config, trace, seeds[s]); });

  const std::size_t nb = betas.size(), nt = T_values.size(), ns = seeds.size();
  res.rows.resize(nb * nt * ns);
  parallel_for(static_cast<int>(res.rows.size()), jobs, [&](int idx) {
    const std::size_t b = idx / (nt * ns), j = (idx / ns) % nt, s = idx % ns;
    RunOptions opt;
    opt.window = T_values[j];
    opt.beta = betas[b];
    const PolicyResult r = run_policy(scenarios[s], config, Policy::E, seeds[s], opt);
    res.rows[idx] = {T_values[j], betas[b], seeds[s], r.average_cost(), T_values[j] == res.T_star[b]};
  });

  res.mean.assign(nb, std::vector<double>(nt, 0.0));
  for (std::size_t idx = 0; idx < res.rows.size(); ++idx)
    res.mean[idx / (nt * ns)][(idx / ns) % nt] += res.rows[idx].avg_cost / static_cast<double>(ns);
  return res;
}

std::vector<RatioPoint> synthetic_ratio_experiment(const SyntheticSection& p, int jobs) {
  const int n = p.arrivals;
  const MmcBackendCostModel model({p.clouds, p.clouds, p.capacity, p.backend_local,
                                   p.backend_local, 0.0, 0.0});
  const int K = p.clouds;
  std::vector<std::vector<double>> online(p.seeds, std::vector<double>(n)),
      fractional(p.seeds, std::vector<double>(n));
  parallel_for(p.seeds, jobs, [&](int s) {
    const auto events = generate_synthetic(n, static_cast<std::uint64_t>(s + 1),
                                           p.departure_probability, p.demand_low, p.demand_high);
    std::vector<double> y(K, 0.0);
    std::vector<CloudId> where(n + 1, kNotRunning);
    std::vector<double> demand(n + 1, 0.0);
    int m = 0;
    for (const SyntheticEvent& e : events) {
      if (e.kind == SyntheticEvent::Kind::Departure) {
        y[where[e.instance] - 1] = std::max(0.0, y[where[e.instance] - 1] - demand[e.instance]);
        where[e.instance] = kNotRunning;
        continue;
      }
      CloudId best = 1;
      double best_delta = kInfiniteCost;
      for (int k = 1; k <= K; ++k) {
        const double delta = model.local(k, 1, y[k - 1] + e.demand, 0) - model.local(k, 1, y[k - 1], 0);
        if (delta < best_delta) {
          best_delta = delta;
          best = k;
        }
      }
      where[e.instance] = best;
      demand[e.instance] = e.demand;
      y[best - 1] += e.demand;
      double cost = 0.0, total = 0.0;
      for (int k = 1; k <= K; ++k) {
        cost += model.local(k, 1, y[k - 1], 0);
        total += y[k - 1];
      }
      online[s][m] = cost;
      fractional[s][m] = fractional_allocation_single_slot(total, model).cost;
      ++m;
    }
  });

  std::vector<RatioPoint> out(n);
  for (int m = 0; m < n; ++m) {
    RatioPoint& r = out[m];
    r.arrivals = m + 1;
    for (int s = 0; s < p.seeds; ++s) {
      r.mean_online += online[s][m] / p.seeds;
      r.mean_fractional += fractional[s][m] / p.seeds;
    }
    r.ratio = r.mean_fractional > 0 ? r.mean_online / r.mean_fractional : 1.0;
  }
  return out;
}

namespace {

std::unique_ptr<CostModel> oracle_model(const OracleSection& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto in = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const int K = p.clouds;
  if (p.model == "linear") {
    std::vector<LinearCostModel::Slot> table(p.slots);
    for (auto& s : table) {
      for (int k = 0; k < K; ++k) s.gamma.push_back(in(0.5, 3.0));
      for (int q = 0; q < K * K; ++q) {
        s.kappa1.push_back(in(0.0, 1.0));
        s.kappa2.push_back(in(0.0, 1.0));
        s.kappa3.push_back(in(0.5, 2.0));
      }
    }
    return std::make_unique<LinearCostModel>(K, table);
  }
  std::vector<PolynomialCostModel::Slot> table(p.slots);
  for (auto& s : table) {
    s.local.resize(K);
    s.migration.resize(K * K);
    for (auto& terms : s.local) terms = {{1, in(0.2, 2.0)}, {2, in(0.1, 1.5)}};
    for (auto& terms : s.migration) terms = {{0, 0, 1, in(0.2, 2.0)}, {0, 0, 2, in(0.0, 1.0)}};
  }
  return std::make_unique<PolynomialCostModel>(K, table);
}

}  // namespace

std::vector<OracleTrial> oracle_check(const OracleSection& p) {
  std::vector<OracleTrial> out;
  if (p.instances == 0) return out;
  const Window w{1, p.slots};
  for (int trial = 1; trial <= p.trials; ++trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(p.seed), static_cast<std::uint32_t>(p.seed >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    const auto model = oracle_model(p, rng);
    std::uniform_real_distribution<double> demand(0.5, 1.5);
    std::vector<ServiceInstance> inst(p.instances);
    for (ServiceInstance& i : inst) {
      i.arrival_slot = std::uniform_int_distribution<int>(1, p.slots)(rng);
      if (std::bernoulli_distribution(0.5)(rng))
        i.departure_slot = std::uniform_int_distribution<int>(i.arrival_slot, p.slots)(rng);
      i.local_demand = demand(rng);
      i.migration_demand = demand(rng);
    }
    std::stable_sort(inst.begin(), inst.end(), [](const ServiceInstance& a, const ServiceInstance& b) {
      return a.arrival_slot < b.arrival_slot;
    });
    for (int i = 0; i < p.instances; ++i) inst[i].id = i + 1;

    const ActualPricer pricer(*model);
    WindowState state(w);
    std::vector<LoadVector> states;
    for (const ServiceInstance& i : inst) {
      place_on_arrival(i, i.arrival_slot, state, pricer);
      states.push_back(aggregate_loads(state.placement, state.columns, state.prev_config, p.clouds));
    }
    WindowProblem problem;
    problem.window = w;
    problem.columns = inst;
    const BruteForceResult best = brute_force_offline(problem, pricer);

    OracleTrial r;
    r.trial = trial;
    r.online = window_cost(pricer, state.placement, state.columns, state.prev_config);
    r.offline = best.cost;
    r.ratio = r.offline > 0 ? r.online / r.offline : 1.0;
    const auto g = gap_constants(*model, states.back(), elementwise_max(states),
                                 candidate_increments(inst, {}, w, p.clouds));
    r.phi = g.phi;
    r.psi = g.psi.value_or(1.0);
    const LoadVector opt = aggregate_loads(best.placement, inst, {}, p.clouds);
    const double lhs = window_cost(*model, states.back());
    const double rhs = window_cost(*model, scale_loads(opt, r.phi * r.psi));
    r.gap_ok = lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs));
    if (p.model == "linear")
      r.linear_exact = std::abs(r.online - r.offline) <= 1e-9 * std::max(1.0, std::abs(r.offline));
    out.push_back(r);
  }
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<PolicyResult>& results) {
  out << "slot,policy,actual_cost,num_active,num_migrations\n";
  for (const PolicyResult& r : results)
    for (const SlotRecord& s : r.slots)
      out << fmt::format("{},{},{:.10g},{},{}\n", s.slot, policy_letter(r.policy), s.actual_cost,
                         s.num_active, s.num_migrations);
}

void write_summary_csv(std::ostream& out, const std::vector<PolicyResult>& results) {
  out << "policy,avg_cost,runtime_ms\n";
  for (const PolicyResult& r : results)
    out << fmt::format("{},{:.10g},{:.3f}\n", policy_letter(r.policy), r.average_cost(),
                       r.runtime_ms);
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "T,beta,seed,avg_cost,is_Tstar\n";
  for (const SweepRow& r : sweep.rows)
    out << fmt::format("{},{},{},{:.10g},{}\n", r.T, r.beta, r.seed, r.avg_cost, r.is_tstar ? 1 : 0);
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioPoint>& points) {
  out << "arrivals,mean_online,mean_fractional,ratio\n";
  for (const RatioPoint& p : points)
    out << fmt::format("{},{:.10g},{:.10g},{:.10g}\n", p.arrivals, p.mean_online,
                       p.mean_fractional, p.ratio);
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleTrial>& trials) {
  out << "trial,online,offline,ratio,phi,psi,gap_ok,linear_exact\n";
  for (const OracleTrial& t : trials)
    out << fmt::format("{},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{},{}\n", t.trial, t.online,
                       t.offline, t.ratio, t.phi, t.psi, t.gap_ok ? 1 : 0, t.linear_exact ? 1 : 0);
}

void parallel_for(int n, int jobs, const std::function<void(int)>& f) {
  if (n <= 0) return;
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, n);
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace mmcplace
