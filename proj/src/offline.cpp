#include "mmcplace/offline.hpp"

#include <cmath>
#include <string>

namespace mmcplace {

StateBudgetExceeded::StateBudgetExceeded(int slot, double required, std::size_t budget)
    : std::runtime_error("joint state space at slot " + std::to_string(slot) + " needs " +
                         std::to_string(static_cast<long double>(required)) +
                         " states, budget is " + std::to_string(budget)),
      slot_(slot), required_(required), budget_(budget) {}

namespace {

struct Stage {
  std::vector<int> active;     // running columns, ascending
  std::size_t count = 1;
  std::vector<CloudId> rows;   // count x M, row-major
};

// Decodes state index into a joint row; the first active column is the most significant digit.
void build_rows(Stage& stage, int K, int M) {
  stage.rows.assign(stage.count * static_cast<std::size_t>(M), kNotRunning);
  const int n = static_cast<int>(stage.active.size());
  for (std::size_t s = 0; s < stage.count; ++s) {
    std::size_t rest = s;
    CloudId* row = stage.rows.data() + s * M;
    for (int j = n - 1; j >= 0; --j) {
      row[stage.active[j]] = static_cast<CloudId>(rest % K) + 1;
      rest /= K;
    }
  }
}

}  // namespace

WindowSolution solve_window_offline(const WindowProblem& problem, const SlotPricer& pricer,
                                    const OfflineOptions& options) {
  const Window& w = problem.window;
  const int K = pricer.clouds();
  const int M = static_cast<int>(problem.columns.size());
  if (w.length < 1) throw std::invalid_argument("window length must be >= 1");
  if (!problem.prev_config.empty() && static_cast<int>(problem.prev_config.size()) != M)
    throw std::invalid_argument("prev_config size does not match column count");

  Stage prev;
  prev.rows = problem.prev_config.empty() ? std::vector<CloudId>(M, kNotRunning)
                                          : problem.prev_config;
  std::vector<double> nu{0.0};
  std::vector<std::vector<std::uint32_t>> back(static_cast<std::size_t>(w.length));
  std::vector<Stage> stages(static_cast<std::size_t>(w.length));
  std::uint64_t relaxations = 0;

  // Validate every stage size before doing any work.
  for (int q = 0; q < w.length; ++q) {
    const int t = w.t0 + q;
    Stage& st = stages[q];
    for (int i = 0; i < M; ++i)
      if (problem.columns[i].running_at(t)) st.active.push_back(i);
    const double required = std::pow(static_cast<double>(K), static_cast<double>(st.active.size()));
    if (required > static_cast<double>(options.state_budget))
      throw StateBudgetExceeded(t, required, options.state_budget);
    st.count = static_cast<std::size_t>(std::llround(required));
  }

  const Stage* from = &prev;
  for (int q = 0; q < w.length; ++q) {
    const int t = w.t0 + q;
    Stage& st = stages[q];
    build_rows(st, K, M);
    std::vector<double> mu(st.count, kInfiniteCost);
    std::vector<std::uint32_t>& bp = back[q];
    bp.assign(st.count, 0);
    const std::size_t n_from = nu.size();
    for (std::size_t m = 0; m < st.count; ++m) {
      const std::span<const CloudId> row_m(st.rows.data() + m * M, static_cast<std::size_t>(M));
      double best = kInfiniteCost;
      std::uint32_t arg = 0;
      for (std::size_t n = 0; n < n_from; ++n) {
        ++relaxations;
        if (nu[n] == kInfiniteCost) continue;
        const std::span<const CloudId> row_n(from->rows.data() + n * M, static_cast<std::size_t>(M));
        const double c = nu[n] + pricer.slot_cost(t, problem.columns, row_n, row_m);
        if (c < best) {
          best = c;
          arg = static_cast<std::uint32_t>(n);
        }
      }
      mu[m] = best;
      bp[m] = arg;
    }
    if (q > 0) stages[q - 1].rows.clear();  // only back pointers are needed from here on
    nu = std::move(mu);
    from = &st;
  }

  std::size_t end = 0;
  for (std::size_t m = 1; m < nu.size(); ++m)
    if (nu[m] < nu[end]) end = m;

  WindowSolution sol;
  sol.cost = nu[end];
  sol.relaxations = relaxations;
  sol.placement = ConfigurationMatrix(w.t0, w.length, M);
  std::vector<std::size_t> path(static_cast<std::size_t>(w.length));
  path[w.length - 1] = end;
  for (int q = w.length - 1; q > 0; --q) path[q - 1] = back[q][path[q]];
  for (int q = 0; q < w.length; ++q) {
    const Stage& st = stages[q];
    const int n = static_cast<int>(st.active.size());
    std::size_t rest = path[q];
    for (int j = n - 1; j >= 0; --j) {
      sol.placement(q, st.active[j]) = static_cast<CloudId>(rest % K) + 1;
      rest /= K;
    }
  }
  // Recomputed in the same order the recursion accumulated them.
  std::span<const CloudId> prev_row = prev.rows;
  double acc = 0.0;
  for (int q = 0; q < w.length; ++q) {
    acc = acc + pricer.slot_cost(w.t0 + q, problem.columns, prev_row, sol.placement.row(q));
    sol.path_values.push_back(acc);
    prev_row = sol.placement.row(q);
  }
  return sol;
}

std::vector<int> window_column_indices(const std::vector<ServiceInstance>& instances,
                                       const Window& window) {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(instances.size()); ++i) {
    const ServiceInstance& inst = instances[i];
    if (inst.arrival_slot <= window.last() && inst.last_slot() >= window.t0 - 1) out.push_back(i);
  }
  return out;
}

HorizonResult run_offline(int horizon, int window_size, const std::vector<ServiceInstance>& instances,
                          const CostOracle& oracle, const OfflineOptions& options) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  if (window_size < 1) throw std::invalid_argument("window size must be >= 1");
  const int N = static_cast<int>(instances.size());
  HorizonResult result;
  result.placement = ConfigurationMatrix(1, horizon, N);

  for (int t0 = 1; t0 <= horizon; t0 += window_size) {
    const Window w{t0, std::min(window_size, horizon - t0 + 1)};
    const std::vector<int> cols = window_column_indices(instances, w);
    WindowProblem problem;
    problem.window = w;
    for (int i : cols) {
      problem.columns.push_back(instances[i]);
      problem.prev_config.push_back(t0 > 1 ? result.placement.at_slot(t0 - 1, i) : kNotRunning);
    }
    const PredictedPricer pricer = oracle.predicted(t0);
    const WindowSolution sol = solve_window_offline(problem, pricer, options);
    result.relaxations += sol.relaxations;
    for (int q = 0; q < w.length; ++q)
      for (std::size_t j = 0; j < cols.size(); ++j)
        result.placement.set_at_slot(t0 + q, cols[j], sol.placement(q, static_cast<int>(j)));
  }
  result.slot_costs = per_slot_costs(oracle.actual(), result.placement, instances, {});
  return result;
}

}  // namespace mmcplace
