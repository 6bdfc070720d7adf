#include "mmcplace/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace mmcplace {

EnumerationBudgetExceeded::EnumerationBudgetExceeded(double required, std::size_t budget)
    : std::runtime_error("exhaustive search needs " +
                         std::to_string(static_cast<long double>(required)) +
                         " combinations, budget is " + std::to_string(budget)),
      required_(required) {}

namespace {

// true when a precedes b comparing rows from the last slot backwards.
bool reversed_row_less(const ConfigurationMatrix& a, const ConfigurationMatrix& b) {
  for (int q = a.slots() - 1; q >= 0; --q) {
    const auto ra = a.row(q), rb = b.row(q);
    const auto cmp = std::lexicographical_compare_three_way(ra.begin(), ra.end(), rb.begin(), rb.end());
    if (cmp != 0) return cmp < 0;
  }
  return false;
}

}  // namespace

BruteForceResult brute_force_offline(const WindowProblem& problem, const SlotPricer& pricer,
                                     std::size_t budget) {
  const Window& w = problem.window;
  const int K = pricer.clouds();
  const int M = static_cast<int>(problem.columns.size());
  std::vector<std::vector<ConfigurationSequence>> options(M);
  double required = 1.0;
  for (int i = 0; i < M; ++i) {
    options[i] = feasible_sequences(problem.columns[i], w, K);
    required *= static_cast<double>(options[i].size());
  }
  if (required > static_cast<double>(budget)) throw EnumerationBudgetExceeded(required, budget);

  BruteForceResult best;
  best.cost = kInfiniteCost;
  bool have = false;
  ConfigurationMatrix cur(w.t0, w.length, M);
  std::vector<std::size_t> pick(M, 0);
  for (int i = 0; i < M; ++i) cur.set_column(i, options[i][0]);
  while (true) {
    const double c = window_cost(pricer, cur, problem.columns, problem.prev_config);
    ++best.evaluated;
    if (!have || c < best.cost || (c == best.cost && reversed_row_less(cur, best.placement))) {
      best.cost = c;
      best.placement = cur;
      have = true;
    }
    int i = M - 1;
    while (i >= 0 && pick[i] + 1 == options[i].size()) {
      pick[i] = 0;
      cur.set_column(i, options[i][0]);
      --i;
    }
    if (i < 0) break;
    ++pick[i];
    cur.set_column(i, options[i][pick[i]]);
  }
  if (M == 0) best.placement = ConfigurationMatrix(w.t0, w.length, 0);
  return best;
}

FractionalAllocation fractional_allocation_single_slot(double total_demand, const CostModel& model,
                                                       int t) {
  if (!model.local_convex_nondecreasing())
    throw std::invalid_argument("fractional bound needs convex non-decreasing local costs");
  if (!(total_demand >= 0.0)) throw std::invalid_argument("demand must be non-negative");
  const int K = model.clouds();
  FractionalAllocation out;
  out.y.assign(K, 0.0);
  if (total_demand == 0.0) return out;

  // Clouds with a constant slope absorb everything at that slope; the cheapest caps mu.
  double flat_slope = kInfiniteCost;
  CloudId flat_cloud = 0;
  for (CloudId k = 1; k <= K; ++k) {
    const auto s = model.constant_local_slope(k, t);
    if (s && *s < flat_slope && std::isinf(model.local_capacity(k))) flat_slope = *s, flat_cloud = k;
  }

  // Load taken by a strictly convex cloud at marginal mu.
  auto take = [&](CloudId k, double mu) {
    if (model.constant_local_slope(k, t)) return 0.0;
    return model.local_load_at_slope(k, t, mu, total_demand);
  };
  auto supply = [&](double mu) {
    double s = 0.0;
    for (CloudId k = 1; k <= K; ++k) s += take(k, mu);
    return s;
  };

  double mu = flat_slope;
  if (flat_cloud == 0 || supply(flat_slope) >= total_demand) {
    double lo = 0.0, hi = std::isinf(flat_slope) ? 1.0 : flat_slope;
    if (std::isinf(flat_slope)) {
      int guard = 0;
      while (supply(hi) < total_demand) {
        hi *= 2.0;
        if (++guard > 2000) throw std::runtime_error("fractional bound: demand exceeds capacity");
      }
    }
    for (int it = 0; it < 300 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (supply(mid) < total_demand ? lo : hi) = mid;
    }
    mu = hi;
    for (CloudId k = 1; k <= K; ++k) out.y[k - 1] = take(k, mu);
    // Remove the bisection overshoot from the largest share.
    double s = 0.0;
    for (double v : out.y) s += v;
    if (std::abs(s - total_demand) > 1e-9 * total_demand)
      throw std::runtime_error("fractional bound: marginal bisection did not converge");
    const auto big = std::max_element(out.y.begin(), out.y.end());
    *big = std::max(0.0, *big - (s - total_demand));
  } else {
    double s = 0.0;
    for (CloudId k = 1; k <= K; ++k) s += (out.y[k - 1] = take(k, mu));
    out.y[flat_cloud - 1] += total_demand - s;
  }
  out.marginal = mu;
  for (CloudId k = 1; k <= K; ++k)
    if (out.y[k - 1] > 0.0) out.cost += model.local(k, t, out.y[k - 1], 0.0);
  return out;
}

double fractional_lower_bound_single_slot(std::span<const double> demands, const CostModel& model,
                                          int t) {
  double total = 0.0;
  for (double d : demands) total += d;
  return fractional_allocation_single_slot(total, model, t).cost;
}

LoadVector sequence_loads(const ServiceInstance& instance, std::span<const CloudId> sequence,
                          const Window& window, CloudId prev, int num_clouds) {
  LoadVector v(window.t0, num_clouds, window.length);
  CloudId before = prev;
  for (int q = 0; q < window.length; ++q) {
    const CloudId c = sequence[q];
    if (c != kNotRunning) {
      v.slots[q].y_at(c) += instance.local_demand;
      if (before != kNotRunning && before != c) v.slots[q].z_at(before, c) += instance.migration_demand;
    }
    before = c;
  }
  return v;
}

std::vector<LoadVector> candidate_increments(std::span<const ServiceInstance> instances,
                                             std::span<const CloudId> prev_config,
                                             const Window& window, int num_clouds,
                                             std::size_t per_instance_limit, std::uint64_t seed) {
  std::vector<LoadVector> out;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const CloudId prev = prev_config.empty() ? kNotRunning : prev_config[i];
    const SlotSpan span = active_span(instances[i], window);
    const double count = std::pow(static_cast<double>(num_clouds), span.length());
    if (count <= static_cast<double>(per_instance_limit)) {
      for (const auto& seq : feasible_sequences(instances[i], window, num_clouds))
        out.push_back(sequence_loads(instances[i], seq, window, prev, num_clouds));
      continue;
    }
    std::uniform_int_distribution<int> pick(1, num_clouds);
    ConfigurationSequence seq(window.length, kNotRunning);
    for (std::size_t d = 0; d < per_instance_limit; ++d) {
      for (int t = span.first; t <= span.last; ++t) seq[t - window.t0] = pick(rng);
      out.push_back(sequence_loads(instances[i], seq, window, prev, num_clouds));
    }
  }
  return out;
}

LoadVector elementwise_max(std::span<const LoadVector> states) {
  if (states.empty()) throw std::invalid_argument("no states");
  LoadVector out = states.front();
  for (const LoadVector& s : states.subspan(1))
    for (std::size_t q = 0; q < out.slots.size(); ++q) {
      for (std::size_t j = 0; j < out.slots[q].y.size(); ++j)
        out.slots[q].y[j] = std::max(out.slots[q].y[j], s.slots[q].y[j]);
      for (std::size_t j = 0; j < out.slots[q].z.size(); ++j)
        out.slots[q].z[j] = std::max(out.slots[q].z[j], s.slots[q].z[j]);
    }
  return out;
}

GapConstants gap_constants(const CostModel& model, const LoadVector& state,
                           const LoadVector& maxima, std::span<const LoadVector> increments) {
  GapConstants out;
  const LoadVector g_state = window_cost_gradient(model, state);
  out.phi = 0.0;
  for (const LoadVector& inc : increments) {
    const double den = dot_yz(g_state, inc);
    const double num = dot_yz(window_cost_gradient(model, add_loads(maxima, inc)), inc);
    if (num == 0.0) continue;
    out.phi = std::max(out.phi, den > 0.0 ? num / den : kInfiniteCost);
    ++out.candidates;
  }
  const double d = window_cost(model, state);
  if (d > 0.0) out.psi = dot_yz(g_state, state) / d;
  return out;
}

double gradient_check(const CostModel& model, const LoadVector& loads, double step) {
  const LoadVector g = window_cost_gradient(model, loads);
  LoadVector work = loads;
  double worst = 0.0;
  // Central difference on every entry at least one step away from zero.
  auto probe = [&](double& entry, double analytic) {
    if (entry < step) return;
    const double keep = entry;
    entry = keep + step;
    const double up = window_cost(model, work);
    entry = keep - step;
    const double down = window_cost(model, work);
    entry = keep;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-3}));
  };
  for (std::size_t q = 0; q < work.slots.size(); ++q) {
    for (std::size_t j = 0; j < work.slots[q].y.size(); ++j) probe(work.slots[q].y[j], g.slots[q].y[j]);
    for (std::size_t j = 0; j < work.slots[q].z.size(); ++j) probe(work.slots[q].z[j], g.slots[q].z[j]);
  }
  return worst;
}

}  // namespace mmcplace
