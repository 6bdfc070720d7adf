#include "mmcplace/online.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

namespace mmcplace {

int WindowState::column_of(int instance_id) const {
  for (int i = 0; i < static_cast<int>(columns.size()); ++i)
    if (columns[i].id == instance_id) return i;
  return -1;
}

int WindowState::add_column(const ServiceInstance& instance, CloudId prev) {
  columns.push_back(instance);
  prev_config.push_back(prev);
  return placement.add_column();
}

ArrivalOutcome place_on_arrival(const ServiceInstance& instance, int t, WindowState& state,
                                const SlotPricer& pricer) {
  const Window& w = state.window;
  if (!w.contains(t)) throw std::invalid_argument("arrival outside the window");
  ArrivalOutcome out;
  int col = state.column_of(instance.id);
  if (col < 0) col = state.add_column(instance);
  else state.columns[col] = instance;
  out.column = col;

  const int K = pricer.clouds();
  const int t_e = std::min(instance.last_slot(), w.last());
  for (int s = t; s <= w.last(); ++s) state.placement.set_at_slot(s, col, kNotRunning);
  if (t_e < t) {
    out.cost = window_cost(pricer, state.placement, state.columns, state.prev_config);
    return out;
  }

  const ConfigurationMatrix& P = state.placement;
  const int M = P.columns();
  std::vector<CloudId> prev_row(M), now_row(M);
  auto load_rows = [&](int s) {
    if (s == w.t0) std::copy(state.prev_config.begin(), state.prev_config.end(), prev_row.begin());
    else std::copy(P.row_at_slot(s - 1).begin(), P.row_at_slot(s - 1).end(), prev_row.begin());
    std::copy(P.row_at_slot(s).begin(), P.row_at_slot(s).end(), now_row.begin());
  };

  const int span = t_e - t + 1;
  std::vector<std::vector<std::uint8_t>> back(span);
  std::vector<double> nu(K), mu(K);

  load_rows(t);
  // prev_row already carries the column's own slot t-1 placement (zero for fresh arrivals).
  for (int m = 1; m <= K; ++m) {
    now_row[col] = m;
    nu[m - 1] = pricer.slot_cost(t, state.columns, prev_row, now_row);
    ++out.relaxations;
  }
  for (int s = t + 1; s <= t_e; ++s) {
    load_rows(s);
    std::vector<std::uint8_t>& bp = back[s - t];
    bp.assign(K, 0);
    for (int m = 1; m <= K; ++m) {
      now_row[col] = m;
      double best = kInfiniteCost;
      int arg = 0;
      for (int n = 1; n <= K; ++n) {
        ++out.relaxations;
        if (nu[n - 1] == kInfiniteCost) continue;
        prev_row[col] = n;
        const double c = nu[n - 1] + pricer.slot_cost(s, state.columns, prev_row, now_row);
        if (c < best) {
          best = c;
          arg = n - 1;
        }
      }
      mu[m - 1] = best;
      bp[m - 1] = static_cast<std::uint8_t>(arg);
    }
    std::swap(nu, mu);
  }
  // The slot after t_e sees the column only through its slot t_e placement.
  if (t_e < w.last()) {
    load_rows(t_e + 1);
    now_row[col] = kNotRunning;
    for (int m = 1; m <= K; ++m) {
      ++out.relaxations;
      if (nu[m - 1] == kInfiniteCost) continue;
      prev_row[col] = m;
      nu[m - 1] = nu[m - 1] + pricer.slot_cost(t_e + 1, state.columns, prev_row, now_row);
    }
  }

  int end = 0;
  for (int m = 1; m < K; ++m)
    if (nu[m] < nu[end]) end = m;
  out.infinite = nu[end] == kInfiniteCost;
  if (out.infinite)
    spdlog::warn("instance {} at slot {}: every placement has infinite predicted cost", instance.id, t);

  int cur = end;
  for (int s = t_e; s >= t; --s) {
    state.placement.set_at_slot(s, col, cur + 1);
    if (s > t) cur = back[s - t][cur];
  }
  out.cost = window_cost(pricer, state.placement, state.columns, state.prev_config);
  return out;
}

bool handle_departure(int instance_id, int t, WindowState& state) {
  const int col = state.column_of(instance_id);
  if (col < 0) {
    spdlog::warn("departure of unknown instance {} at slot {} ignored", instance_id, t);
    return false;
  }
  for (int s = std::max(t + 1, state.window.t0); s <= state.window.last(); ++s)
    state.placement.set_at_slot(s, col, kNotRunning);
  ServiceInstance& inst = state.columns[col];
  if (!inst.departure_slot || *inst.departure_slot > t) inst.departure_slot = t;
  return true;
}

HorizonResult run_online(int horizon, int window_size, const std::vector<ServiceInstance>& instances,
                         const CostOracle& oracle, const OnlineOptions& options) {
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  if (window_size < 1) throw std::invalid_argument("window size must be >= 1");
  if (oracle.model().clouds() > 256) throw std::invalid_argument("at most 256 clouds supported");
  const int N = static_cast<int>(instances.size());
  HorizonResult result;
  result.placement = ConfigurationMatrix(1, horizon, N);

  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (instances[a].arrival_slot != instances[b].arrival_slot)
      return instances[a].arrival_slot < instances[b].arrival_slot;
    return instances[a].id < instances[b].id;
  });

  // What the controller knows about instance i at slot t.
  auto view = [&](int i, int t) {
    ServiceInstance v = instances[i];
    if (!options.departures_known && v.departure_slot && *v.departure_slot >= t)
      v.departure_slot.reset();
    return v;
  };

  std::size_t next = 0;
  for (int t0 = 1; t0 <= horizon; t0 += window_size) {
    const Window w{t0, std::min(window_size, horizon - t0 + 1)};
    WindowState state(w);
    const PredictedPricer pricer = oracle.predicted(t0);
    std::vector<int> global_col;

    if (t0 > 1) {
      std::vector<int> carried;
      for (int i = 0; i < N; ++i)
        if (result.placement.at_slot(t0 - 1, i) != kNotRunning) carried.push_back(i);
      std::sort(carried.begin(), carried.end(),
                [&](int a, int b) { return instances[a].id < instances[b].id; });
      for (int i : carried) {
        state.add_column(view(i, t0), result.placement.at_slot(t0 - 1, i));
        global_col.push_back(i);
      }
      for (int c = 0; c < static_cast<int>(carried.size()); ++c)
        if (state.columns[c].last_slot() >= t0)
          result.relaxations += place_on_arrival(state.columns[c], t0, state, pricer).relaxations;
    }

    for (int t = w.t0; t <= w.last(); ++t) {
      while (next < order.size() && instances[order[next]].arrival_slot < t) ++next;
      while (next < order.size() && instances[order[next]].arrival_slot == t) {
        const int i = order[next++];
        const ServiceInstance v = view(i, t);
        if (v.last_slot() < t) continue;
        state.add_column(v);
        global_col.push_back(i);
        result.relaxations += place_on_arrival(v, t, state, pricer).relaxations;
      }
      if (!options.departures_known) {
        for (int c = 0; c < static_cast<int>(global_col.size()); ++c) {
          const ServiceInstance& truth = instances[global_col[c]];
          if (truth.departure_slot && *truth.departure_slot == t &&
              state.placement.at_slot(t, c) != kNotRunning)
            handle_departure(truth.id, t, state);
        }
      }
    }

    for (int c = 0; c < static_cast<int>(global_col.size()); ++c)
      for (int t = w.t0; t <= w.last(); ++t)
        result.placement.set_at_slot(t, global_col[c], state.placement.at_slot(t, c));
  }
  result.slot_costs = per_slot_costs(oracle.actual(), result.placement, instances, {});
  return result;
}

}  // namespace mmcplace
