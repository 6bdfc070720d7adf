#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mmcplace/cost.hpp"
#include "mmcplace/predictor.hpp"

namespace mmcplace {

/// One look-ahead window with fully known arrivals and departures.
struct WindowProblem {
  Window window;
  std::vector<ServiceInstance> columns;
  std::vector<CloudId> prev_config;  // slot t0 - 1, one entry per column; empty means all zero
};

struct OfflineOptions {
  std::size_t state_budget = 200000;  // joint states per slot
};

struct WindowSolution {
  ConfigurationMatrix placement;
  double cost = 0.0;
  std::uint64_t relaxations = 0;
  /// Cost of the chosen path up to and including each slot.
  std::vector<double> path_values;
};

class StateBudgetExceeded : public std::runtime_error {
 public:
  StateBudgetExceeded(int slot, double required, std::size_t budget);
  int slot() const { return slot_; }
  double required() const { return required_; }
  std::size_t budget() const { return budget_; }

 private:
  int slot_;
  double required_;
  std::size_t budget_;
};

/// Shortest path over joint per-slot configurations. Each slot enumerates K
/// choices for every running column only. Ties resolve to the lowest-index
/// predecessor, i.e. the lexicographically smallest rows read from the last slot back.
WindowSolution solve_window_offline(const WindowProblem& problem, const SlotPricer& pricer,
                                    const OfflineOptions& options = {});

/// Consecutive disjoint windows of `window_size` slots over 1..horizon, each solved
/// exactly on predicted costs, threading the last row into the next window.
HorizonResult run_offline(int horizon, int window_size, const std::vector<ServiceInstance>& instances,
                          const CostOracle& oracle, const OfflineOptions& options = {});

/// Columns relevant to a window: instances running in it or in the slot before it.
std::vector<int> window_column_indices(const std::vector<ServiceInstance>& instances,
                                       const Window& window);

}  // namespace mmcplace
