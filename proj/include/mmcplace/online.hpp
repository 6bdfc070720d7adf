#pragma once

#include <cstdint>
#include <vector>

#include "mmcplace/cost.hpp"
#include "mmcplace/predictor.hpp"

namespace mmcplace {

/// Controller state inside one look-ahead window.
struct WindowState {
  Window window;
  std::vector<ServiceInstance> columns;  // instances as currently known to the controller
  std::vector<CloudId> prev_config;      // slot t0 - 1 per column
  ConfigurationMatrix placement;

  explicit WindowState(Window w) : window(w), placement(w.t0, w.length, 0) {}

  /// Column index of an instance id, or -1.
  int column_of(int instance_id) const;
  /// Adds an all-zero column for the instance and returns its index.
  int add_column(const ServiceInstance& instance, CloudId prev = kNotRunning);
};

struct ArrivalOutcome {
  int column = -1;
  std::uint64_t relaxations = 0;
  double cost = 0.0;      // window cost after placement
  bool infinite = false;  // every path had infinite cost
};

/// Places one instance on arrival at slot t, keeping every other column fixed.
/// The column is optimised over [t, t_e] with t_e = min(last known slot, window end),
/// counting every slot whose cost depends on it (t .. t_e + 1 within the window).
ArrivalOutcome place_on_arrival(const ServiceInstance& instance, int t, WindowState& state,
                                const SlotPricer& pricer);

/// Departure at the end of slot t: zeroes the column from t + 1 on.
/// Returns false (and logs a warning) for an unknown id.
bool handle_departure(int instance_id, int t, WindowState& state);

struct OnlineOptions {
  /// Reveal each departure slot at arrival (future knowledge).
  bool departures_known = false;
};

/// Window-by-window online control over slots 1..horizon. Instances running at a
/// window start re-arrive there; arrivals in the same slot are placed by id.
HorizonResult run_online(int horizon, int window_size, const std::vector<ServiceInstance>& instances,
                         const CostOracle& oracle, const OnlineOptions& options = {});

}  // namespace mmcplace
