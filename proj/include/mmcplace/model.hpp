#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mmcplace {

/// Cloud index in {0, 1, ..., K}; 0 means the instance is not running.
using CloudId = int;
inline constexpr CloudId kNotRunning = 0;

/// Per-instance configuration across the slots of a window (one matrix column).
using ConfigurationSequence = std::vector<CloudId>;

inline constexpr int kUnboundedSlot = std::numeric_limits<int>::max();

struct ServiceInstance {
  int id = 0;                            // monotone arrival counter, never recycled
  int arrival_slot = 1;                  // arrives at the beginning of this slot
  std::optional<int> departure_slot;     // last running slot; departs at its end
  std::optional<int> max_lifetime;       // T_life, counted from arrival; nullopt = unbounded
  double local_demand = 1.0;             // a_i(t)
  double migration_demand = 1.0;         // b_i(t)
  int user = -1;                         // owning user, -1 when not user-bound

  /// Last slot allowed by the declared lifetime.
  int lifetime_end() const;
  /// Last slot the instance can be running, combining lifetime and a known departure.
  int last_slot() const;
  bool running_at(int t) const { return t >= arrival_slot && t <= last_slot(); }
};

struct Window {
  int t0 = 1;
  int length = 1;

  int last() const { return t0 + length - 1; }
  bool contains(int t) const { return t >= t0 && t <= last(); }
};

/// Closed slot interval.
struct SlotSpan {
  int first = 0;
  int last = -1;
  int length() const { return last >= first ? last - first + 1 : 0; }
  bool empty() const { return length() == 0; }
};

/// Slots of `window` on which the instance may run: [max(arrival, t0), min(last_slot, window end)].
SlotSpan active_span(const ServiceInstance& instance, const Window& window);

/// Q-by-M placement matrix stored window-relative (row q is slot t0 + q).
class ConfigurationMatrix {
 public:
  ConfigurationMatrix() = default;
  ConfigurationMatrix(int t0, int slots, int columns);

  int t0() const { return t0_; }
  int slots() const { return slots_; }
  int columns() const { return columns_; }
  int last_slot() const { return t0_ + slots_ - 1; }
  Window window() const { return {t0_, slots_}; }

  CloudId& operator()(int q, int column) { return cells_[index(q, column)]; }
  CloudId operator()(int q, int column) const { return cells_[index(q, column)]; }

  CloudId at_slot(int t, int column) const { return (*this)(t - t0_, column); }
  void set_at_slot(int t, int column, CloudId cloud) { (*this)(t - t0_, column) = cloud; }

  std::span<const CloudId> row(int q) const;
  std::span<const CloudId> row_at_slot(int t) const { return row(t - t0_); }

  ConfigurationSequence column(int column) const;
  void set_column(int column, std::span<const CloudId> sequence);

  /// Appends an all-zero column and returns its index.
  int add_column();

  bool operator==(const ConfigurationMatrix&) const = default;

 private:
  std::size_t index(int q, int column) const {
    return static_cast<std::size_t>(q) * static_cast<std::size_t>(columns_) +
           static_cast<std::size_t>(column);
  }

  int t0_ = 1;
  int slots_ = 0;
  int columns_ = 0;
  std::vector<CloudId> cells_;
};

struct ConfigurationViolation {
  int slot = 0;     // absolute slot
  int column = 0;
  std::string reason;
};

/// Checks the matrix against the instance set. Column i describes instances[i].
/// Entries must lie in {0..K}, be zero where the instance cannot run, and the
/// nonzero entries of each column must form at most one contiguous block.
std::optional<ConfigurationViolation> validate_configuration(
    const ConfigurationMatrix& matrix, std::span<const ServiceInstance> instances,
    int num_clouds);

/// All sequences of Lambda_i: values in {1..K} on the active span, zero elsewhere.
/// Returned in lexicographic order. An empty span yields the single all-zero sequence.
std::vector<ConfigurationSequence> feasible_sequences(const ServiceInstance& instance,
                                                      const Window& window, int num_clouds);

/// Number of nonzero entries in a configuration row.
int running_count(std::span<const CloudId> row);

}  // namespace mmcplace
