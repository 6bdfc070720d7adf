#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmcplace/cost.hpp"
#include "mmcplace/offline.hpp"

namespace mmcplace {

class EnumerationBudgetExceeded : public std::runtime_error {
 public:
  EnumerationBudgetExceeded(double required, std::size_t budget);
  double required() const { return required_; }

 private:
  double required_;
};

struct BruteForceResult {
  ConfigurationMatrix placement;
  double cost = 0.0;
  std::uint64_t evaluated = 0;
};

/// Exhaustive minimum over the product of every column's feasible sequences.
/// Equal costs resolve to the matrix whose rows, compared from the last slot
/// backwards, are lexicographically smallest (the offline solver's order).
BruteForceResult brute_force_offline(const WindowProblem& problem, const SlotPricer& pricer,
                                     std::size_t budget = 1000000);

/// min sum_k u_k(y_k) subject to sum_k y_k = sum(demands), y_k >= 0, at slot t.
double fractional_lower_bound_single_slot(std::span<const double> demands, const CostModel& model,
                                          int t = 1);

struct FractionalAllocation {
  std::vector<double> y;  // [k-1]
  double cost = 0.0;
  double marginal = 0.0;  // equalised marginal cost
};
FractionalAllocation fractional_allocation_single_slot(double total_demand, const CostModel& model,
                                                       int t = 1);

/// Load contribution (a_{i lambda}, b_{i lambda}) of one column sequence.
LoadVector sequence_loads(const ServiceInstance& instance, std::span<const CloudId> sequence,
                          const Window& window, CloudId prev, int num_clouds);

/// Candidate increments for every instance. When an instance has more than
/// `per_instance_limit` sequences, that many are drawn uniformly with `seed`.
std::vector<LoadVector> candidate_increments(std::span<const ServiceInstance> instances,
                                             std::span<const CloudId> prev_config,
                                             const Window& window, int num_clouds,
                                             std::size_t per_instance_limit = 4096,
                                             std::uint64_t seed = 1);

/// Element-wise maximum over in-window y and z entries.
LoadVector elementwise_max(std::span<const LoadVector> states);

struct GapConstants {
  double phi = 1.0;
  std::optional<double> psi;  // undefined when the window cost is zero
  std::size_t candidates = 0;
};

/// phi: largest ratio of grad D(max + inc) . inc to grad D(state) . inc;
/// psi: grad D(state) . state / D(state).
GapConstants gap_constants(const CostModel& model, const LoadVector& state,
                           const LoadVector& maxima, std::span<const LoadVector> increments);

/// Largest relative gap between the analytic gradient and central differences.
double gradient_check(const CostModel& model, const LoadVector& loads, double step = 1e-6);

}  // namespace mmcplace
