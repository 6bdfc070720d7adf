#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mmcplace/model.hpp"

namespace mmcplace {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

/// Cost families. Cloud arguments are 1-based CloudIds.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual int clouds() const = 0;

  /// u_{k,t}(y) plus the distance term for a per-cloud distance sum r.
  virtual double local(CloudId k, int t, double y, double r) const = 0;
  /// w_{kl,t}(y_from, y_to, z) plus the distance term for a migration-distance sum s.
  /// y_from is the load of k in slot t-1, y_to the load of l in slot t.
  virtual double migration(CloudId k, CloudId l, int t, double y_from, double y_to, double z,
                           double s) const = 0;

  virtual double local_slope(CloudId k, int t, double y) const = 0;
  /// Partial derivatives of w with respect to (y_from, y_to, z).
  virtual std::array<double, 3> migration_gradient(CloudId k, CloudId l, int t, double y_from,
                                                   double y_to, double z) const = 0;

  /// Constant slope when u_{k,t} is linear in y, used by water-filling.
  virtual std::optional<double> constant_local_slope(CloudId k, int t) const = 0;
  /// Largest load with finite local cost; +inf when unbounded.
  virtual double local_capacity(CloudId k) const {
    (void)k;
    return std::numeric_limits<double>::infinity();
  }
  /// Largest y in [0, limit] with local_slope(k, t, y) <= mu (bisection by default).
  virtual double local_load_at_slope(CloudId k, int t, double mu, double limit) const;

  /// true when w(.,.,0) == 0 for every pair, so idle pairs can be skipped.
  virtual bool migration_vanishes_without_flow() const = 0;
  /// Every u is convex and non-decreasing in y.
  virtual bool local_convex_nondecreasing() const = 0;
  /// Every u and w is jointly convex and non-decreasing.
  virtual bool convex_nondecreasing() const = 0;
  /// Highest polynomial order with a positive coefficient.
  virtual int order() const { return 1; }
};

/// Coefficients may vary per slot; slot t uses table min(t, size) - 1.
class LinearCostModel final : public CostModel {
 public:
  struct Slot {
    std::vector<double> gamma;   // [k-1]
    std::vector<double> kappa1;  // [(k-1)*K + (l-1)]
    std::vector<double> kappa2;
    std::vector<double> kappa3;
  };

  LinearCostModel(int clouds, std::vector<Slot> slots);
  /// Time-invariant coefficients.
  static LinearCostModel uniform(int clouds, double gamma, double kappa1, double kappa2,
                                 double kappa3);

  int clouds() const override { return clouds_; }
  double local(CloudId k, int t, double y, double r) const override;
  double migration(CloudId k, CloudId l, int t, double y_from, double y_to, double z,
                   double s) const override;
  double local_slope(CloudId k, int t, double y) const override;
  std::array<double, 3> migration_gradient(CloudId k, CloudId l, int t, double y_from,
                                           double y_to, double z) const override;
  std::optional<double> constant_local_slope(CloudId k, int t) const override;
  bool migration_vanishes_without_flow() const override { return vanishes_; }
  bool local_convex_nondecreasing() const override { return true; }
  bool convex_nondecreasing() const override { return true; }

  const Slot& slot(int t) const;

 private:
  int clouds_;
  std::vector<Slot> slots_;
  bool vanishes_ = true;
};

class PolynomialCostModel final : public CostModel {
 public:
  struct LocalTerm {
    int power = 1;
    double coef = 0.0;
  };
  struct MigrationTerm {
    int p_from = 0;
    int p_to = 0;
    int p_flow = 1;
    double coef = 0.0;
  };
  struct Slot {
    std::vector<std::vector<LocalTerm>> local;          // [k-1]
    std::vector<std::vector<MigrationTerm>> migration;  // [(k-1)*K + (l-1)]
  };

  PolynomialCostModel(int clouds, std::vector<Slot> slots);

  int clouds() const override { return clouds_; }
  double local(CloudId k, int t, double y, double r) const override;
  double migration(CloudId k, CloudId l, int t, double y_from, double y_to, double z,
                   double s) const override;
  double local_slope(CloudId k, int t, double y) const override;
  std::array<double, 3> migration_gradient(CloudId k, CloudId l, int t, double y_from,
                                           double y_to, double z) const override;
  std::optional<double> constant_local_slope(CloudId k, int t) const override;
  bool migration_vanishes_without_flow() const override { return vanishes_; }
  bool local_convex_nondecreasing() const override { return local_convex_; }
  bool convex_nondecreasing() const override { return convex_; }
  int order() const override { return order_; }

  /// du/dy(0) > 0 and dw/dz(.,.,0) > 0 for every cloud, pair and slot.
  bool positive_marginals_at_zero() const;

  const Slot& slot(int t) const;

 private:
  int clouds_;
  std::vector<Slot> slots_;
  int order_ = 0;
  bool vanishes_ = true;
  bool local_convex_ = true;
  bool convex_ = true;
};

/// Queueing-style MMC costs with a linear backend.
class MmcBackendCostModel final : public CostModel {
 public:
  struct Params {
    int clouds = 2;            // K, including the backend
    CloudId backend = 2;       // k0
    double capacity = 5.0;     // Y
    double backend_local = 3.0;      // g~
    double backend_migration = 3.0;  // h~
    double distance_local = 0.2;     // g
    double distance_migration = 0.2; // h
  };

  explicit MmcBackendCostModel(Params params);

  /// R(y) = 1 / (1 - y/Y), +inf for y >= Y.
  double congestion(double y) const;

  int clouds() const override { return p_.clouds; }
  double local(CloudId k, int t, double y, double r) const override;
  double migration(CloudId k, CloudId l, int t, double y_from, double y_to, double z,
                   double s) const override;
  double local_slope(CloudId k, int t, double y) const override;
  std::array<double, 3> migration_gradient(CloudId k, CloudId l, int t, double y_from,
                                           double y_to, double z) const override;
  std::optional<double> constant_local_slope(CloudId k, int t) const override;
  double local_capacity(CloudId k) const override;
  double local_load_at_slope(CloudId k, int t, double mu, double limit) const override;
  bool migration_vanishes_without_flow() const override { return true; }
  bool local_convex_nondecreasing() const override { return true; }
  // z * R(y) is not jointly convex in (y, z).
  bool convex_nondecreasing() const override { return false; }

  const Params& params() const { return p_; }

 private:
  Params p_;
};

/// Topology-dependent distances feeding r_k(t) and s_kl(t).
class DistanceProvider {
 public:
  virtual ~DistanceProvider() = default;
  /// Distance between the instance's user and cloud k in slot t.
  virtual double user_distance(const ServiceInstance& instance, CloudId k, int t) const = 0;
  /// Distance between clouds k and l.
  virtual double cloud_distance(CloudId k, CloudId l) const = 0;
};

/// Per-slot aggregates: y_k, r_k and dense K-by-K z_kl, s_kl.
struct SlotLoads {
  int clouds = 0;
  std::vector<double> y;
  std::vector<double> r;
  std::vector<double> z;
  std::vector<double> s;

  explicit SlotLoads(int k = 0)
      : clouds(k), y(k, 0.0), r(k, 0.0), z(static_cast<std::size_t>(k) * k, 0.0),
        s(static_cast<std::size_t>(k) * k, 0.0) {}

  double& y_at(CloudId k) { return y[k - 1]; }
  double y_at(CloudId k) const { return y[k - 1]; }
  double& z_at(CloudId k, CloudId l) { return z[(k - 1) * clouds + (l - 1)]; }
  double z_at(CloudId k, CloudId l) const { return z[(k - 1) * clouds + (l - 1)]; }
  double& s_at(CloudId k, CloudId l) { return s[(k - 1) * clouds + (l - 1)]; }
  double s_at(CloudId k, CloudId l) const { return s[(k - 1) * clouds + (l - 1)]; }
};

/// Loads of every slot in a window plus the slot before it.
struct LoadVector {
  int t0 = 1;
  int clouds = 0;
  SlotLoads before;            // slot t0 - 1
  std::vector<SlotLoads> slots;  // slot t0 + q

  LoadVector() = default;
  LoadVector(int t0_, int clouds_, int length)
      : t0(t0_), clouds(clouds_), before(clouds_), slots(length, SlotLoads(clouds_)) {}

  SlotLoads& at_slot(int t) { return slots[t - t0]; }
  const SlotLoads& at_slot(int t) const { return slots[t - t0]; }
  const SlotLoads& previous(int t) const { return t == t0 ? before : slots[t - t0 - 1]; }
};

/// y and z per the defining sums; r and s are filled when `distances` is given.
/// prev_config holds one entry per column for slot t0 - 1 (empty means all zero).
LoadVector aggregate_loads(const ConfigurationMatrix& matrix,
                           std::span<const ServiceInstance> instances,
                           std::span<const CloudId> prev_config, int num_clouds,
                           const DistanceProvider* distances = nullptr);

double local_cost(const CostModel& model, int t, const SlotLoads& now);
double migration_cost(const CostModel& model, int t, const SlotLoads& prev, const SlotLoads& now);
double slot_cost(const CostModel& model, int t, const LoadVector& loads);
double window_cost(const CostModel& model, const LoadVector& loads);
double window_cost(const CostModel& model, const ConfigurationMatrix& matrix,
                   std::span<const ServiceInstance> instances, std::span<const CloudId> prev_config,
                   const DistanceProvider* distances = nullptr);

/// Multiplies every in-window y, z, r and s by c; the slot before the window is kept.
LoadVector scale_loads(const LoadVector& loads, double c);
/// Componentwise sum of in-window entries; `before` is taken from a.
LoadVector add_loads(const LoadVector& a, const LoadVector& b);

/// Partial derivatives of the window cost with respect to every in-window y and z
/// (r and s entries of the result are left zero).
LoadVector window_cost_gradient(const CostModel& model, const LoadVector& loads);
/// Inner product over in-window y and z entries.
double dot_yz(const LoadVector& a, const LoadVector& b);

/// Prices a slot from two consecutive configuration rows. Solvers only see this.
class SlotPricer {
 public:
  virtual ~SlotPricer() = default;
  virtual int clouds() const = 0;
  /// C(t) for the columns' placements `prev` in t-1 and `now` in t.
  virtual double slot_cost(int t, std::span<const ServiceInstance> columns,
                           std::span<const CloudId> prev, std::span<const CloudId> now) const = 0;
};

/// Actual costs: the model evaluated on true parameters.
class ActualPricer final : public SlotPricer {
 public:
  ActualPricer(const CostModel& model, const DistanceProvider* distances = nullptr)
      : model_(model), distances_(distances) {}

  int clouds() const override { return model_.clouds(); }
  double slot_cost(int t, std::span<const ServiceInstance> columns, std::span<const CloudId> prev,
                   std::span<const CloudId> now) const override;

  const CostModel& model() const { return model_; }
  const DistanceProvider* distances() const { return distances_; }

 private:
  const CostModel& model_;
  const DistanceProvider* distances_;
};

/// C(t) straight from two configuration rows.
double row_slot_cost(const CostModel& model, const DistanceProvider* distances, int t,
                     std::span<const ServiceInstance> columns, std::span<const CloudId> prev,
                     std::span<const CloudId> now);

/// Sum over the window of pricer.slot_cost, starting from prev_config.
double window_cost(const SlotPricer& pricer, const ConfigurationMatrix& matrix,
                   std::span<const ServiceInstance> columns, std::span<const CloudId> prev_config);

/// Per-slot costs of a placement, C(t0) .. C(t0+Q-1).
std::vector<double> per_slot_costs(const SlotPricer& pricer, const ConfigurationMatrix& matrix,
                                   std::span<const ServiceInstance> columns,
                                   std::span<const CloudId> prev_config);

/// Outcome of a full-horizon run: placement over slots 1..S with one column per
/// instance (in input order) and the actual cost of every slot.
struct HorizonResult {
  ConfigurationMatrix placement;
  std::vector<double> slot_costs;
  std::uint64_t relaxations = 0;

  double total_cost() const;
};

}  // namespace mmcplace
