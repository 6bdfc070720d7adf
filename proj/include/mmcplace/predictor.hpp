#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmcplace/cost.hpp"

namespace mmcplace {

/// Maximum prediction error eps(tau) when looking ahead tau slots, and its running sum F.
class ErrorBound {
 public:
  enum class Form { Zero, PowerLaw, Tabulated };

  static ErrorBound zero();
  /// F(T) = beta * T^alpha; alpha must exceed 1 and beta be non-negative.
  static ErrorBound power_law(double beta, double alpha);
  /// eps(tau) = table[tau]; the last entry repeats beyond the table.
  static ErrorBound tabulated(std::vector<double> table);

  double epsilon(int tau) const;
  double cumulative(int T) const;

  Form form() const { return form_; }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  const std::vector<double>& table() const { return table_; }
  bool is_zero() const;

 private:
  Form form_ = Form::Zero;
  double beta_ = 0.0;
  double alpha_ = 1.0;
  std::vector<double> table_;
};

double epsilon(const ErrorBound& bound, int tau);
double cumulative_error(const ErrorBound& bound, int T);

enum class NoiseShape { Uniform, TruncatedGaussian };

struct PredictionSettings {
  ErrorBound bound = ErrorBound::zero();
  std::uint64_t seed = 0;
  NoiseShape shape = NoiseShape::Uniform;
  /// Upper bound on simultaneously running instances; sets the per-instance share of eps.
  int instance_bound = 1;
};

/// Additive offsets on the per-instance local cost, i.e. on the user-distance
/// parameter, for slot t as predicted at window start t0.
struct Perturbation {
  int t0 = 1;
  int t = 1;
  double epsilon = 0.0;  // eps(t - t0), zero for past slots
  int instance_bound = 1;
  std::uint64_t seed = 0;
  NoiseShape shape = NoiseShape::Uniform;

  bool exact() const { return epsilon == 0.0; }
  /// Unit-range noise in [-1, 1] for (instance, cloud).
  double unit_noise(int instance_id, CloudId k) const;
  /// Total deviation of the slot cost for a configuration row.
  double row_offset(std::span<const ServiceInstance> columns, std::span<const CloudId> row) const;
};

class PredictedPricer;

class CostOracle {
 public:
  CostOracle(const CostModel& model, const DistanceProvider* distances,
             PredictionSettings settings);

  const SlotPricer& actual() const { return actual_; }
  /// Predictions made at window start t0, frozen for that window.
  PredictedPricer predicted(int t0) const;
  Perturbation params(int t0, int t) const;

  const CostModel& model() const { return model_; }
  const DistanceProvider* distances() const { return distances_; }
  const PredictionSettings& settings() const { return settings_; }

 private:
  const CostModel& model_;
  const DistanceProvider* distances_;
  PredictionSettings settings_;
  ActualPricer actual_;
};

Perturbation predicted_cost_params(const CostOracle& oracle, int t0, int t);

class PredictedPricer final : public SlotPricer {
 public:
  PredictedPricer(const CostOracle& oracle, int t0) : oracle_(oracle), t0_(t0) {}

  int clouds() const override { return oracle_.model().clouds(); }
  double slot_cost(int t, std::span<const ServiceInstance> columns, std::span<const CloudId> prev,
                   std::span<const CloudId> now) const override;
  int t0() const { return t0_; }

 private:
  const CostOracle& oracle_;
  int t0_;
};

}  // namespace mmcplace
