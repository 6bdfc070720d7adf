#include "mmcplace/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mmcplace {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace

ErrorBound ErrorBound::zero() { return ErrorBound{}; }

ErrorBound ErrorBound::power_law(double beta, double alpha) {
  if (!(alpha > 1.0)) throw std::invalid_argument("power-law error bound needs alpha > 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("power-law error bound needs beta >= 0");
  ErrorBound b;
  b.form_ = Form::PowerLaw;
  b.beta_ = beta;
  b.alpha_ = alpha;
  return b;
}

ErrorBound ErrorBound::tabulated(std::vector<double> table) {
  if (table.empty()) throw std::invalid_argument("empty error table");
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!(table[i] >= 0.0)) throw std::invalid_argument("negative error bound");
    if (i > 0 && table[i] < table[i - 1])
      throw std::invalid_argument("error bound must be non-decreasing in look-ahead");
  }
  ErrorBound b;
  b.form_ = Form::Tabulated;
  b.table_ = std::move(table);
  return b;
}

bool ErrorBound::is_zero() const {
  switch (form_) {
    case Form::Zero: return true;
    case Form::PowerLaw: return beta_ == 0.0;
    case Form::Tabulated: return table_.back() == 0.0;
  }
  return true;
}

double ErrorBound::epsilon(int tau) const {
  if (tau < 0) throw std::invalid_argument("look-ahead must be non-negative");
  switch (form_) {
    case Form::Zero: return 0.0;
    case Form::PowerLaw: return cumulative(tau + 1) - cumulative(tau);
    case Form::Tabulated: return table_[std::min<std::size_t>(tau, table_.size() - 1)];
  }
  return 0.0;
}

double ErrorBound::cumulative(int T) const {
  if (T < 0) throw std::invalid_argument("window length must be non-negative");
  switch (form_) {
    case Form::Zero: return 0.0;
    case Form::PowerLaw: return T == 0 ? 0.0 : beta_ * std::pow(static_cast<double>(T), alpha_);
    case Form::Tabulated: {
      double sum = 0.0;
      for (int tau = 0; tau < T; ++tau) sum += epsilon(tau);
      return sum;
    }
  }
  return 0.0;
}

double epsilon(const ErrorBound& bound, int tau) { return bound.epsilon(tau); }
double cumulative_error(const ErrorBound& bound, int T) { return bound.cumulative(T); }

double Perturbation::unit_noise(int instance_id, CloudId k) const {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t0)));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)) << 1));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(instance_id)) << 2));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(k)) << 3));
  if (shape == NoiseShape::Uniform) return 2.0 * to_unit(h) - 1.0;
  // Standard normal scaled by 1/2, resampled until it falls in [-1, 1].
  for (std::uint64_t draw = 0;; ++draw) {
    const std::uint64_t a = splitmix64(h + 2 * draw);
    const std::uint64_t b = splitmix64(h + 2 * draw + 1);
    const double u1 = std::max(to_unit(a), 0x1.0p-53);
    const double u2 = to_unit(b);
    const double g = 0.5 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    if (std::abs(g) <= 1.0) return g;
  }
}

double Perturbation::row_offset(std::span<const ServiceInstance> columns,
                                std::span<const CloudId> row) const {
  if (exact()) return 0.0;
  const int running = running_count(row);
  if (running == 0) return 0.0;
  const double share = epsilon / std::max(instance_bound, running);
  double total = 0.0;
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (row[i] != kNotRunning) total += share * unit_noise(columns[i].id, row[i]);
  return total;
}

CostOracle::CostOracle(const CostModel& model, const DistanceProvider* distances,
                       PredictionSettings settings)
    : model_(model), distances_(distances), settings_(std::move(settings)),
      actual_(model, distances) {
  if (settings_.instance_bound < 1) throw std::invalid_argument("instance bound must be >= 1");
}

PredictedPricer CostOracle::predicted(int t0) const { return PredictedPricer(*this, t0); }

Perturbation CostOracle::params(int t0, int t) const {
  if (t < 1) throw std::invalid_argument("slot must be >= 1");
  Perturbation p;
  p.t0 = t0;
  p.t = t;
  p.epsilon = t < t0 ? 0.0 : settings_.bound.epsilon(t - t0);
  p.instance_bound = settings_.instance_bound;
  p.seed = settings_.seed;
  p.shape = settings_.shape;
  return p;
}

Perturbation predicted_cost_params(const CostOracle& oracle, int t0, int t) {
  return oracle.params(t0, t);
}

double PredictedPricer::slot_cost(int t, std::span<const ServiceInstance> columns,
                                  std::span<const CloudId> prev,
                                  std::span<const CloudId> now) const {
  const double base =
      row_slot_cost(oracle_.model(), oracle_.distances(), t, columns, prev, now);
  if (!std::isfinite(base)) return base;
  return base + oracle_.params(t0_, t).row_offset(columns, now);
}

}  // namespace mmcplace
