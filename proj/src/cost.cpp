#include "mmcplace/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace mmcplace {

namespace {

double ipow(double x, int p) {
  double out = 1.0;
  for (int i = 0; i < p; ++i) out *= x;
  return out;
}

template <class Slot>
const Slot& slot_table(const std::vector<Slot>& slots, int t) {
  const int idx = std::clamp(t, 1, static_cast<int>(slots.size())) - 1;
  return slots[idx];
}

std::size_t pair_index(int clouds, CloudId k, CloudId l) {
  return static_cast<std::size_t>(k - 1) * clouds + static_cast<std::size_t>(l - 1);
}

}  // namespace

double CostModel::local_load_at_slope(CloudId k, int t, double mu, double limit) const {
  const double cap = std::min(local_capacity(k), limit);
  if (!(local_slope(k, t, 0.0) <= mu)) return 0.0;
  if (std::isfinite(cap) && cap == limit && local_slope(k, t, cap) <= mu) return cap;
  double lo = 0.0, hi = cap;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (local_slope(k, t, mid) <= mu ? lo : hi) = mid;
  }
  return lo;
}

// ---- linear ----------------------------------------------------------------

LinearCostModel::LinearCostModel(int clouds, std::vector<Slot> slots)
    : clouds_(clouds), slots_(std::move(slots)) {
  if (clouds_ < 1) throw std::invalid_argument("linear cost model needs K >= 1");
  if (slots_.empty()) throw std::invalid_argument("linear cost model needs coefficients");
  const std::size_t kk = static_cast<std::size_t>(clouds_) * clouds_;
  for (const Slot& s : slots_) {
    if (s.gamma.size() != static_cast<std::size_t>(clouds_) || s.kappa1.size() != kk ||
        s.kappa2.size() != kk || s.kappa3.size() != kk)
      throw std::invalid_argument("linear cost coefficient table has wrong size");
    for (double v : s.gamma)
      if (!(v >= 0.0)) throw std::invalid_argument("negative local coefficient");
    for (std::size_t i = 0; i < kk; ++i) {
      if (!(s.kappa1[i] >= 0.0 && s.kappa2[i] >= 0.0 && s.kappa3[i] >= 0.0))
        throw std::invalid_argument("negative migration coefficient");
      const bool diagonal = i / clouds_ == i % clouds_;
      if (!diagonal && (s.kappa1[i] != 0.0 || s.kappa2[i] != 0.0)) vanishes_ = false;
    }
  }
}

LinearCostModel LinearCostModel::uniform(int clouds, double gamma, double kappa1, double kappa2,
                                         double kappa3) {
  const std::size_t kk = static_cast<std::size_t>(clouds) * clouds;
  Slot s{std::vector<double>(clouds, gamma), std::vector<double>(kk, kappa1),
         std::vector<double>(kk, kappa2), std::vector<double>(kk, kappa3)};
  return LinearCostModel(clouds, {s});
}

const LinearCostModel::Slot& LinearCostModel::slot(int t) const { return slot_table(slots_, t); }

double LinearCostModel::local(CloudId k, int t, double y, double) const {
  return slot(t).gamma[k - 1] * y;
}

double LinearCostModel::migration(CloudId k, CloudId l, int t, double y_from, double y_to,
                                  double z, double) const {
  const Slot& s = slot(t);
  const std::size_t p = pair_index(clouds_, k, l);
  return s.kappa1[p] * y_from + s.kappa2[p] * y_to + s.kappa3[p] * z;
}

double LinearCostModel::local_slope(CloudId k, int t, double) const { return slot(t).gamma[k - 1]; }

std::array<double, 3> LinearCostModel::migration_gradient(CloudId k, CloudId l, int t, double,
                                                          double, double) const {
  const Slot& s = slot(t);
  const std::size_t p = pair_index(clouds_, k, l);
  return {s.kappa1[p], s.kappa2[p], s.kappa3[p]};
}

std::optional<double> LinearCostModel::constant_local_slope(CloudId k, int t) const {
  return slot(t).gamma[k - 1];
}

// ---- polynomial ------------------------------------------------------------

PolynomialCostModel::PolynomialCostModel(int clouds, std::vector<Slot> slots)
    : clouds_(clouds), slots_(std::move(slots)) {
  if (clouds_ < 1) throw std::invalid_argument("polynomial cost model needs K >= 1");
  if (slots_.empty()) throw std::invalid_argument("polynomial cost model needs coefficients");
  const std::size_t kk = static_cast<std::size_t>(clouds_) * clouds_;
  for (const Slot& s : slots_) {
    if (s.local.size() != static_cast<std::size_t>(clouds_) || s.migration.size() != kk)
      throw std::invalid_argument("polynomial coefficient table has wrong size");
    for (const auto& terms : s.local)
      for (const LocalTerm& term : terms) {
        if (term.power < 1) throw std::invalid_argument("local term must have power >= 1");
        if (term.coef < 0.0) throw std::invalid_argument("negative local coefficient");
        if (term.coef > 0.0) order_ = std::max(order_, term.power);
      }
    for (std::size_t p = 0; p < kk; ++p) {
      if (p / clouds_ == p % clouds_) continue;
      for (const MigrationTerm& term : s.migration[p]) {
        if (term.p_from < 0 || term.p_to < 0 || term.p_flow < 0)
          throw std::invalid_argument("negative exponent");
        if (term.p_from + term.p_to + term.p_flow < 1)
          throw std::invalid_argument("constant migration term");
        if (term.coef < 0.0) throw std::invalid_argument("negative migration coefficient");
        if (term.coef == 0.0) continue;
        order_ = std::max(order_, term.p_from + term.p_to + term.p_flow);
        if (term.p_flow == 0) vanishes_ = false;
        const int vars = (term.p_from > 0) + (term.p_to > 0) + (term.p_flow > 0);
        if (vars > 1) convex_ = false;
      }
    }
  }
  convex_ = convex_ && local_convex_;
}

const PolynomialCostModel::Slot& PolynomialCostModel::slot(int t) const {
  return slot_table(slots_, t);
}

double PolynomialCostModel::local(CloudId k, int t, double y, double) const {
  double v = 0.0;
  for (const LocalTerm& term : slot(t).local[k - 1]) v += term.coef * ipow(y, term.power);
  return v;
}

double PolynomialCostModel::migration(CloudId k, CloudId l, int t, double y_from, double y_to,
                                      double z, double) const {
  double v = 0.0;
  for (const MigrationTerm& term : slot(t).migration[pair_index(clouds_, k, l)])
    v += term.coef * ipow(y_from, term.p_from) * ipow(y_to, term.p_to) * ipow(z, term.p_flow);
  return v;
}

double PolynomialCostModel::local_slope(CloudId k, int t, double y) const {
  double v = 0.0;
  for (const LocalTerm& term : slot(t).local[k - 1])
    v += term.coef * term.power * ipow(y, term.power - 1);
  return v;
}

std::array<double, 3> PolynomialCostModel::migration_gradient(CloudId k, CloudId l, int t,
                                                              double y_from, double y_to,
                                                              double z) const {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  for (const MigrationTerm& term : slot(t).migration[pair_index(clouds_, k, l)]) {
    const double a = ipow(y_from, term.p_from), b = ipow(y_to, term.p_to),
                 c = ipow(z, term.p_flow);
    if (term.p_from > 0) g[0] += term.coef * term.p_from * ipow(y_from, term.p_from - 1) * b * c;
    if (term.p_to > 0) g[1] += term.coef * term.p_to * a * ipow(y_to, term.p_to - 1) * c;
    if (term.p_flow > 0) g[2] += term.coef * term.p_flow * a * b * ipow(z, term.p_flow - 1);
  }
  return g;
}

std::optional<double> PolynomialCostModel::constant_local_slope(CloudId k, int t) const {
  double slope = 0.0;
  for (const LocalTerm& term : slot(t).local[k - 1]) {
    if (term.coef == 0.0) continue;
    if (term.power != 1) return std::nullopt;
    slope += term.coef;
  }
  return slope;
}

bool PolynomialCostModel::positive_marginals_at_zero() const {
  for (const Slot& s : slots_) {
    for (int k = 1; k <= clouds_; ++k) {
      double slope = 0.0;
      for (const LocalTerm& term : s.local[k - 1])
        if (term.power == 1) slope += term.coef;
      if (!(slope > 0.0)) return false;
    }
    for (int k = 1; k <= clouds_; ++k)
      for (int l = 1; l <= clouds_; ++l) {
        if (k == l) continue;
        double slope = 0.0;
        for (const MigrationTerm& term : s.migration[pair_index(clouds_, k, l)])
          if (term.p_flow == 1 && term.p_from == 0 && term.p_to == 0) slope += term.coef;
        if (!(slope > 0.0)) return false;
      }
  }
  return true;
}

// ---- MMC + backend ---------------------------------------------------------

MmcBackendCostModel::MmcBackendCostModel(Params params) : p_(params) {
  if (p_.clouds < 1) throw std::invalid_argument("need K >= 1");
  if (p_.backend < 1 || p_.backend > p_.clouds) throw std::invalid_argument("backend out of range");
  if (!(p_.capacity > 0.0)) throw std::invalid_argument("capacity must be positive");
  if (p_.backend_local < 0 || p_.backend_migration < 0 || p_.distance_local < 0 ||
      p_.distance_migration < 0)
    throw std::invalid_argument("negative cost parameter");
}

double MmcBackendCostModel::congestion(double y) const {
  if (y >= p_.capacity) return kInfiniteCost;
  return 1.0 / (1.0 - y / p_.capacity);
}

double MmcBackendCostModel::local(CloudId k, int, double y, double r) const {
  if (k == p_.backend) return p_.backend_local * y;
  const double queue = y == 0.0 ? 0.0 : y * congestion(y);
  return queue + p_.distance_local * r;
}

double MmcBackendCostModel::migration(CloudId k, CloudId l, int, double y_from, double y_to,
                                      double z, double s) const {
  if (z == 0.0) return 0.0;
  if (k == p_.backend || l == p_.backend) return p_.backend_migration * z;
  return z * (congestion(y_from) + congestion(y_to)) + p_.distance_migration * s;
}

double MmcBackendCostModel::local_slope(CloudId k, int, double y) const {
  if (k == p_.backend) return p_.backend_local;
  const double c = congestion(y);
  return c * c;
}

std::array<double, 3> MmcBackendCostModel::migration_gradient(CloudId k, CloudId l, int,
                                                              double y_from, double y_to,
                                                              double z) const {
  if (k == p_.backend || l == p_.backend) return {0.0, 0.0, p_.backend_migration};
  const double cf = congestion(y_from), ct = congestion(y_to);
  const double inv_y = 1.0 / p_.capacity;
  return {z == 0.0 ? 0.0 : z * inv_y * cf * cf, z == 0.0 ? 0.0 : z * inv_y * ct * ct, cf + ct};
}

std::optional<double> MmcBackendCostModel::constant_local_slope(CloudId k, int) const {
  if (k == p_.backend) return p_.backend_local;
  return std::nullopt;
}

double MmcBackendCostModel::local_load_at_slope(CloudId k, int t, double mu, double limit) const {
  if (k == p_.backend) return CostModel::local_load_at_slope(k, t, mu, limit);
  // (1 - y/Y)^-2 = mu
  if (!(mu > 1.0)) return 0.0;
  return std::min(limit, p_.capacity * (1.0 - 1.0 / std::sqrt(mu)));
}

double MmcBackendCostModel::local_capacity(CloudId k) const {
  return k == p_.backend ? std::numeric_limits<double>::infinity() : p_.capacity;
}

// ---- aggregation -----------------------------------------------------------

LoadVector aggregate_loads(const ConfigurationMatrix& matrix,
                           std::span<const ServiceInstance> instances,
                           std::span<const CloudId> prev_config, int num_clouds,
                           const DistanceProvider* distances) {
  if (static_cast<int>(instances.size()) != matrix.columns())
    throw std::invalid_argument("instance count does not match matrix columns");
  LoadVector loads(matrix.t0(), num_clouds, matrix.slots());
  for (int i = 0; i < matrix.columns(); ++i) {
    const CloudId c = prev_config.empty() ? kNotRunning : prev_config[i];
    if (c != kNotRunning) loads.before.y_at(c) += instances[i].local_demand;
  }
  for (int q = 0; q < matrix.slots(); ++q) {
    const int t = matrix.t0() + q;
    SlotLoads& now = loads.slots[q];
    for (int i = 0; i < matrix.columns(); ++i) {
      const ServiceInstance& inst = instances[i];
      const CloudId to = matrix(q, i);
      const CloudId from = q == 0 ? (prev_config.empty() ? kNotRunning : prev_config[i])
                                  : matrix(q - 1, i);
      if (to == kNotRunning) continue;
      now.y_at(to) += inst.local_demand;
      if (distances) now.r[to - 1] += distances->user_distance(inst, to, t);
      if (from != kNotRunning && from != to) {
        now.z_at(from, to) += inst.migration_demand;
        if (distances) now.s_at(from, to) += distances->cloud_distance(from, to);
      }
    }
  }
  return loads;
}

double local_cost(const CostModel& model, int t, const SlotLoads& now) {
  double total = 0.0;
  for (int k = 1; k <= now.clouds; ++k) {
    if (now.y[k - 1] == 0.0 && now.r[k - 1] == 0.0) continue;
    total += model.local(k, t, now.y[k - 1], now.r[k - 1]);
  }
  return total;
}

double migration_cost(const CostModel& model, int t, const SlotLoads& prev, const SlotLoads& now) {
  if (t <= 1) return 0.0;
  const bool sparse = model.migration_vanishes_without_flow();
  double total = 0.0;
  for (int k = 1; k <= now.clouds; ++k)
    for (int l = 1; l <= now.clouds; ++l) {
      if (k == l) continue;
      const double z = now.z_at(k, l);
      if (sparse && z == 0.0) continue;
      total += model.migration(k, l, t, prev.y_at(k), now.y_at(l), z, now.s_at(k, l));
    }
  return total;
}

double slot_cost(const CostModel& model, int t, const LoadVector& loads) {
  const SlotLoads& now = loads.at_slot(t);
  return local_cost(model, t, now) + migration_cost(model, t, loads.previous(t), now);
}

double window_cost(const CostModel& model, const LoadVector& loads) {
  double total = 0.0;
  for (int q = 0; q < static_cast<int>(loads.slots.size()); ++q)
    total += slot_cost(model, loads.t0 + q, loads);
  return total;
}

double window_cost(const CostModel& model, const ConfigurationMatrix& matrix,
                   std::span<const ServiceInstance> instances, std::span<const CloudId> prev_config,
                   const DistanceProvider* distances) {
  return window_cost(model,
                     aggregate_loads(matrix, instances, prev_config, model.clouds(), distances));
}

LoadVector scale_loads(const LoadVector& loads, double c) {
  LoadVector out = loads;
  for (SlotLoads& s : out.slots) {
    for (double& v : s.y) v *= c;
    for (double& v : s.r) v *= c;
    for (double& v : s.z) v *= c;
    for (double& v : s.s) v *= c;
  }
  return out;
}

LoadVector add_loads(const LoadVector& a, const LoadVector& b) {
  if (a.slots.size() != b.slots.size() || a.clouds != b.clouds)
    throw std::invalid_argument("load vectors differ in shape");
  LoadVector out = a;
  for (std::size_t q = 0; q < out.slots.size(); ++q) {
    SlotLoads& o = out.slots[q];
    const SlotLoads& x = b.slots[q];
    for (std::size_t j = 0; j < o.y.size(); ++j) o.y[j] += x.y[j], o.r[j] += x.r[j];
    for (std::size_t j = 0; j < o.z.size(); ++j) o.z[j] += x.z[j], o.s[j] += x.s[j];
  }
  return out;
}

LoadVector window_cost_gradient(const CostModel& model, const LoadVector& loads) {
  const int K = loads.clouds;
  LoadVector g(loads.t0, K, static_cast<int>(loads.slots.size()));
  for (int q = 0; q < static_cast<int>(loads.slots.size()); ++q) {
    const int t = loads.t0 + q;
    const SlotLoads& now = loads.slots[q];
    const SlotLoads& prev = loads.previous(t);
    SlotLoads& gn = g.slots[q];
    for (int k = 1; k <= K; ++k) gn.y_at(k) += model.local_slope(k, t, now.y_at(k));
    if (t <= 1) continue;
    for (int k = 1; k <= K; ++k)
      for (int l = 1; l <= K; ++l) {
        if (k == l) continue;
        const auto d = model.migration_gradient(k, l, t, prev.y_at(k), now.y_at(l), now.z_at(k, l));
        if (q > 0) g.slots[q - 1].y_at(k) += d[0];
        gn.y_at(l) += d[1];
        gn.z_at(k, l) += d[2];
      }
  }
  return g;
}

double dot_yz(const LoadVector& a, const LoadVector& b) {
  double total = 0.0;
  for (std::size_t q = 0; q < a.slots.size(); ++q) {
    for (std::size_t j = 0; j < a.slots[q].y.size(); ++j) total += a.slots[q].y[j] * b.slots[q].y[j];
    for (std::size_t j = 0; j < a.slots[q].z.size(); ++j) total += a.slots[q].z[j] * b.slots[q].z[j];
  }
  return total;
}

// ---- row pricing -----------------------------------------------------------

double row_slot_cost(const CostModel& model, const DistanceProvider* distances, int t,
                     std::span<const ServiceInstance> columns, std::span<const CloudId> prev,
                     std::span<const CloudId> now) {
  const int K = model.clouds();
  thread_local std::vector<double> y_prev, y_now, r;
  thread_local std::vector<std::tuple<CloudId, CloudId, double, double>> moves;
  y_prev.assign(K, 0.0);
  y_now.assign(K, 0.0);
  r.assign(K, 0.0);
  moves.clear();

  for (std::size_t i = 0; i < columns.size(); ++i) {
    const CloudId from = prev.empty() ? kNotRunning : prev[i];
    const CloudId to = now[i];
    const ServiceInstance& inst = columns[i];
    if (from != kNotRunning) y_prev[from - 1] += inst.local_demand;
    if (to == kNotRunning) continue;
    y_now[to - 1] += inst.local_demand;
    if (distances) r[to - 1] += distances->user_distance(inst, to, t);
    if (from != kNotRunning && from != to)
      moves.emplace_back(from, to, inst.migration_demand,
                         distances ? distances->cloud_distance(from, to) : 0.0);
  }

  double local = 0.0;
  for (int k = 1; k <= K; ++k) {
    if (y_now[k - 1] == 0.0 && r[k - 1] == 0.0) continue;
    local += model.local(k, t, y_now[k - 1], r[k - 1]);
  }
  if (t <= 1) return local;

  double mig = 0.0;
  if (model.migration_vanishes_without_flow()) {
    std::sort(moves.begin(), moves.end());
    for (std::size_t j = 0; j < moves.size();) {
      const auto [k, l, b0, s0] = moves[j];
      double z = 0.0, s = 0.0;
      while (j < moves.size() && std::get<0>(moves[j]) == k && std::get<1>(moves[j]) == l) {
        z += std::get<2>(moves[j]);
        s += std::get<3>(moves[j]);
        ++j;
      }
      mig += model.migration(k, l, t, y_prev[k - 1], y_now[l - 1], z, s);
    }
  } else {
    thread_local std::vector<double> z, s;
    z.assign(static_cast<std::size_t>(K) * K, 0.0);
    s.assign(static_cast<std::size_t>(K) * K, 0.0);
    for (const auto& [k, l, b, d] : moves) {
      z[pair_index(K, k, l)] += b;
      s[pair_index(K, k, l)] += d;
    }
    for (int k = 1; k <= K; ++k)
      for (int l = 1; l <= K; ++l) {
        if (k == l) continue;
        mig += model.migration(k, l, t, y_prev[k - 1], y_now[l - 1], z[pair_index(K, k, l)],
                               s[pair_index(K, k, l)]);
      }
  }
  return local + mig;
}

double ActualPricer::slot_cost(int t, std::span<const ServiceInstance> columns,
                               std::span<const CloudId> prev, std::span<const CloudId> now) const {
  return row_slot_cost(model_, distances_, t, columns, prev, now);
}

double window_cost(const SlotPricer& pricer, const ConfigurationMatrix& matrix,
                   std::span<const ServiceInstance> columns, std::span<const CloudId> prev_config) {
  std::vector<CloudId> zero;
  std::span<const CloudId> prev = prev_config;
  if (prev.empty()) {
    zero.assign(static_cast<std::size_t>(matrix.columns()), kNotRunning);
    prev = zero;
  }
  double total = 0.0;
  for (int q = 0; q < matrix.slots(); ++q) {
    const int t = matrix.t0() + q;
    total += pricer.slot_cost(t, columns, prev, matrix.row(q));
    prev = matrix.row(q);
  }
  return total;
}

std::vector<double> per_slot_costs(const SlotPricer& pricer, const ConfigurationMatrix& matrix,
                                   std::span<const ServiceInstance> columns,
                                   std::span<const CloudId> prev_config) {
  std::vector<CloudId> zero;
  std::span<const CloudId> prev = prev_config;
  if (prev.empty()) {
    zero.assign(static_cast<std::size_t>(matrix.columns()), kNotRunning);
    prev = zero;
  }
  std::vector<double> out(static_cast<std::size_t>(matrix.slots()));
  for (int q = 0; q < matrix.slots(); ++q) {
    out[q] = pricer.slot_cost(matrix.t0() + q, columns, prev, matrix.row(q));
    prev = matrix.row(q);
  }
  return out;
}

double HorizonResult::total_cost() const {
  double total = 0.0;
  for (double c : slot_costs) total += c;
  return total;
}

}  // namespace mmcplace
