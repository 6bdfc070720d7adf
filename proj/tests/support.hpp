#pragma once

#include <random>
#include <vector>

#include "mmcplace/cost.hpp"
#include "mmcplace/model.hpp"

namespace testsupport {

using namespace mmcplace;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline LinearCostModel random_linear(std::mt19937_64& rng, int K, int slots) {
  std::vector<LinearCostModel::Slot> table;
  for (int t = 0; t < slots; ++t) {
    LinearCostModel::Slot s;
    for (int k = 0; k < K; ++k) s.gamma.push_back(uniform(rng, 0.5, 3.0));
    for (int p = 0; p < K * K; ++p) {
      s.kappa1.push_back(uniform(rng, 0.0, 1.0));
      s.kappa2.push_back(uniform(rng, 0.0, 1.0));
      s.kappa3.push_back(uniform(rng, 0.5, 2.0));
    }
    table.push_back(s);
  }
  return LinearCostModel(K, table);
}

/// Order-2 polynomial costs with single-variable terms, so every u and w is
/// convex non-decreasing with positive marginals at zero.
inline PolynomialCostModel random_quadratic(std::mt19937_64& rng, int K, int slots) {
  std::vector<PolynomialCostModel::Slot> table;
  for (int t = 0; t < slots; ++t) {
    PolynomialCostModel::Slot s;
    s.local.resize(K);
    s.migration.resize(K * K);
    for (int k = 0; k < K; ++k)
      s.local[k] = {{1, uniform(rng, 0.2, 2.0)}, {2, uniform(rng, 0.1, 1.5)}};
    for (int p = 0; p < K * K; ++p)
      s.migration[p] = {{0, 0, 1, uniform(rng, 0.2, 2.0)}, {0, 0, 2, uniform(rng, 0.0, 1.0)}};
    table.push_back(s);
  }
  return PolynomialCostModel(K, table);
}

/// Instances arriving inside [t0, t0+T-1] with known departures and optional lifetimes.
inline std::vector<ServiceInstance> random_instances(std::mt19937_64& rng, const Window& w, int M,
                                                     bool unit_demand = false) {
  std::vector<ServiceInstance> out;
  for (int i = 0; i < M; ++i) {
    ServiceInstance inst;
    inst.id = i + 1;
    inst.arrival_slot = uniform_int(rng, w.t0, w.last());
    if (uniform(rng, 0, 1) < 0.5) inst.departure_slot = uniform_int(rng, inst.arrival_slot, w.last());
    if (uniform(rng, 0, 1) < 0.25) inst.max_lifetime = uniform_int(rng, 1, w.length);
    inst.local_demand = unit_demand ? 1.0 : uniform(rng, 0.5, 1.5);
    inst.migration_demand = unit_demand ? 1.0 : uniform(rng, 0.5, 1.5);
    out.push_back(inst);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.arrival_slot < b.arrival_slot;
  });
  for (int i = 0; i < M; ++i) out[i].id = i + 1;
  return out;
}

}  // namespace testsupport
