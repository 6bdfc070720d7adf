#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "mmcplace/cost.hpp"
#include "support.hpp"

using namespace mmcplace;
using namespace testsupport;

namespace {

// Recount of the defining sums straight from the columns.
struct Recount {
  std::map<std::pair<int, int>, double> y;                // (t, k)
  std::map<std::tuple<int, int, int>, double> z;          // (t, k, l)
};

Recount recount(const ConfigurationMatrix& m, const std::vector<ServiceInstance>& inst,
                const std::vector<CloudId>& prev) {
  Recount r;
  for (int i = 0; i < m.columns(); ++i) {
    const auto col = m.column(i);
    for (int q = 0; q < m.slots(); ++q) {
      const int t = m.t0() + q;
      const CloudId before = q == 0 ? (prev.empty() ? 0 : prev[i]) : col[q - 1];
      if (col[q] == 0) continue;
      r.y[{t, col[q]}] += inst[i].local_demand;
      if (before != 0 && before != col[q]) r.z[{t, before, col[q]}] += inst[i].migration_demand;
    }
  }
  return r;
}

MmcBackendCostModel mmc(int K = 3) {
  MmcBackendCostModel::Params p;
  p.clouds = K;
  p.backend = K;
  p.capacity = 5;
  p.backend_local = 3;
  p.backend_migration = 3;
  p.distance_local = 0.2;
  p.distance_migration = 0.2;
  return MmcBackendCostModel(p);
}

}  // namespace

TEST_CASE("aggregate_loads on an empty matrix is zero") {
  ConfigurationMatrix m(1, 3, 0);
  const LoadVector v = aggregate_loads(m, {}, {}, 3);
  for (const auto& s : v.slots) {
    for (double y : s.y) CHECK(y == 0.0);
    for (double z : s.z) CHECK(z == 0.0);
  }
}

TEST_CASE("single placement without moves") {
  ServiceInstance a;
  a.id = 1;
  ConfigurationMatrix m(1, 2, 1);
  m.set_column(0, std::vector<CloudId>{2, 2});
  const LoadVector v = aggregate_loads(m, std::vector{a}, {}, 3);
  CHECK(v.at_slot(1).y_at(2) == 1.0);
  CHECK(v.at_slot(2).y_at(2) == 1.0);
  for (const auto& s : v.slots)
    for (double z : s.z) CHECK(z == 0.0);
}

TEST_CASE("a move from cloud 1 to cloud 2 records z_12 in slot 2 only") {
  ServiceInstance a;
  a.id = 1;
  ConfigurationMatrix m(1, 2, 1);
  m.set_column(0, std::vector<CloudId>{1, 2});
  const std::vector inst{a};
  const LoadVector v = aggregate_loads(m, inst, {}, 3);
  const Recount r = recount(m, inst, {});
  for (int t = 1; t <= 2; ++t)
    for (int k = 1; k <= 3; ++k)
      for (int l = 1; l <= 3; ++l) {
        const auto it = r.z.find({t, k, l});
        CHECK(v.at_slot(t).z_at(k, l) == (it == r.z.end() ? 0.0 : it->second));
      }
  CHECK(v.at_slot(2).z_at(1, 2) == 1.0);
}

TEST_CASE("aggregate_loads matches the recount on random matrices") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Window w{uniform_int(rng, 1, 4), uniform_int(rng, 1, 4)};
    const int K = uniform_int(rng, 1, 4);
    auto inst = random_instances(rng, w, uniform_int(rng, 0, 4));
    ConfigurationMatrix m(w.t0, w.length, static_cast<int>(inst.size()));
    std::vector<CloudId> prev(inst.size());
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const auto seqs = feasible_sequences(inst[i], w, K);
      m.set_column(static_cast<int>(i), seqs[rng() % seqs.size()]);
      prev[i] = inst[i].arrival_slot < w.t0 ? uniform_int(rng, 1, K) : 0;
    }
    const LoadVector v = aggregate_loads(m, inst, prev, K);
    const Recount r = recount(m, inst, prev);
    for (int t = w.t0; t <= w.last(); ++t)
      for (int k = 1; k <= K; ++k) {
        const auto it = r.y.find({t, k});
        CHECK(v.at_slot(t).y_at(k) == doctest::Approx(it == r.y.end() ? 0.0 : it->second));
        for (int l = 1; l <= K; ++l) {
          const auto jt = r.z.find({t, k, l});
          CHECK(v.at_slot(t).z_at(k, l) == doctest::Approx(jt == r.z.end() ? 0.0 : jt->second));
        }
      }
  }
}

TEST_CASE("local cost examples") {
  SlotLoads zero(3);
  CHECK(local_cost(mmc(), 1, zero) == 0.0);
  const auto lin = LinearCostModel::uniform(1, 3.0, 0, 0, 1);
  SlotLoads s(1);
  s.y_at(1) = 2;
  CHECK(local_cost(lin, 1, s) == 6.0);
  SlotLoads m(3);
  m.y_at(1) = 4;
  CHECK(local_cost(mmc(), 1, m) == doctest::Approx(20.0));
  m.y_at(1) = 5;
  CHECK(std::isinf(local_cost(mmc(), 1, m)));
}

TEST_CASE("migration cost examples") {
  const auto model = mmc();
  SlotLoads prev(3), now(3);
  prev.y_at(3) = 1;
  now.y_at(1) = 1;
  now.z_at(3, 1) = 1;
  CHECK(migration_cost(model, 1, prev, now) == 0.0);
  CHECK(migration_cost(model, 2, prev, now) == doctest::Approx(3.0));
  SlotLoads none(3);
  none.y_at(1) = 2;
  CHECK(migration_cost(model, 2, prev, none) == 0.0);
  // MMC to MMC uses the source load of the previous slot and the target load now.
  SlotLoads p2(3), n2(3);
  p2.y_at(1) = 1;
  n2.y_at(2) = 4;
  n2.z_at(1, 2) = 1;
  n2.s_at(1, 2) = 2;
  CHECK(migration_cost(model, 5, p2, n2) == doctest::Approx(1.0 * (1.25 + 5.0) + 0.2 * 2));
}

TEST_CASE("slot cost at t = 1 is the local cost alone") {
  std::mt19937_64 rng(3);
  const auto model = random_linear(rng, 3, 2);
  ServiceInstance a;
  a.id = 1;
  ConfigurationMatrix m(1, 1, 1);
  m(0, 0) = 2;
  const std::vector<CloudId> prev{1};
  const LoadVector v = aggregate_loads(m, std::vector{a}, prev, 3);
  CHECK(slot_cost(model, 1, v) == doctest::Approx(local_cost(model, 1, v.at_slot(1))));
}

TEST_CASE("linear model hand sum") {
  // K = 2, gamma = (1, 2), kappa1 = 0.5, kappa2 = 0.25, kappa3 = 3 for k != l.
  LinearCostModel::Slot s{{1.0, 2.0}, {0, 0.5, 0.5, 0}, {0, 0.25, 0.25, 0}, {0, 3, 3, 0}};
  const LinearCostModel model(2, {s});
  ServiceInstance a, b;
  a.id = 1;
  b.id = 2;
  b.local_demand = 2;
  b.migration_demand = 0.5;
  ConfigurationMatrix m(1, 2, 2);
  m.set_column(0, std::vector<CloudId>{1, 2});
  m.set_column(1, std::vector<CloudId>{2, 2});
  // Slot 1: U = 1*1 + 2*2 = 5.
  // Slot 2: y = (0, 3); U = 6. Prev y = (1, 2).
  //   W_12 = 0.5*1 + 0.25*3 + 3*1 = 4.25; W_21 = 0.5*2 + 0.25*0 + 0 = 1.
  const double expected = 5 + 6 + 4.25 + 1;
  CHECK(window_cost(model, m, std::vector{a, b}, {}) == doctest::Approx(expected));
  const ActualPricer pricer(model);
  CHECK(window_cost(pricer, m, std::vector{a, b}, {}) == doctest::Approx(expected));
}

TEST_CASE("row pricing agrees with aggregated loads") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = uniform_int(rng, 1, 4);
    const Window w{uniform_int(rng, 1, 3), uniform_int(rng, 1, 4)};
    const auto lin = random_linear(rng, K, 5);
    const auto quad = random_quadratic(rng, K, 5);
    auto inst = random_instances(rng, w, uniform_int(rng, 0, 4));
    ConfigurationMatrix m(w.t0, w.length, static_cast<int>(inst.size()));
    for (std::size_t i = 0; i < inst.size(); ++i) {
      const auto seqs = feasible_sequences(inst[i], w, K);
      m.set_column(static_cast<int>(i), seqs[rng() % seqs.size()]);
    }
    for (const CostModel* model : {static_cast<const CostModel*>(&lin), static_cast<const CostModel*>(&quad)}) {
      const LoadVector v = aggregate_loads(m, inst, {}, K);
      double per_slot = 0.0;
      for (int t = w.t0; t <= w.last(); ++t) per_slot += slot_cost(*model, t, v);
      CHECK(window_cost(*model, v) == doctest::Approx(per_slot));
      CHECK(window_cost(ActualPricer(*model), m, inst, {}) == doctest::Approx(per_slot).epsilon(1e-12));
    }
  }
}

TEST_CASE("window cost of an all-zero matrix is zero and T = 1 reduces to one slot") {
  std::mt19937_64 rng(9);
  const auto quad = random_quadratic(rng, 3, 3);
  std::vector<ServiceInstance> inst(2);
  inst[0].id = 1;
  inst[1].id = 2;
  ConfigurationMatrix zero(1, 3, 2);
  CHECK(window_cost(quad, zero, inst, {}) == 0.0);
  ConfigurationMatrix one(4, 1, 2);
  one(0, 0) = 1;
  one(0, 1) = 3;
  const std::vector<CloudId> prev{2, 3};
  const LoadVector v = aggregate_loads(one, inst, prev, 3);
  CHECK(window_cost(quad, one, inst, prev) == doctest::Approx(slot_cost(quad, 4, v)));
}

TEST_CASE("convex models are monotone in every load entry") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = uniform_int(rng, 2, 4);
    const auto quad = random_quadratic(rng, K, 3);
    LoadVector v(1, K, 3);
    for (auto& s : v.slots) {
      for (double& y : s.y) y = uniform(rng, 0, 3);
      for (int k = 1; k <= K; ++k)
        for (int l = 1; l <= K; ++l)
          if (k != l) s.z_at(k, l) = uniform(rng, 0, 1) < 0.3 ? uniform(rng, 0, 2) : 0.0;
    }
    const double base = window_cost(quad, v);
    LoadVector up = v;
    const int q = uniform_int(rng, 0, 2);
    if (uniform(rng, 0, 1) < 0.5) up.slots[q].y[uniform_int(rng, 0, K - 1)] += uniform(rng, 0, 1);
    else {
      const int k = uniform_int(rng, 1, K);
      const int l = k % K + 1;
      up.slots[q].z_at(k, l) += uniform(rng, 0, 1);
    }
    CHECK(window_cost(quad, up) >= base);
  }
}

TEST_CASE("polynomial local costs are midpoint convex") {
  std::mt19937_64 rng(4);
  const auto quad = random_quadratic(rng, 3, 2);
  for (int i = 0; i < 1000; ++i) {
    const double y1 = uniform(rng, 0, 10), y2 = uniform(rng, 0, 10);
    const int k = uniform_int(rng, 1, 3);
    CHECK(quad.local(k, 1, 0.5 * (y1 + y2), 0) <=
          0.5 * (quad.local(k, 1, y1, 0) + quad.local(k, 1, y2, 0)) + 1e-12);
  }
  CHECK(quad.order() == 2);
  CHECK(quad.convex_nondecreasing());
  CHECK(quad.positive_marginals_at_zero());
}

TEST_CASE("linear window cost is additive over disjoint instance sets") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int K = uniform_int(rng, 2, 3);
    const Window w{1, uniform_int(rng, 1, 4)};
    const auto lin = random_linear(rng, K, 4);
    auto inst = random_instances(rng, w, 4);
    ConfigurationMatrix all(w.t0, w.length, 4), left(w.t0, w.length, 2), right(w.t0, w.length, 2);
    for (int i = 0; i < 4; ++i) {
      const auto seqs = feasible_sequences(inst[i], w, K);
      const auto& pick = seqs[rng() % seqs.size()];
      all.set_column(i, pick);
      (i < 2 ? left : right).set_column(i % 2, pick);
    }
    const std::vector<ServiceInstance> a(inst.begin(), inst.begin() + 2), b(inst.begin() + 2, inst.end());
    CHECK(window_cost(lin, all, inst, {}) ==
          doctest::Approx(window_cost(lin, left, a, {}) + window_cost(lin, right, b, {})));
  }
}

TEST_CASE("MMC window cost is finite iff every MMC stays below capacity") {
  const auto model = mmc(3);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int M = uniform_int(rng, 1, 12);
    std::vector<ServiceInstance> inst(M);
    ConfigurationMatrix m(1, 2, M);
    for (int i = 0; i < M; ++i) {
      inst[i].id = i + 1;
      m(0, i) = uniform_int(rng, 1, 3);
      m(1, i) = uniform_int(rng, 1, 3);
    }
    const LoadVector v = aggregate_loads(m, inst, {}, 3);
    bool below = true;
    for (const auto& s : v.slots)
      for (int k = 1; k <= 2; ++k) below = below && s.y_at(k) < 5;
    CHECK(std::isfinite(window_cost(model, v)) == below);
  }
}

TEST_CASE("analytic local slopes match finite differences") {
  const auto model = mmc(3);
  for (double y : {0.0, 1.0, 2.5, 4.9}) {
    const double h = 1e-6;
    const double fd = (model.local(1, 1, y + h, 0) - model.local(1, 1, std::max(0.0, y - h), 0)) /
                      (y + h - std::max(0.0, y - h));
    CHECK(model.local_slope(1, 1, y) == doctest::Approx(fd).epsilon(1e-4));
  }
  CHECK(model.local_load_at_slope(1, 1, 3.0, 100.0) == doctest::Approx(5.0 * (1 - 1 / std::sqrt(3.0))));
}
