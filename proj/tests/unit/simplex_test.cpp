#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gnnverify/simplex.hpp"
#include "reference_lp.hpp"

using namespace gnnverify;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

bool rows_hold(const std::vector<SparseRow>& rows, const std::vector<double>& x, double tol) {
  for (const SparseRow& r : rows) {
    double a = 0;
    for (const auto& [c, v] : r.entries) a += v * x[c];
    if (a < r.lo - tol || a > r.hi + tol) return false;
  }
  return true;
}

}  // namespace

TEST(Simplex, SmallFeasible) {
  // x + y >= 3, x - y = 0.5 in [0,2]^2
  std::vector<SparseRow> rows{{{{0, 1}, {1, 1}}, 3, inf}, {{{0, 1}, {1, -1}}, 0.5, 0.5}};
  BoundedSimplex lp(2, rows, {0, 0}, {2, 2});
  ASSERT_EQ(lp.solve(1e-9, 1000), LpStatus::Feasible);
  EXPECT_TRUE(rows_hold(rows, lp.primal(), 1e-9));
}

TEST(Simplex, SmallInfeasible) {
  std::vector<SparseRow> rows{{{{0, 1}, {1, 1}}, 5, inf}};
  BoundedSimplex lp(2, rows, {0, 0}, {2, 2});
  EXPECT_EQ(lp.solve(1e-9, 1000), LpStatus::Infeasible);
}

TEST(Simplex, WarmResolveAfterBoundChange) {
  std::vector<SparseRow> rows{{{{0, 1}, {1, 1}}, 1, 1}};
  BoundedSimplex lp(2, rows, {0, 0}, {1, 1});
  ASSERT_EQ(lp.solve(1e-9, 1000), LpStatus::Feasible);
  lp.set_bounds(0, 1, 1);
  ASSERT_EQ(lp.solve(1e-9, 1000), LpStatus::Feasible);
  EXPECT_NEAR(lp.value(1), 0.0, 1e-9);
  lp.set_bounds(1, 0.5, 1);
  EXPECT_EQ(lp.solve(1e-9, 1000), LpStatus::Infeasible);
  lp.set_bounds(0, 0, 1);
  EXPECT_EQ(lp.solve(1e-9, 1000), LpStatus::Feasible);
}

TEST(Simplex, AgreesWithReferenceOnRandomSystems) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  int feasible = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 5), m = 1 + static_cast<int>(rng() % 6);
    std::vector<double> lo(n), hi(n);
    for (int j = 0; j < n; ++j) {
      lo[j] = -2 + u(rng);
      hi[j] = lo[j] + 1 + std::abs(u(rng)) * 2;
    }
    std::vector<SparseRow> rows;
    for (int i = 0; i < m; ++i) {
      SparseRow r;
      for (int j = 0; j < n; ++j)
        if (rng() % 3 != 0) r.entries.emplace_back(j, std::round(u(rng) * 6) / 2);
      const double c = u(rng) * 3;
      const int kind = static_cast<int>(rng() % 3);
      r.lo = kind == 0 ? c : -inf;
      r.hi = kind == 1 ? c : (kind == 0 ? inf : c + std::abs(u(rng)));
      if (kind == 2) r.lo = c;
      rows.push_back(r);
    }
    const bool want = testsupport::reference_lp_feasible(n, rows, lo, hi);
    BoundedSimplex lp(n, rows, lo, hi);
    const LpStatus got = lp.solve(1e-9, 100000);
    ASSERT_NE(got, LpStatus::IterationLimit);
    EXPECT_EQ(got == LpStatus::Feasible, want) << "system " << rep;
    if (got == LpStatus::Feasible) {
      ++feasible;
      EXPECT_TRUE(rows_hold(rows, lp.primal(), 1e-7));
      for (int j = 0; j < n; ++j) {
        EXPECT_GE(lp.value(j), lo[j] - 1e-9);
        EXPECT_LE(lp.value(j), hi[j] + 1e-9);
      }
    }
  }
  EXPECT_GT(feasible, 30);
  EXPECT_LT(feasible, 290);
}

TEST(Simplex, DegenerateSystemTerminates) {
  // Many redundant rows through one vertex.
  std::vector<SparseRow> rows;
  for (int i = 1; i <= 8; ++i) rows.push_back({{{0, 1.0 * i}, {1, 1.0}, {2, -1.0 * i}}, 0, 0});
  rows.push_back({{{0, 1}, {1, 1}, {2, 1}}, 0, inf});
  BoundedSimplex lp(3, rows, {-1, -1, -1}, {1, 1, 1});
  ASSERT_EQ(lp.solve(1e-9, 10000), LpStatus::Feasible);
  EXPECT_TRUE(rows_hold(rows, lp.primal(), 1e-9));
}
