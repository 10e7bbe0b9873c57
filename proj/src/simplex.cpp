#include "gnnverify/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gnnverify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;
constexpr double kPriceTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr int kBlandAfter = 30;
constexpr long kReinvertEvery = 400;

enum : char { kAtLower = 0, kAtUpper = 1, kFreeZero = 2 };

}  // namespace

BoundedSimplex::BoundedSimplex(int num_cols, std::vector<SparseRow> rows,
                               std::vector<double> col_lo, std::vector<double> col_hi)
    : m_(static_cast<int>(rows.size())), n_(num_cols), total_(num_cols + static_cast<int>(rows.size())),
      rows_(std::move(rows)) {
  lo_ = std::move(col_lo);
  hi_ = std::move(col_hi);
  lo_.resize(static_cast<std::size_t>(total_));
  hi_.resize(static_cast<std::size_t>(total_));
  for (int i = 0; i < m_; ++i) {
    lo_[n_ + i] = rows_[i].lo;
    hi_[n_ + i] = rows_[i].hi;
  }
  reset_slack_basis();
}

double BoundedSimplex::nonbasic_value(int j) const {
  switch (at_upper_[j]) {
    case kAtUpper: return hi_[j];
    case kAtLower: return lo_[j];
    default: return 0.0;
  }
}

void BoundedSimplex::reset_slack_basis() {
  tab_.assign(static_cast<std::size_t>(m_) * total_, 0.0);
  basis_.assign(m_, 0);
  position_.assign(total_, -1);
  at_upper_.assign(total_, kAtLower);
  x_.assign(total_, 0.0);
  for (int i = 0; i < m_; ++i) {
    for (const auto& [j, a] : rows_[i].entries) tab(i, j) -= a;
    tab(i, n_ + i) = 1.0;
    basis_[i] = n_ + i;
    position_[n_ + i] = i;
  }
  for (int j = 0; j < total_; ++j) {
    if (position_[j] >= 0) continue;
    if (std::isfinite(lo_[j])) at_upper_[j] = kAtLower;
    else if (std::isfinite(hi_[j])) at_upper_[j] = kAtUpper;
    else at_upper_[j] = kFreeZero;
  }
  pivots_since_reinvert_ = 0;
  recompute_basics();
}

void BoundedSimplex::recompute_basics() {
  for (int j = 0; j < total_; ++j)
    if (position_[j] < 0) x_[j] = nonbasic_value(j);
  for (int r = 0; r < m_; ++r) {
    double v = 0.0;
    const double* row = &tab_[static_cast<std::size_t>(r) * total_];
    for (int j = 0; j < total_; ++j)
      if (position_[j] < 0 && row[j] != 0.0) v -= row[j] * x_[j];
    x_[basis_[r]] = v;
  }
}

void BoundedSimplex::set_bounds(int col, double lo, double hi) {
  lo_[col] = lo;
  hi_[col] = hi;
  if (position_[col] >= 0) return;
  double target;
  if (at_upper_[col] == kAtUpper && std::isfinite(hi)) {
    target = hi;
  } else if (std::isfinite(lo)) {
    target = lo;
    at_upper_[col] = kAtLower;
  } else if (std::isfinite(hi)) {
    target = hi;
    at_upper_[col] = kAtUpper;
  } else {
    target = 0.0;
    at_upper_[col] = kFreeZero;
  }
  const double delta = target - x_[col];
  if (delta == 0.0) return;
  x_[col] = target;
  for (int r = 0; r < m_; ++r) {
    const double t = tab(r, col);
    if (t != 0.0) x_[basis_[r]] -= t * delta;
  }
}

void BoundedSimplex::pivot(int r, int c) {
  double* prow = &tab_[static_cast<std::size_t>(r) * total_];
  const double inv = 1.0 / prow[c];
  std::vector<int> nz;
  nz.reserve(static_cast<std::size_t>(total_));
  for (int k = 0; k < total_; ++k) {
    if (prow[k] == 0.0) continue;
    prow[k] *= inv;
    if (std::abs(prow[k]) < kDropTol) prow[k] = 0.0;
    else nz.push_back(k);
  }
  prow[c] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* row = &tab_[static_cast<std::size_t>(i) * total_];
    const double f = row[c];
    if (f == 0.0) continue;
    for (int k : nz) {
      double v = row[k] - f * prow[k];
      row[k] = std::abs(v) < kDropTol ? 0.0 : v;
    }
    row[c] = 0.0;
  }
  position_[basis_[r]] = -1;
  basis_[r] = c;
  position_[c] = r;
  ++pivots_since_reinvert_;
}

void BoundedSimplex::reinvert() {
  if (m_ == 0) {
    recompute_basics();
    return;
  }
  // Column j of [A | -I] as a dense vector over rows.
  auto column = [&](int j, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (j >= n_) {
      out[j - n_] = -1.0;
      return;
    }
    for (int i = 0; i < m_; ++i)
      for (const auto& [col, a] : rows_[i].entries)
        if (col == j) out[i] += a;
  };
  // Gauss-Jordan on [B | I].
  const int w = 2 * m_;
  std::vector<double> aug(static_cast<std::size_t>(m_) * w, 0.0);
  std::vector<double> col(m_);
  for (int r = 0; r < m_; ++r) {
    column(basis_[r], col);
    for (int i = 0; i < m_; ++i) aug[static_cast<std::size_t>(i) * w + r] = col[i];
    aug[static_cast<std::size_t>(r) * w + m_ + r] = 1.0;
  }
  for (int p = 0; p < m_; ++p) {
    int best = p;
    for (int i = p + 1; i < m_; ++i)
      if (std::abs(aug[static_cast<std::size_t>(i) * w + p]) >
          std::abs(aug[static_cast<std::size_t>(best) * w + p]))
        best = i;
    if (std::abs(aug[static_cast<std::size_t>(best) * w + p]) < 1e-10) {
      reset_slack_basis();
      return;
    }
    if (best != p)
      for (int k = 0; k < w; ++k)
        std::swap(aug[static_cast<std::size_t>(p) * w + k], aug[static_cast<std::size_t>(best) * w + k]);
    const double inv = 1.0 / aug[static_cast<std::size_t>(p) * w + p];
    for (int k = 0; k < w; ++k) aug[static_cast<std::size_t>(p) * w + k] *= inv;
    for (int i = 0; i < m_; ++i) {
      if (i == p) continue;
      const double f = aug[static_cast<std::size_t>(i) * w + p];
      if (f == 0.0) continue;
      for (int k = 0; k < w; ++k)
        aug[static_cast<std::size_t>(i) * w + k] -= f * aug[static_cast<std::size_t>(p) * w + k];
    }
  }
  // Row p of B^-1 now sits in aug[p][m..2m); row p corresponds to basis_[p].
  std::fill(tab_.begin(), tab_.end(), 0.0);
  for (int i = 0; i < m_; ++i) {
    for (const auto& [j, a] : rows_[i].entries) {
      for (int r = 0; r < m_; ++r) {
        const double binv = aug[static_cast<std::size_t>(r) * w + m_ + i];
        if (binv != 0.0) tab(r, j) += binv * a;
      }
    }
    for (int r = 0; r < m_; ++r) tab(r, n_ + i) = -aug[static_cast<std::size_t>(r) * w + m_ + i];
  }
  for (auto& v : tab_)
    if (std::abs(v) < kDropTol) v = 0.0;
  for (int r = 0; r < m_; ++r) tab(r, basis_[r]) = 1.0;
  pivots_since_reinvert_ = 0;
  recompute_basics();
}

LpStatus BoundedSimplex::solve(double feas_tol, long max_iterations) {
  if (pivots_since_reinvert_ > kReinvertEvery) reinvert();
  else recompute_basics();

  std::vector<signed char> infeasible(static_cast<std::size_t>(m_));
  std::vector<double> reduced(static_cast<std::size_t>(total_));
  std::vector<double> rate(static_cast<std::size_t>(m_));
  int degenerate_run = 0;
  long local_iterations = 0;

  for (;;) {
    if (local_iterations > 0 && local_iterations % 64 == 0) recompute_basics();
    bool any = false;
    for (int r = 0; r < m_; ++r) {
      const int b = basis_[r];
      infeasible[r] = 0;
      if (x_[b] < lo_[b] - feas_tol) infeasible[r] = -1;
      else if (x_[b] > hi_[b] + feas_tol) infeasible[r] = 1;
      any = any || infeasible[r] != 0;
    }
    // Nonbasic columns can also drift outside tightened bounds only through
    // set_bounds, which snaps them back, so only basics need checking.
    if (!any) return LpStatus::Feasible;
    if (local_iterations >= max_iterations) return LpStatus::IterationLimit;

    // Reduced costs of the infeasibility sum: d_j = -sum_r c_r T_rj.
    std::fill(reduced.begin(), reduced.end(), 0.0);
    for (int r = 0; r < m_; ++r) {
      if (infeasible[r] == 0) continue;
      const double c = infeasible[r];
      const double* row = &tab_[static_cast<std::size_t>(r) * total_];
      for (int j = 0; j < total_; ++j)
        if (row[j] != 0.0) reduced[j] -= c * row[j];
    }

    const bool bland = degenerate_run > kBlandAfter;
    int entering = -1, dir = 0;
    double best_score = 0.0;
    for (int j = 0; j < total_; ++j) {
      if (position_[j] >= 0) continue;
      const double d = reduced[j];
      const bool can_up = at_upper_[j] != kAtUpper && x_[j] < hi_[j];
      const bool can_down = at_upper_[j] != kAtLower && x_[j] > lo_[j];
      int this_dir = 0;
      if (d < -kPriceTol && (can_up || at_upper_[j] == kFreeZero)) this_dir = 1;
      else if (d > kPriceTol && (can_down || at_upper_[j] == kFreeZero)) this_dir = -1;
      if (this_dir == 0) continue;
      const double score = std::abs(d);
      if (bland) {
        entering = j;
        dir = this_dir;
        break;
      }
      if (score > best_score) {
        best_score = score;
        entering = j;
        dir = this_dir;
      }
    }
    if (entering < 0) return LpStatus::Infeasible;

    const int j = entering;
    const double flip =
        (std::isfinite(lo_[j]) && std::isfinite(hi_[j])) ? hi_[j] - lo_[j] : kInf;

    // Harris ratio test: bound on the step with relaxed limits, then the
    // largest pivot among rows blocking within that bound.
    double relaxed = flip;
    for (int r = 0; r < m_; ++r) {
      rate[r] = -tab(r, j) * dir;
      const double rho = rate[r];
      if (std::abs(rho) <= kPivotTol) continue;
      const int b = basis_[r];
      double lim = kInf;
      if (infeasible[r] == 0) {
        if (rho > 0 && std::isfinite(hi_[b])) lim = (hi_[b] + feas_tol - x_[b]) / rho;
        else if (rho < 0 && std::isfinite(lo_[b])) lim = (lo_[b] - feas_tol - x_[b]) / rho;
      } else if (infeasible[r] < 0 && rho > 0) {
        lim = (lo_[b] - x_[b]) / rho;
      } else if (infeasible[r] > 0 && rho < 0) {
        lim = (hi_[b] - x_[b]) / rho;
      }
      relaxed = std::min(relaxed, lim);
    }

    int leave = -1;
    double step = flip, best_pivot = 0.0;
    if (std::isfinite(relaxed)) {
      for (int r = 0; r < m_; ++r) {
        const double rho = rate[r];
        if (std::abs(rho) <= kPivotTol) continue;
        const int b = basis_[r];
        double lim = kInf;
        if (infeasible[r] == 0) {
          if (rho > 0 && std::isfinite(hi_[b])) lim = (hi_[b] - x_[b]) / rho;
          else if (rho < 0 && std::isfinite(lo_[b])) lim = (lo_[b] - x_[b]) / rho;
        } else if (infeasible[r] < 0 && rho > 0) {
          lim = (lo_[b] - x_[b]) / rho;
        } else if (infeasible[r] > 0 && rho < 0) {
          lim = (hi_[b] - x_[b]) / rho;
        }
        if (lim > relaxed) continue;
        lim = std::max(lim, 0.0);
        const bool better = bland ? (leave < 0 || lim < step - 1e-12 ||
                                     (lim <= step + 1e-12 && basis_[r] < basis_[leave]))
                                  : std::abs(rho) > best_pivot;
        if (better) {
          leave = r;
          step = lim;
          best_pivot = std::abs(rho);
        }
      }
    }
    if (leave >= 0 && step >= flip) leave = -1, step = flip;
    if (leave < 0 && !std::isfinite(step)) return LpStatus::IterationLimit;

    // Move.
    if (step > 0.0) {
      x_[j] += dir * step;
      for (int r = 0; r < m_; ++r)
        if (rate[r] != 0.0) x_[basis_[r]] += rate[r] * step;
    }
    degenerate_run = step < 1e-11 ? degenerate_run + 1 : 0;
    ++iterations_;
    ++local_iterations;

    if (leave < 0) {
      at_upper_[j] = dir > 0 ? kAtUpper : kAtLower;
      x_[j] = nonbasic_value(j);
      continue;
    }

    const int b = basis_[leave];
    bool to_upper;
    if (infeasible[leave] < 0) to_upper = false;
    else if (infeasible[leave] > 0) to_upper = true;
    else to_upper = rate[leave] > 0;
    pivot(leave, j);
    at_upper_[b] = to_upper ? kAtUpper : kAtLower;
    x_[b] = nonbasic_value(b);
  }
}

}  // namespace gnnverify
