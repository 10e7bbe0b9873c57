#include "gnnverify/solver.hpp"

#include <algorithm>
#include <cctype>
#include <type_traits>
#include <charconv>
#include <chrono>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "gnnverify/graph.hpp"
#include "gnnverify/simplex.hpp"

namespace gnnverify {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Lowering: abstract constraints -> linear rows over columns.

struct LoweredIndicator {
  int column;
  bool phase;
  SparseRow row;  // implied row, kept in indicator form for LP export
};

struct LoweredModel {
  std::vector<double> lo, hi;
  std::vector<char> integer;
  std::vector<std::string> names;
  std::vector<int> var_of_col;  // VarId value, or -1 for auxiliaries
  std::vector<SparseRow> rows;
  std::vector<LoweredIndicator> indicators;
};

class RowBuilder {
 public:
  void add(int col, double coef) {
    if (coef != 0.0) coefs_[col] += coef;
  }
  void add_constant(double c) { constant_ += c; }
  // coef * literal, where literal = b (phase 1) or 1 - b (phase 0).
  void add_literal(int col, bool phase, double coef) {
    if (phase) {
      add(col, coef);
    } else {
      add_constant(coef);
      add(col, -coef);
    }
  }
  SparseRow build(double lo, double hi) const {
    SparseRow row;
    for (const auto& [c, a] : coefs_)
      if (a != 0.0) row.entries.emplace_back(c, a);
    row.lo = lo - constant_;
    row.hi = hi - constant_;
    return row;
  }

 private:
  std::map<int, double> coefs_;
  double constant_ = 0.0;
};

class Lowerer {
 public:
  Lowerer(const std::vector<std::optional<VarInfo>>& vars, const std::vector<Interval>* cuts,
          bool keep_indicators)
      : keep_indicators_(keep_indicators) {
    col_of_.assign(vars.size(), -1);
    for (std::size_t id = 0; id < vars.size(); ++id) {
      if (!vars[id]) continue;
      double lo = vars[id]->lo, hi = vars[id]->hi;
      if (cuts && id < cuts->size()) {
        lo = std::max(lo, (*cuts)[id].lo);
        hi = std::min(hi, (*cuts)[id].hi);
      }
      col_of_[id] = static_cast<int>(model_.lo.size());
      model_.lo.push_back(lo);
      model_.hi.push_back(hi);
      model_.integer.push_back(vars[id]->binary ? 1 : 0);
      model_.names.push_back(vars[id]->name);
      model_.var_of_col.push_back(static_cast<int>(id));
    }
  }

  void lower(const Constraint& c) {
    std::visit(
        [&](const auto& con) {
          using T = std::decay_t<decltype(con)>;
          if constexpr (std::is_same_v<T, LinearConstraint>) lower_linear(con);
          else if constexpr (std::is_same_v<T, IndicatorConstraint>) lower_indicator(con);
          else lower_max(con);
        },
        c);
  }

  LoweredModel take() { return std::move(model_); }

 private:
  int col(VarId v) const {
    if (v.value >= col_of_.size() || col_of_[v.value] < 0)
      throw std::logic_error("constraint references an undeclared variable");
    return col_of_[v.value];
  }

  int new_binary(const std::string& stem) {
    const int c = static_cast<int>(model_.lo.size());
    model_.lo.push_back(0.0);
    model_.hi.push_back(1.0);
    model_.integer.push_back(1);
    model_.names.push_back(stem + std::to_string(aux_counter_++));
    model_.var_of_col.push_back(-1);
    return c;
  }

  Interval activity(const LinearConstraint& lin) const {
    Interval a{0.0, 0.0};
    for (const Term& t : lin.terms) {
      const int c = col(t.var);
      if (t.coef >= 0) {
        a.lo += t.coef * model_.lo[c];
        a.hi += t.coef * model_.hi[c];
      } else {
        a.lo += t.coef * model_.hi[c];
        a.hi += t.coef * model_.lo[c];
      }
    }
    return a;
  }

  void add_terms(RowBuilder& rb, const LinearConstraint& lin) const {
    for (const Term& t : lin.terms) rb.add(col(t.var), t.coef);
  }

  void lower_linear(const LinearConstraint& lin) {
    RowBuilder rb;
    add_terms(rb, lin);
    switch (lin.sense) {
      case Sense::LessEqual: model_.rows.push_back(rb.build(-kInf, lin.rhs)); break;
      case Sense::GreaterEqual: model_.rows.push_back(rb.build(lin.rhs, kInf)); break;
      case Sense::Equal: model_.rows.push_back(rb.build(lin.rhs, lin.rhs)); break;
    }
  }

  void lower_indicator(const IndicatorConstraint& ind) {
    const int b = col(ind.condition.var);
    const bool phase = ind.condition.phase;
    const LinearConstraint& lin = ind.implied;
    if (keep_indicators_) {
      RowBuilder rb;
      add_terms(rb, lin);
      const double lo = lin.sense == Sense::LessEqual ? -kInf : lin.rhs;
      const double hi = lin.sense == Sense::GreaterEqual ? kInf : lin.rhs;
      model_.indicators.push_back({b, phase, rb.build(lo, hi)});
      return;
    }
    const Interval act = activity(lin);
    if (lin.sense != Sense::GreaterEqual) {
      // sum c x - rhs <= M (1 - literal)
      const double big_m = act.hi - lin.rhs;
      if (big_m > 0) {
        RowBuilder rb;
        add_terms(rb, lin);
        rb.add_literal(b, phase, big_m);
        model_.rows.push_back(rb.build(-kInf, lin.rhs + big_m));
      }
    }
    if (lin.sense != Sense::LessEqual) {
      // sum c x - rhs >= -M (1 - literal)
      const double big_m = lin.rhs - act.lo;
      if (big_m > 0) {
        RowBuilder rb;
        add_terms(rb, lin);
        rb.add_literal(b, phase, -big_m);
        model_.rows.push_back(rb.build(lin.rhs - big_m, kInf));
      }
    }
  }

  void lower_max(const MaxConstraint& mc) {
    const int z = col(mc.target);
    const double zl = model_.lo[z], zh = model_.hi[z];

    struct Cand {
      int col;  // -1 for a constant
      double constant, lo, hi;
      bool conditional;
      int lit_col;
      bool lit_phase;
    };
    std::vector<Cand> cands;
    double floor_value = -kInf;  // max lower bound among unconditional candidates
    for (const MaxCandidate& mcand : mc.candidates) {
      Cand c{};
      if (mcand.var) {
        c.col = col(*mcand.var);
        c.lo = model_.lo[c.col];
        c.hi = model_.hi[c.col];
      } else {
        c.col = -1;
        c.constant = mcand.constant;
        c.lo = c.hi = mcand.constant;
      }
      c.conditional = mcand.active.has_value();
      if (c.conditional) {
        c.lit_col = col(mcand.active->var);
        c.lit_phase = mcand.active->phase;
      }
      if (!c.conditional) floor_value = std::max(floor_value, c.lo);
      cands.push_back(c);
    }
    auto add_value = [](RowBuilder& rb, const Cand& c, double coef) {
      if (c.col >= 0) rb.add(c.col, coef);
      else rb.add_constant(coef * c.constant);
    };

    // z >= candidate whenever the candidate is active.
    for (const Cand& c : cands) {
      RowBuilder rb;
      rb.add(z, 1.0);
      add_value(rb, c, -1.0);
      if (!c.conditional) {
        model_.rows.push_back(rb.build(0.0, kInf));
        continue;
      }
      const double big_m = c.hi - zl;
      if (big_m <= 0) continue;
      rb.add_literal(c.lit_col, c.lit_phase, -big_m);
      model_.rows.push_back(rb.build(-big_m, kInf));
    }

    std::vector<const Cand*> selectable;
    for (const Cand& c : cands)
      if (c.hi >= floor_value - 1e-9) selectable.push_back(&c);
    const bool any_unconditional = std::isfinite(floor_value);
    const bool empty_option = mc.empty_value.has_value() && !any_unconditional;
    if (selectable.empty() && !empty_option)
      throw std::logic_error("max constraint without any selectable candidate");

    if (!empty_option && selectable.size() == 1 && !selectable.front()->conditional) {
      RowBuilder rb;
      rb.add(z, 1.0);
      add_value(rb, *selectable.front(), -1.0);
      model_.rows.push_back(rb.build(-kInf, 0.0));
      return;
    }

    RowBuilder one_hot;
    for (const Cand* c : selectable) {
      const int beta = new_binary("sel");
      one_hot.add(beta, 1.0);
      // beta -> z <= candidate
      const double big_m = zh - c->lo;
      if (big_m > 0) {
        RowBuilder rb;
        rb.add(z, 1.0);
        add_value(rb, *c, -1.0);
        rb.add(beta, big_m);
        model_.rows.push_back(rb.build(-kInf, big_m));
      }
      if (c->conditional) {
        RowBuilder rb;  // beta <= literal
        rb.add(beta, 1.0);
        rb.add_literal(c->lit_col, c->lit_phase, -1.0);
        model_.rows.push_back(rb.build(-kInf, 0.0));
      }
    }
    if (empty_option) {
      const double e = *mc.empty_value;
      const int beta = new_binary("empty");
      one_hot.add(beta, 1.0);
      {
        RowBuilder rb;  // beta -> z <= e
        rb.add(z, 1.0);
        rb.add(beta, zh - e);
        model_.rows.push_back(rb.build(-kInf, zh));
      }
      {
        RowBuilder rb;  // beta -> z >= e
        rb.add(z, 1.0);
        rb.add(beta, zl - e);
        model_.rows.push_back(rb.build(zl, kInf));
      }
      for (const Cand& c : cands) {
        if (!c.conditional) continue;
        RowBuilder rb;  // beta + literal <= 1
        rb.add(beta, 1.0);
        rb.add_literal(c.lit_col, c.lit_phase, 1.0);
        model_.rows.push_back(rb.build(-kInf, 1.0));
      }
    }
    model_.rows.push_back(one_hot.build(1.0, 1.0));
  }

  bool keep_indicators_;
  std::vector<int> col_of_;
  LoweredModel model_;
  int aux_counter_ = 0;
};

// ---------------------------------------------------------------------------
// Feasibility-based bound tightening over linear rows.

class BoundPropagator {
 public:
  BoundPropagator(const std::vector<SparseRow>& rows, const std::vector<char>& integer,
                  std::size_t num_cols, double tol)
      : rows_(rows), integer_(integer), tol_(tol), rows_of_col_(num_cols) {
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (const auto& [c, a] : rows[r].entries) rows_of_col_[c].push_back(static_cast<int>(r));
  }

  /// Tightens lo/hi in place; false when the box is proven empty.
  bool run(std::vector<double>& lo, std::vector<double>& hi, std::size_t work_limit) const {
    std::deque<int> queue;
    std::vector<char> queued(rows_.size(), 1);
    for (std::size_t r = 0; r < rows_.size(); ++r) queue.push_back(static_cast<int>(r));
    std::size_t work = 0;
    while (!queue.empty()) {
      const int r = queue.front();
      queue.pop_front();
      queued[r] = 0;
      work += rows_[r].entries.size() + 1;
      if (work > work_limit) break;
      if (!tighten_row(rows_[r], lo, hi, [&](int c) {
            for (int rr : rows_of_col_[c])
              if (!queued[rr]) {
                queued[rr] = 1;
                queue.push_back(rr);
              }
          }))
        return false;
    }
    return true;
  }

  template <class OnChange>
  bool tighten_row(const SparseRow& row, std::vector<double>& lo, std::vector<double>& hi,
                   OnChange on_change) const {
    double min_act = 0.0, max_act = 0.0;
    int min_inf = 0, max_inf = 0;
    for (const auto& [c, a] : row.entries) {
      const double lo_term = a > 0 ? a * lo[c] : a * hi[c];
      const double hi_term = a > 0 ? a * hi[c] : a * lo[c];
      if (std::isfinite(lo_term)) min_act += lo_term; else ++min_inf;
      if (std::isfinite(hi_term)) max_act += hi_term; else ++max_inf;
    }
    if (min_inf == 0 && min_act > row.hi + tol_) return false;
    if (max_inf == 0 && max_act < row.lo - tol_) return false;

    for (const auto& [c, a] : row.entries) {
      const double lo_term = a > 0 ? a * lo[c] : a * hi[c];
      const double hi_term = a > 0 ? a * hi[c] : a * lo[c];
      double new_lo = -kInf, new_hi = kInf;
      if (std::isfinite(row.hi)) {
        double rest;
        bool ok = true;
        if (min_inf == 0) rest = min_act - lo_term;
        else if (min_inf == 1 && !std::isfinite(lo_term)) rest = min_act;
        else ok = false;
        if (ok) {
          const double bound = (row.hi - rest) / a;
          if (a > 0) new_hi = bound; else new_lo = bound;
        }
      }
      if (std::isfinite(row.lo)) {
        double rest;
        bool ok = true;
        if (max_inf == 0) rest = max_act - hi_term;
        else if (max_inf == 1 && !std::isfinite(hi_term)) rest = max_act;
        else ok = false;
        if (ok) {
          const double bound = (row.lo - rest) / a;
          if (a > 0) new_lo = std::max(new_lo, bound); else new_hi = std::min(new_hi, bound);
        }
      }
      if (!apply(c, new_lo, new_hi, lo, hi, on_change)) return false;
    }
    return true;
  }

 private:
  template <class OnChange>
  bool apply(int c, double new_lo, double new_hi, std::vector<double>& lo, std::vector<double>& hi,
             OnChange on_change) const {
    bool changed = false;
    if (integer_[c]) {
      if (std::isfinite(new_hi)) new_hi = std::floor(new_hi + 1e-6);
      if (std::isfinite(new_lo)) new_lo = std::ceil(new_lo - 1e-6);
    } else {
      // Keep derived bounds a hair loose so rounding never cuts feasible points.
      if (std::isfinite(new_hi)) new_hi += 1e-9 * (1.0 + std::abs(new_hi));
      if (std::isfinite(new_lo)) new_lo -= 1e-9 * (1.0 + std::abs(new_lo));
    }
    const double range = hi[c] - lo[c];
    auto worthwhile = [&](double gain, double new_range) {
      if (integer_[c]) return gain > 0.5;
      if (gain <= 1e-9 * (1.0 + std::abs(lo[c]) + std::abs(hi[c]))) return false;
      return !std::isfinite(range) || gain >= 1e-3 * range || new_range <= 1e-6;
    };
    if (new_hi < hi[c] && worthwhile(hi[c] - new_hi, new_hi - lo[c])) {
      hi[c] = new_hi;
      changed = true;
    }
    if (new_lo > lo[c] && worthwhile(new_lo - lo[c], hi[c] - new_lo)) {
      lo[c] = new_lo;
      changed = true;
    }
    if (lo[c] > hi[c]) {
      if (integer_[c] || lo[c] > hi[c] + tol_) return false;
      const double mid = 0.5 * (lo[c] + hi[c]);
      lo[c] = hi[c] = mid;
    }
    if (changed) on_change(c);
    return true;
  }

  const std::vector<SparseRow>& rows_;
  const std::vector<char>& integer_;
  double tol_;
  std::vector<std::vector<int>> rows_of_col_;
};

// ---------------------------------------------------------------------------
// Presolve: drop fixed columns and redundant rows after root propagation.

struct Presolved {
  std::vector<int> col_map;      // lowered column -> reduced column, or -1 when fixed
  std::vector<double> fixed_value;
  std::vector<int> orig_col;     // reduced column -> lowered column
  std::vector<SparseRow> rows;
  std::vector<double> lo, hi;
  std::vector<char> integer;
  bool infeasible = false;
};

Presolved presolve(const LoweredModel& m, const std::vector<double>& lo,
                   const std::vector<double>& hi, double tol) {
  Presolved p;
  const std::size_t n = lo.size();
  p.col_map.assign(n, -1);
  p.fixed_value.assign(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    if (hi[c] - lo[c] <= 1e-12) {
      p.fixed_value[c] = m.integer[c] ? std::round(lo[c]) : 0.5 * (lo[c] + hi[c]);
    } else {
      p.col_map[c] = static_cast<int>(p.orig_col.size());
      p.orig_col.push_back(static_cast<int>(c));
      p.lo.push_back(lo[c]);
      p.hi.push_back(hi[c]);
      p.integer.push_back(m.integer[c]);
    }
  }
  for (const SparseRow& row : m.rows) {
    SparseRow out;
    double shift = 0.0, min_act = 0.0, max_act = 0.0;
    for (const auto& [c, a] : row.entries) {
      if (p.col_map[c] < 0) {
        shift += a * p.fixed_value[c];
        continue;
      }
      out.entries.emplace_back(p.col_map[c], a);
      min_act += a > 0 ? a * lo[c] : a * hi[c];
      max_act += a > 0 ? a * hi[c] : a * lo[c];
    }
    out.lo = row.lo - shift;
    out.hi = row.hi - shift;
    if (out.entries.empty()) {
      if (out.lo > tol || out.hi < -tol) p.infeasible = true;
      continue;
    }
    if (min_act >= out.lo - 1e-9 && max_act <= out.hi + 1e-9) continue;  // redundant
    p.rows.push_back(std::move(out));
  }
  return p;
}

struct Node {
  std::vector<double> lo, hi;
  BoundedSimplex lp;
};

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Sat: return "sat";
    case SolveStatus::Unsat: return "unsat";
    case SolveStatus::Unknown: return "unknown";
  }
  return "?";
}

std::string_view to_string(UnknownReason r) {
  switch (r) {
    case UnknownReason::None: return "none";
    case UnknownReason::TimeLimit: return "time_limit";
    case UnknownReason::NodeLimit: return "node_limit";
    case UnknownReason::Numeric: return "numeric";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(feasibility_tol > 0) || !(integrality_tol > 0))
    throw InputError("solver: tolerances must be positive");
  if (integrality_tol >= 0.5) throw InputError("solver: integrality tolerance must be < 0.5");
  if (time_limit < 0) throw InputError("solver: negative time limit");
  if (node_limit < 0) throw InputError("solver: negative node limit");
}

SolverInstance::SolverInstance(SolverConfig config) : config_(config) { config_.validate(); }

std::size_t SolverInstance::num_variables() const {
  return static_cast<std::size_t>(std::count_if(vars_.begin(), vars_.end(),
                                                [](const auto& v) { return v.has_value(); }));
}

void SolverInstance::add_fragment(const MilpFragment& fragment) {
  for (const auto& [id, info] : fragment.variables) {
    if (!(info.lo <= info.hi) || !std::isfinite(info.lo) || !std::isfinite(info.hi))
      throw InputError("solver: variable '" + info.name + "' needs a finite box");
    if (id.value >= vars_.size()) {
      vars_.resize(id.value + 1);
      cuts_.resize(id.value + 1, Interval{-kInf, kInf});
    }
    auto& slot = vars_[id.value];
    if (slot) {
      if (slot->lo != info.lo || slot->hi != info.hi || slot->binary != info.binary)
        throw InputError("solver: variable '" + info.name + "' redeclared with different bounds");
      continue;
    }
    slot = info;
  }
  for (const Constraint& c : fragment.constraints) {
    for_each_var(c, [&](VarId v) {
      if (v.value >= vars_.size() || !vars_[v.value])
        throw InputError("solver: constraint references undeclared variable " +
                         std::to_string(v.value));
    });
    constraints_.push_back(c);
  }
}

SolveOutcome SolverInstance::solve() {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  SolveOutcome out;
  auto finish = [&](SolveStatus status, UnknownReason reason) {
    out.status = status;
    out.reason = reason;
    out.stats.wall_time = elapsed();
    if (status == SolveStatus::Unsat) proven_unsat_ = true;
    return out;
  };

  if (config_.time_limit <= 0) return finish(SolveStatus::Unknown, UnknownReason::TimeLimit);
  if (proven_unsat_) return finish(SolveStatus::Unsat, UnknownReason::None);

  const double tol = config_.feasibility_tol;
  Lowerer lowerer(vars_, &cuts_, false);
  for (const Constraint& c : constraints_) lowerer.lower(c);
  LoweredModel model = lowerer.take();
  const std::size_t ncols = model.lo.size();

  // Root propagation; its results are globally valid for the current
  // constraint set and therefore for every later, stronger one.
  std::vector<double> lo = model.lo, hi = model.hi;
  {
    BoundPropagator prop(model.rows, model.integer, ncols, tol);
    if (!prop.run(lo, hi, 200 * (model.rows.size() + ncols) + 10000))
      return finish(SolveStatus::Unsat, UnknownReason::None);
  }
  for (std::size_t c = 0; c < ncols; ++c) {
    const int id = model.var_of_col[c];
    if (id < 0) continue;
    Interval& cut = cuts_[static_cast<std::size_t>(id)];
    if (lo[c] > vars_[id]->lo || hi[c] < vars_[id]->hi) {
      cut.lo = std::max(cut.lo, lo[c]);
      cut.hi = std::min(cut.hi, hi[c]);
    }
  }
  out.stats.cuts = static_cast<std::size_t>(std::count_if(cuts_.begin(), cuts_.end(), [](const Interval& c) {
    return std::isfinite(c.lo) || std::isfinite(c.hi);
  }));

  Presolved pre = presolve(model, lo, hi, tol);
  if (pre.infeasible) return finish(SolveStatus::Unsat, UnknownReason::None);
  const int nred = static_cast<int>(pre.orig_col.size());
  out.stats.rows = pre.rows.size();
  out.stats.columns = static_cast<std::size_t>(nred);
  out.stats.binaries = static_cast<std::size_t>(std::count(pre.integer.begin(), pre.integer.end(), 1));

  BoundPropagator prop(pre.rows, pre.integer, static_cast<std::size_t>(nred), tol);
  const std::size_t node_work = 20 * (pre.rows.size() + static_cast<std::size_t>(nred)) + 1000;
  const long lp_limit = 50L * (static_cast<long>(pre.rows.size()) + nred) + 10000;

  // Full assignment from reduced-space values.
  auto assemble = [&](const std::vector<double>& xr) {
    std::vector<double> x(vars_.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < ncols; ++c) {
      const int id = model.var_of_col[c];
      if (id < 0) continue;
      double v = pre.col_map[c] < 0 ? pre.fixed_value[c] : xr[pre.col_map[c]];
      if (model.integer[c]) v = std::round(v);
      x[static_cast<std::size_t>(id)] = v;
    }
    return x;
  };
  auto verify = [&](const std::vector<double>& x) {
    for (std::size_t id = 0; id < vars_.size(); ++id) {
      if (!vars_[id]) continue;
      if (x[id] < vars_[id]->lo - 2 * tol || x[id] > vars_[id]->hi + 2 * tol) return false;
    }
    for (const Constraint& c : constraints_)
      if (violation(c, x) > 2 * tol) return false;
    return true;
  };

  std::vector<Node> stack;
  stack.push_back({pre.lo, pre.hi, BoundedSimplex(nred, pre.rows, pre.lo, pre.hi)});
  bool numeric_trouble = false;

  while (!stack.empty()) {
    if (elapsed() > config_.time_limit) return finish(SolveStatus::Unknown, UnknownReason::TimeLimit);
    if (out.stats.nodes >= config_.node_limit)
      return finish(SolveStatus::Unknown, UnknownReason::NodeLimit);
    Node node = std::move(stack.back());
    stack.pop_back();
    ++out.stats.nodes;

    if (!prop.run(node.lo, node.hi, node_work)) continue;
    for (int c = 0; c < nred; ++c)
      if (node.lp.lower(c) != node.lo[c] || node.lp.upper(c) != node.hi[c])
        node.lp.set_bounds(c, node.lo[c], node.hi[c]);
    const long before = node.lp.iterations();
    const LpStatus st = node.lp.solve(tol, lp_limit);
    out.stats.lp_iterations += node.lp.iterations() - before;
    if (st == LpStatus::Infeasible) continue;
    if (st == LpStatus::IterationLimit) {
      numeric_trouble = true;
      continue;
    }

    std::vector<double> xr = node.lp.primal();
    int branch_col = -1;
    double best_frac = -1.0;
    for (int c = 0; c < nred; ++c) {
      if (!pre.integer[c]) continue;
      const double frac = std::abs(xr[c] - std::round(xr[c]));
      if (frac <= config_.integrality_tol) continue;
      const double score = config_.branching == BranchingRule::MostFractional ? frac : 1.0;
      // Reduced columns follow VarId order for declared variables, so the
      // lowest column is the lowest VarId among ties.
      if (score > best_frac + 1e-12) {
        best_frac = score;
        branch_col = c;
      }
    }

    if (branch_col < 0) {
      // Integral relaxation point: pin the binaries and confirm exactly.
      Node fixed{node.lo, node.hi, node.lp};
      for (int c = 0; c < nred; ++c) {
        if (!pre.integer[c]) continue;
        fixed.lo[c] = fixed.hi[c] = std::round(xr[c]);
      }
      bool confirmed = false;
      if (prop.run(fixed.lo, fixed.hi, node_work)) {
        for (int c = 0; c < nred; ++c) fixed.lp.set_bounds(c, fixed.lo[c], fixed.hi[c]);
        fixed.lp.reinvert();
        const long b2 = fixed.lp.iterations();
        const LpStatus st2 = fixed.lp.solve(tol, lp_limit);
        out.stats.lp_iterations += fixed.lp.iterations() - b2;
        if (st2 == LpStatus::Feasible) {
          auto x = assemble(fixed.lp.primal());
          if (verify(x)) {
            out.assignment = std::move(x);
            return finish(SolveStatus::Sat, UnknownReason::None);
          }
        }
      }
      (void)confirmed;
      // Pinning failed numerically; branch on any still-free binary instead.
      for (int c = 0; c < nred && branch_col < 0; ++c)
        if (pre.integer[c] && node.lo[c] < node.hi[c]) branch_col = c;
      if (branch_col < 0) {
        numeric_trouble = true;
        continue;
      }
    }

    const bool up_first = xr[branch_col] >= 0.5;
    Node down{node.lo, node.hi, BoundedSimplex()};
    down.hi[branch_col] = 0.0;
    Node up{std::move(node.lo), std::move(node.hi), BoundedSimplex()};
    up.lo[branch_col] = 1.0;
    if (up_first) {
      down.lp = node.lp;
      up.lp = std::move(node.lp);
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      up.lp = node.lp;
      down.lp = std::move(node.lp);
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }
  if (numeric_trouble) return finish(SolveStatus::Unknown, UnknownReason::Numeric);
  return finish(SolveStatus::Unsat, UnknownReason::None);
}

// ---------------------------------------------------------------------------
// LP export.

namespace {

std::string sanitize(const std::string& name) {
  std::string s;
  for (char ch : name) s += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch : '_';
  if (s.empty() || std::isdigit(static_cast<unsigned char>(s.front()))) s = "v" + s;
  return s;
}

std::string fmt_num(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_expr(std::ostream& os, const SparseRow& row, const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [c, a] : row.entries) {
    if (first) {
      if (a < 0) os << "- ";
    } else {
      os << (a < 0 ? " - " : " + ");
    }
    os << fmt_num(std::abs(a)) << " " << names[c];
    first = false;
  }
  if (first) os << "0 " << (names.empty() ? "x" : names.front());
}

void write_row(std::ostream& os, const std::string& label, const SparseRow& row,
               const std::vector<std::string>& names) {
  auto one = [&](const std::string& l, const char* op, double rhs) {
    os << " " << l << ": ";
    write_expr(os, row, names);
    os << " " << op << " " << fmt_num(rhs) << "\n";
  };
  if (row.lo == row.hi) {
    one(label, "=", row.lo);
  } else {
    if (std::isfinite(row.lo)) one(std::isfinite(row.hi) ? label + "_lo" : label, ">=", row.lo);
    if (std::isfinite(row.hi)) one(std::isfinite(row.lo) ? label + "_hi" : label, "<=", row.hi);
  }
}

}  // namespace

std::string export_lp(const std::vector<MilpFragment>& fragments, const ObjectiveHint& hint) {
  std::vector<std::optional<VarInfo>> vars;
  std::vector<Constraint> constraints;
  for (const MilpFragment& f : fragments) {
    for (const auto& [id, info] : f.variables) {
      if (id.value >= vars.size()) vars.resize(id.value + 1);
      if (!vars[id.value]) vars[id.value] = info;
    }
    constraints.insert(constraints.end(), f.constraints.begin(), f.constraints.end());
  }
  Lowerer lowerer(vars, nullptr, true);
  for (const Constraint& c : constraints) lowerer.lower(c);
  LoweredModel m = lowerer.take();

  std::vector<std::string> names(m.names.size());
  {
    std::map<std::string, int> seen;
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::string s = sanitize(m.names[c]);
      if (seen[s]++ > 0) s += "_" + std::to_string(c);
      names[c] = s;
    }
  }
  std::vector<int> col_of_var(vars.size(), -1);
  for (std::size_t c = 0; c < m.var_of_col.size(); ++c)
    if (m.var_of_col[c] >= 0) col_of_var[static_cast<std::size_t>(m.var_of_col[c])] = static_cast<int>(c);

  std::ostringstream os;
  os << "\\ GNN robustness verification task (feasibility problem)\n";
  os << (hint.maximize ? "Maximize\n" : "Minimize\n");
  os << " obj: ";
  if (hint.terms.empty()) {
    os << "0 " << (names.empty() ? "x" : names.front());
  } else {
    SparseRow obj;
    for (const Term& t : hint.terms) obj.entries.emplace_back(col_of_var.at(t.var.value), t.coef);
    write_expr(os, obj, names);
  }
  os << "\nSubject To\n";
  for (std::size_t r = 0; r < m.rows.size(); ++r) write_row(os, "c" + std::to_string(r), m.rows[r], names);
  for (std::size_t i = 0; i < m.indicators.size(); ++i) {
    const LoweredIndicator& ind = m.indicators[i];
    const SparseRow& row = ind.row;
    auto one = [&](const std::string& l, const char* op, double rhs) {
      os << " " << l << ": " << names[ind.column] << " = " << (ind.phase ? 1 : 0) << " -> ";
      write_expr(os, row, names);
      os << " " << op << " " << fmt_num(rhs) << "\n";
    };
    const std::string label = "ind" + std::to_string(i);
    if (row.lo == row.hi) one(label, "=", row.lo);
    else if (std::isfinite(row.lo)) one(label, ">=", row.lo);
    else one(label, "<=", row.hi);
  }
  os << "Bounds\n";
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (m.integer[c]) continue;
    if (m.lo[c] == m.hi[c]) os << " " << names[c] << " = " << fmt_num(m.lo[c]) << "\n";
    else os << " " << fmt_num(m.lo[c]) << " <= " << names[c] << " <= " << fmt_num(m.hi[c]) << "\n";
  }
  os << "Binaries\n";
  for (std::size_t c = 0; c < names.size(); ++c)
    if (m.integer[c]) os << " " << names[c] << "\n";
  os << "End\n";
  return os.str();
}

}  // namespace gnnverify
