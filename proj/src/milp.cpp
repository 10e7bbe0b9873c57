#include "gnnverify/milp.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace gnnverify {

namespace {

double activity(const LinearConstraint& c, std::span<const double> x) {
  double a = 0.0;
  for (const Term& t : c.terms) a += t.coef * x[t.var.value];
  return a;
}

double linear_violation(const LinearConstraint& c, std::span<const double> x) {
  const double a = activity(c, x);
  switch (c.sense) {
    case Sense::LessEqual: return std::max(0.0, a - c.rhs);
    case Sense::GreaterEqual: return std::max(0.0, c.rhs - a);
    case Sense::Equal: return std::abs(a - c.rhs);
  }
  return 0.0;
}

bool holds(const Literal& l, std::span<const double> x) {
  const bool on = x[l.var.value] > 0.5;
  return on == l.phase;
}

}  // namespace

std::string_view to_string(VarKind kind) {
  switch (kind) {
    case VarKind::Attr: return "attr";
    case VarKind::Pe: return "pe";
    case VarKind::Contribution: return "a";
    case VarKind::Msg: return "msg";
    case VarKind::Pre: return "y";
    case VarKind::Emb: return "h";
    case VarKind::Degree: return "deg";
    case VarKind::DegreeInd: return "degind";
    case VarKind::ObjInd: return "objind";
    case VarKind::Aux: return "aux";
  }
  return "?";
}

double violation(const Constraint& c, std::span<const double> x) {
  return std::visit(
      [&](const auto& con) -> double {
        using T = std::decay_t<decltype(con)>;
        if constexpr (std::is_same_v<T, LinearConstraint>) {
          return linear_violation(con, x);
        } else if constexpr (std::is_same_v<T, IndicatorConstraint>) {
          return holds(con.condition, x) ? linear_violation(con.implied, x) : 0.0;
        } else {
          bool any = false;
          double best = 0.0;
          for (const MaxCandidate& cand : con.candidates) {
            if (cand.active && !holds(*cand.active, x)) continue;
            const double v = cand.var ? x[cand.var->value] : cand.constant;
            best = any ? std::max(best, v) : v;
            any = true;
          }
          if (!any) best = con.empty_value.value_or(0.0);
          return std::abs(x[con.target.value] - best);
        }
      },
      c);
}

void for_each_var(const Constraint& c, const std::function<void(VarId)>& fn) {
  std::visit(
      [&](const auto& con) {
        using T = std::decay_t<decltype(con)>;
        if constexpr (std::is_same_v<T, LinearConstraint>) {
          for (const Term& t : con.terms) fn(t.var);
        } else if constexpr (std::is_same_v<T, IndicatorConstraint>) {
          fn(con.condition.var);
          for (const Term& t : con.implied.terms) fn(t.var);
        } else {
          fn(con.target);
          for (const MaxCandidate& cand : con.candidates) {
            if (cand.var) fn(*cand.var);
            if (cand.active) fn(cand.active->var);
          }
        }
      },
      c);
}

}  // namespace gnnverify
