#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gnnverify {

/// Opaque variable handle shared by every fragment of one encoding.
struct VarId {
  std::uint32_t value = 0;
  auto operator<=>(const VarId&) const = default;
};

enum class VarKind : std::uint8_t {
  Attr,          // perturbed attribute
  Pe,            // edge perturbation flag
  Contribution,  // a^(k)_{v,i,u}
  Msg,
  Pre,           // y^(k): pre-activation
  Emb,           // h^(k): post-activation
  Degree,
  DegreeInd,     // one-hot degree selector (mean lowering)
  ObjInd,        // rival-class selector
  Aux,           // created by the solver's lowering
};

std::string_view to_string(VarKind kind);

/// Variables with kinds Pe, DegreeInd, ObjInd are binary.
struct VarInfo {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool binary = false;
  VarKind kind = VarKind::Aux;

  bool operator==(const VarInfo&) const = default;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Term {
  VarId var;
  double coef = 0.0;
};

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
};

/// Holds when the binary var equals `phase`.
struct Literal {
  VarId var;
  bool phase = true;
};

struct IndicatorConstraint {
  Literal condition;
  LinearConstraint implied;
};

/// A candidate of a MaxConstraint: a variable or a constant, optionally
/// participating only while `active` holds.
struct MaxCandidate {
  std::optional<VarId> var;
  double constant = 0.0;
  std::optional<Literal> active;
};

/// target = max over active candidates; when no candidate is active the
/// target equals empty_value (which must then be set).
struct MaxConstraint {
  VarId target;
  std::vector<MaxCandidate> candidates;
  std::optional<double> empty_value;
};

using Constraint = std::variant<LinearConstraint, IndicatorConstraint, MaxConstraint>;

/// Declared variables plus constraints of one encoding stage.
struct MilpFragment {
  std::string label;
  std::vector<std::pair<VarId, VarInfo>> variables;
  std::vector<Constraint> constraints;
  // Encoder bookkeeping: constraints grouped per (equation, node, coordinate),
  // and how many constraints belong to the lowering rather than the model.
  std::size_t core_groups = 0;
  std::size_t aux_constraints = 0;

  bool empty() const { return variables.empty() && constraints.empty(); }
};

/// Amount by which `c` is violated under assignment x (indexed by VarId
/// value). Binaries are read as-is; callers round them first.
double violation(const Constraint& c, std::span<const double> x);

/// Visits every variable referenced by a constraint.
void for_each_var(const Constraint& c, const std::function<void(VarId)>& fn);

}  // namespace gnnverify

template <>
struct std::hash<gnnverify::VarId> {
  std::size_t operator()(const gnnverify::VarId& v) const noexcept {
    return std::hash<std::uint32_t>()(v.value);
  }
};
