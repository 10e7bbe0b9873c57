#include <gtest/gtest.h>

#include <regex>
#include <sstream>

#include "gnnverify/graph.hpp"
#include "gnnverify/solver.hpp"
#include "reference_lp.hpp"

using namespace gnnverify;

namespace {

VarId var(std::uint32_t i) { return VarId{i}; }

MilpFragment box(std::uint32_t id, double lo, double hi, bool binary = false) {
  MilpFragment f;
  f.variables.push_back({var(id), VarInfo{"v" + std::to_string(id), lo, hi, binary, VarKind::Aux}});
  return f;
}

LinearConstraint lin(std::vector<Term> terms, Sense s, double rhs) { return {std::move(terms), s, rhs}; }

bool satisfies_all(const SolverInstance& s, const SolveOutcome& out, double tol) {
  for (const Constraint& c : s.constraints())
    if (violation(c, out.assignment) > tol) return false;
  return true;
}

}  // namespace

TEST(SolverConfig, Validation) {
  SolverConfig c;
  EXPECT_NO_THROW(c.validate());
  c.feasibility_tol = -1;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_THROW(SolverInstance{c}, InputError);
}

TEST(Solver, EmptyFragmentIsNoOp) {
  SolverInstance s;
  s.add_fragment(box(0, 0, 1));
  s.add_fragment({});
  EXPECT_EQ(s.num_variables(), 1u);
  EXPECT_EQ(s.num_constraints(), 0u);
}

TEST(Solver, BoxContradiction) {
  SolverInstance s;
  MilpFragment f = box(0, 0, 1);
  f.constraints.push_back(lin({{var(0), 1}}, Sense::GreaterEqual, 2));
  s.add_fragment(f);
  EXPECT_EQ(s.solve().status, SolveStatus::Unsat);
}

TEST(Solver, BinaryTimesThree) {
  SolverInstance s;
  MilpFragment f = box(0, 0, 1, true);
  f.variables.push_back({var(1), VarInfo{"x", 0, 10, false, VarKind::Aux}});
  f.constraints.push_back(lin({{var(1), 1}, {var(0), -3}}, Sense::Equal, 0));
  f.constraints.push_back(lin({{var(1), 1}}, Sense::GreaterEqual, 2));
  s.add_fragment(f);
  const SolveOutcome out = s.solve();
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_NEAR(out.value(var(0)), 1, 1e-9);
  EXPECT_NEAR(out.value(var(1)), 3, 1e-6);
}

TEST(Solver, ConflictingRedeclarationThrows) {
  SolverInstance s;
  s.add_fragment(box(0, 0, 1));
  EXPECT_NO_THROW(s.add_fragment(box(0, 0, 1)));
  EXPECT_THROW(s.add_fragment(box(0, 0, 2)), InputError);
  EXPECT_THROW(s.add_fragment(box(1, 0, kInfinity)), InputError);
}

TEST(Solver, ZeroTimeLimitGivesUnknown) {
  SolverConfig c;
  c.time_limit = 0;
  SolverInstance s(c);
  MilpFragment f = box(0, 0, 1, true);
  f.constraints.push_back(lin({{var(0), 1}}, Sense::GreaterEqual, 0.5));
  s.add_fragment(f);
  const SolveOutcome out = s.solve();
  EXPECT_EQ(out.status, SolveStatus::Unknown);
  EXPECT_EQ(out.reason, UnknownReason::TimeLimit);
}

TEST(Solver, MaxWithEmptyValue) {
  // z = max over {x if b}, empty value 0; z >= 1 forces b = 1 and x >= 1.
  SolverInstance s;
  MilpFragment f = box(0, 0, 1, true);
  f.variables.push_back({var(1), VarInfo{"x", -2, 3, false, VarKind::Aux}});
  f.variables.push_back({var(2), VarInfo{"z", -2, 3, false, VarKind::Aux}});
  f.constraints.push_back(MaxConstraint{var(2), {MaxCandidate{var(1), 0.0, Literal{var(0), true}}}, 0.0});
  f.constraints.push_back(lin({{var(2), 1}}, Sense::GreaterEqual, 1));
  s.add_fragment(f);
  SolveOutcome out = s.solve();
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_NEAR(out.value(var(0)), 1, 1e-9);
  EXPECT_GE(out.value(var(1)), 1 - 1e-6);
  EXPECT_TRUE(satisfies_all(s, out, 2e-6));

  MilpFragment g;
  g.constraints.push_back(lin({{var(1), 1}}, Sense::LessEqual, 0.5));
  s.add_fragment(g);
  EXPECT_EQ(s.solve().status, SolveStatus::Unsat);
}

TEST(Solver, IndicatorBothPhases) {
  SolverInstance s;
  MilpFragment f = box(0, 0, 1, true);
  f.variables.push_back({var(1), VarInfo{"x", 0, 5, false, VarKind::Aux}});
  f.constraints.push_back(IndicatorConstraint{{var(0), true}, lin({{var(1), 1}}, Sense::Equal, 0)});
  f.constraints.push_back(IndicatorConstraint{{var(0), false}, lin({{var(1), 1}}, Sense::GreaterEqual, 4)});
  f.constraints.push_back(lin({{var(1), 1}}, Sense::GreaterEqual, 1));
  s.add_fragment(f);
  const SolveOutcome out = s.solve();
  ASSERT_EQ(out.status, SolveStatus::Sat);
  EXPECT_NEAR(out.value(var(0)), 0, 1e-9);
  EXPECT_GE(out.value(var(1)), 4 - 1e-6);
}

TEST(Solver, DeterministicOutcomes) {
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testsupport::random_tiny_milp(rng);
    SolverInstance a, b;
    a.add_fragment(m.fragment());
    b.add_fragment(m.fragment());
    const auto oa = a.solve(), ob = b.solve();
    EXPECT_EQ(oa.status, ob.status);
    EXPECT_EQ(oa.stats.nodes, ob.stats.nodes);
    EXPECT_EQ(oa.stats.lp_iterations, ob.stats.lp_iterations);
    if (oa.status == SolveStatus::Sat) EXPECT_EQ(oa.assignment.size(), ob.assignment.size());
  }
}

TEST(Solver, MatchesEnumerationAndChecksAssignments) {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 150; ++rep) {
    const auto m = testsupport::random_tiny_milp(rng);
    SolverInstance s;
    s.add_fragment(m.fragment());
    const SolveOutcome out = s.solve();
    EXPECT_EQ(out.status, testsupport::enumerate_milp(m.vars, m.constraints)) << "instance " << rep;
    if (out.status == SolveStatus::Sat) EXPECT_TRUE(satisfies_all(s, out, 2 * s.config().feasibility_tol));
  }
}

TEST(Solver, IncrementalEqualsOneShotAndUnsatIsMonotone) {
  std::mt19937_64 rng(77);
  for (int rep = 0; rep < 60; ++rep) {
    const auto m = testsupport::random_tiny_milp(rng);
    MilpFragment vars = m.fragment();
    vars.constraints.clear();
    SolverInstance inc;
    inc.add_fragment(vars);
    bool unsat_seen = false;
    SolveStatus last = SolveStatus::Unknown;
    for (const Constraint& c : m.constraints) {
      MilpFragment step;
      step.constraints.push_back(c);
      inc.add_fragment(step);
      last = inc.solve().status;
      if (unsat_seen) EXPECT_EQ(last, SolveStatus::Unsat);
      unsat_seen = unsat_seen || last == SolveStatus::Unsat;
    }
    SolverInstance once;
    once.add_fragment(m.fragment());
    EXPECT_EQ(last, once.solve().status) << "instance " << rep;
  }
}

TEST(ExportLp, SectionsAndIndicatorSyntax) {
  MilpFragment f = box(0, 0, 1, true);
  f.variables.push_back({var(1), VarInfo{"x", -1, 2.5, false, VarKind::Aux}});
  f.constraints.push_back(lin({{var(1), 1}}, Sense::LessEqual, 2));
  f.constraints.push_back(IndicatorConstraint{{var(0), true}, lin({{var(1), 1}}, Sense::Equal, 0)});
  const std::string lp = export_lp({f});
  for (const char* section : {"Minimize", "Subject To", "Bounds", "Binaries", "End"})
    EXPECT_NE(lp.find(section), std::string::npos) << section;
  EXPECT_TRUE(std::regex_search(lp, std::regex(R"(ind\d+: \S+ = 1 -> )")));
  EXPECT_EQ(lp.find("0.20000000000000001"), std::string::npos);
}

TEST(ExportLp, SelfParseRecoversConstraintCount) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testsupport::random_tiny_milp(rng);
    const std::string lp = export_lp({m.fragment()});
    std::istringstream in(lp);
    std::string line, section;
    std::size_t rows = 0, indicators = 0, bounds = 0;
    while (std::getline(in, line)) {
      if (line == "Subject To" || line == "Bounds" || line == "Binaries" || line == "End") {
        section = line;
        continue;
      }
      if (section == "Subject To" && line.find(':') != std::string::npos)
        (line.find("->") != std::string::npos ? indicators : rows)++;
      if (section == "Bounds" && line.find("<=") != std::string::npos) ++bounds;
    }
    std::size_t want_ind = 0;
    bool has_max = false;
    for (const Constraint& c : m.constraints) {
      want_ind += std::holds_alternative<IndicatorConstraint>(c);
      has_max = has_max || std::holds_alternative<MaxConstraint>(c);
    }
    EXPECT_GE(indicators, want_ind);
    if (!has_max) EXPECT_GE(rows + indicators, m.constraints.size());
    EXPECT_GT(bounds, 0u);
  }
}
