#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "gnnverify/graph.hpp"
#include "instances.hpp"

using namespace gnnverify;

namespace {

AttributedGraph chain3() { return AttributedGraph(3, {{0, 1}, {1, 2}}, Matrix(3, 1, 0.0)); }

AttributedGraph node0_with(std::vector<Arc> arcs, std::size_t n = 3) {
  return AttributedGraph(n, std::move(arcs), Matrix(n, 2, 0.5));
}

PerturbationSpec spec_with(const AttributedGraph& g, std::vector<Arc> fragile, int delta,
                           int local_default = kUnlimitedBudget) {
  PerturbationSpec s;
  s.fragile = std::move(fragile);
  s.global_budget = delta;
  s.local_default = local_default;
  s.normalize_for(g);
  return s;
}

}  // namespace

TEST(Graph, RejectsBadInputs) {
  EXPECT_THROW(AttributedGraph(2, {{0, 2}}, Matrix(2, 1)), InputError);
  EXPECT_THROW(AttributedGraph(2, {{1, 1}}, Matrix(2, 1)), InputError);
  EXPECT_THROW(AttributedGraph(3, {}, Matrix(2, 1)), InputError);
}

TEST(Graph, UndirectedStoresBothArcs) {
  AttributedGraph g(3, {{0, 1}}, Matrix(3, 1), false);
  EXPECT_TRUE(g.has_arc(0, 1));
  EXPECT_TRUE(g.has_arc(1, 0));
  EXPECT_EQ(g.arcs().size(), 2u);
}

TEST(RelevantNodes, Chain) {
  const auto g = chain3();
  EXPECT_EQ(relevant_nodes(g, 2, 1), (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(relevant_nodes(g, 2, 2), (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(relevant_nodes(g, 0, 2), (std::vector<NodeId>{0}));
}

TEST(RelevantNodes, Star) {
  std::vector<Arc> arcs;
  for (NodeId i = 1; i <= 5; ++i) arcs.push_back({i, 0});
  AttributedGraph g(6, arcs, Matrix(6, 1));
  EXPECT_EQ(relevant_nodes(g, 0, 3), (std::vector<NodeId>{0, 1, 2, 3, 4, 5}));
}

TEST(RelevantNodes, FragileArcsExtendReach) {
  const auto g = chain3();
  const auto s = spec_with(g, {{0, 2}}, 1);
  EXPECT_EQ(relevant_nodes(g, 2, 1), (std::vector<NodeId>{1, 2}));
  EXPECT_EQ(relevant_nodes(g, s, 2, 1), (std::vector<NodeId>{0, 1, 2}));
}

TEST(RelevantNodes, MonotoneInDepth) {
  testsupport::Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto inst = testsupport::random_instance(rng, Aggregation::Sum, testsupport::Regime::AllEdges);
    for (int k = 0; k < 4; ++k) {
      const auto a = relevant_nodes(inst.graph, inst.target, k);
      const auto b = relevant_nodes(inst.graph, inst.target, k + 1);
      EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
      EXPECT_TRUE(std::binary_search(a.begin(), a.end(), inst.target));
    }
  }
}

TEST(PartitionIncoming, Examples) {
  {
    const auto g = node0_with({{1, 0}});
    const auto s = spec_with(g, {}, 0);
    EXPECT_EQ(partition_incoming(g, s, 0), (NeighborPartition{{1}, {}, {}}));
  }
  {
    const auto g = node0_with({{1, 0}});
    const auto s = spec_with(g, {{1, 0}, {2, 0}}, 1);
    EXPECT_EQ(partition_incoming(g, s, 0), (NeighborPartition{{}, {1}, {2}}));
  }
  {
    const auto g = node0_with({{1, 0}, {2, 0}});
    const auto s = PerturbationSpec::all_edges(g, 1);
    EXPECT_EQ(partition_incoming(g, s, 0), (NeighborPartition{{}, {1, 2}, {}}));
  }
}

TEST(PartitionIncoming, IsAPartitionOfEUnionF) {
  testsupport::Rng rng(5);
  for (int rep = 0; rep < 40; ++rep) {
    const auto inst = testsupport::random_instance(rng, Aggregation::Mean, testsupport::Regime::SampledAdditions);
    for (NodeId v = 0; v < inst.graph.num_nodes(); ++v) {
      const auto p = partition_incoming(inst.graph, inst.spec, v);
      std::multiset<NodeId> all;
      all.insert(p.fixed_in.begin(), p.fixed_in.end());
      all.insert(p.fragile_in.begin(), p.fragile_in.end());
      all.insert(p.fragile_absent.begin(), p.fragile_absent.end());
      std::set<NodeId> want;
      for (NodeId u : inst.graph.in_neighbors(v)) want.insert(u);
      for (const Arc& a : inst.spec.fragile)
        if (a.to == v) want.insert(a.from);
      EXPECT_EQ(all.size(), want.size());
      EXPECT_EQ(std::set<NodeId>(all.begin(), all.end()), want);
    }
  }
}

TEST(Spec, NormalizeRejectsInvalid) {
  const auto g = chain3();
  PerturbationSpec s;
  s.fragile = {{0, 0}};
  EXPECT_THROW(s.normalize_for(g), InputError);
  s.fragile = {{0, 7}};
  EXPECT_THROW(s.normalize_for(g), InputError);
  s.fragile = {};
  s.global_budget = -1;
  EXPECT_THROW(s.normalize_for(g), InputError);
}

TEST(Validate, IdentityIsAdmissible) {
  const auto g = node0_with({{1, 0}});
  const auto s = spec_with(g, {{1, 0}}, 0, 0);
  EXPECT_TRUE(validate_perturbation(g, s, {}, g.attrs()).ok);
}

TEST(Validate, GlobalBudget) {
  const auto g = node0_with({{1, 0}});
  const auto s = spec_with(g, {{1, 0}}, 0);
  const auto r = validate_perturbation(g, s, {{{1, 0}}, {}}, g.attrs());
  ASSERT_FALSE(r.ok);
  EXPECT_NE(std::find(r.violations.begin(), r.violations.end(), "global budget"), r.violations.end());
}

TEST(Validate, LocalBudget) {
  const auto g = node0_with({}, 3);
  auto s = spec_with(g, {{1, 0}, {2, 0}}, 5);
  s.local[0] = 1;
  const auto r = validate_perturbation(g, s, {{}, {{1, 0}, {2, 0}}}, g.attrs());
  ASSERT_FALSE(r.ok);
  EXPECT_NE(std::find(r.violations.begin(), r.violations.end(), "local budget at 0"), r.violations.end());
}

TEST(Validate, AttributeBox) {
  const auto g = node0_with({});
  PerturbationSpec s;
  s.eps_default = 0.1;
  s.normalize_for(g);
  Matrix x = g.attrs();
  x(1, 1) += 0.1;
  EXPECT_TRUE(validate_perturbation(g, s, {}, x).ok);
  x(1, 1) += 0.01;
  EXPECT_FALSE(validate_perturbation(g, s, {}, x).ok);
}

TEST(Validate, NonFragileEditsRejected) {
  const auto g = node0_with({{1, 0}});
  const auto s = spec_with(g, {}, 3);
  EXPECT_FALSE(validate_perturbation(g, s, {{{1, 0}}, {}}, g.attrs()).ok);
  EXPECT_FALSE(validate_perturbation(g, s, {{}, {{2, 0}}}, g.attrs()).ok);
}

TEST(Apply, Examples) {
  const auto g = node0_with({{1, 0}});
  EXPECT_TRUE(apply_perturbation(g, {{{1, 0}}, {}}, g.attrs()).arcs().empty());
  EXPECT_EQ(apply_perturbation(g, {{}, {{2, 0}}}, g.attrs()).arcs(), (std::vector<Arc>{{1, 0}, {2, 0}}));
  EXPECT_EQ(apply_perturbation(g, {{{1, 0}}, {{2, 0}}}, g.attrs()).arcs(), (std::vector<Arc>{{2, 0}}));
}

TEST(Apply, SpecCheckedOverloadThrows) {
  const auto g = node0_with({{1, 0}});
  const auto s = spec_with(g, {{1, 0}}, 0);
  EXPECT_THROW(apply_perturbation(g, s, {{{1, 0}}, {}}, g.attrs()), InputError);
}

TEST(Apply, UndirectedPairCountsOnce) {
  AttributedGraph g(3, {{0, 1}, {1, 2}}, Matrix(3, 1), false);
  const auto s = PerturbationSpec::all_edges(g, 1);
  const EdgeEditSet e{{{0, 1}, {1, 0}}, {}};
  EXPECT_EQ(edit_count(g, e), 1u);
  EXPECT_TRUE(validate_perturbation(g, s, e, g.attrs()).ok);
  const auto pg = apply_perturbation(g, e, g.attrs());
  EXPECT_FALSE(pg.has_arc(0, 1));
  EXPECT_FALSE(pg.has_arc(1, 0));
  EXPECT_FALSE(validate_perturbation(g, s, {{{0, 1}}, {}}, g.attrs()).ok);
}

TEST(Apply, EditCountEqualsEditsOnRandomSamples) {
  testsupport::Rng rng(9);
  for (int rep = 0; rep < 50; ++rep) {
    const auto inst = testsupport::random_instance(rng, Aggregation::Sum, testsupport::Regime::SampledAdditions);
    const auto sp = testsupport::sample_perturbation(rng, inst.graph, inst.spec);
    EXPECT_TRUE(validate_perturbation(inst.graph, inst.spec, sp.edits, sp.attrs).ok);
    EXPECT_EQ(edit_count(inst.graph, sp.edits), sp.edits.deletions.size() + sp.edits.insertions.size());
    const auto pg = apply_perturbation(inst.graph, sp.edits, sp.attrs);
    const auto e0 = inst.graph.arcs(), e1 = pg.arcs();
    std::vector<Arc> sym;
    std::set_symmetric_difference(e0.begin(), e0.end(), e1.begin(), e1.end(), std::back_inserter(sym));
    EXPECT_EQ(sym.size(), edit_count(inst.graph, sp.edits));
  }
}
