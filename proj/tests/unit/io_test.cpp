#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "gnnverify/io.hpp"
#include "instances.hpp"

using namespace gnnverify;

namespace {

const std::filesystem::path kData = GNNVERIFY_TEST_DATA;

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto p = std::filesystem::temp_directory_path() / ("gnnverify_io_" + name);
  std::ofstream(p) << content;
  return p;
}

}  // namespace

TEST(Io, ToyFixtureLoads) {
  const GraphFile gf = graph_from_json(read_json_file(kData / "toy_graph.json"));
  EXPECT_EQ(gf.graph.num_nodes(), 5u);
  EXPECT_FALSE(gf.graph.directed());
  EXPECT_EQ(gf.graph.arcs().size(), 10u);
  ASSERT_TRUE(gf.labels.has_value());
  const GnnModel m = model_from_json(read_json_file(kData / "toy_model.json"));
  EXPECT_EQ(m.num_layers(), 2);
  EXPECT_EQ(m.aggregation(), Aggregation::Mean);
  EXPECT_TRUE(m.layer(2).bias.empty());
  const PerturbationSpec s = spec_from_json(read_json_file(kData / "toy_spec.json"), gf.graph);
  EXPECT_EQ(s.fragile, gf.graph.arcs());
  EXPECT_EQ(s.global_budget, 1);
  EXPECT_EQ(s.local_budget(3), 1);
}

TEST(Io, SpecFields) {
  AttributedGraph g(3, {{0, 1}}, Matrix(3, 2));
  const Json j = Json::parse(R"({"fragile": [[2, 1]], "delta": 2, "local_default": 3,
                                 "local": {"1": 1}, "eps_default": 0.1, "eps": {"2,1": 0.5}})");
  const PerturbationSpec s = spec_from_json(j, g);
  EXPECT_EQ(s.fragile, (std::vector<Arc>{{2, 1}}));
  EXPECT_EQ(s.local_budget(1), 1);
  EXPECT_EQ(s.local_budget(0), 3);
  EXPECT_EQ(s.epsilon(2, 1), 0.5);
  EXPECT_EQ(s.epsilon(0, 0), 0.1);
  const PerturbationSpec back = spec_from_json(spec_to_json(s), g);
  EXPECT_EQ(back.fragile, s.fragile);
  EXPECT_EQ(back.local, s.local);
  EXPECT_EQ(back.eps, s.eps);
  EXPECT_EQ(back.local_default, s.local_default);
}

TEST(Io, SpecErrors) {
  AttributedGraph g(3, {{0, 1}}, Matrix(3, 2));
  for (const char* bad : {R"({"fragile": "some", "delta": 1})", R"({"fragile": [], "delta": -1})",
                          R"({"fragile": [[0, 0]], "delta": 1})", R"({"fragile": [], "delta": 1, "eps": {"1": 0.2}})",
                          R"({"fragile": [], "delta": 1, "eps": {"1,5": 0.2}})", R"({"fragile": []})",
                          R"({"fragile": [], "delta": 1, "local": {"x": 1}})"})
    EXPECT_THROW(spec_from_json(Json::parse(bad), g), InputError) << bad;
}

TEST(Io, GraphAndModelRoundTrip) {
  testsupport::Rng rng(113);
  for (int rep = 0; rep < 10; ++rep) {
    testsupport::InstanceShape shape;
    shape.undirected = rep % 2 == 0;
    const auto inst = testsupport::random_instance(rng, Aggregation::Max, testsupport::Regime::AllEdges, shape);
    const GraphFile gf = graph_from_json(Json::parse(graph_to_json(inst.graph).dump()));
    EXPECT_EQ(gf.graph.arcs(), inst.graph.arcs());
    EXPECT_EQ(gf.graph.attrs(), inst.graph.attrs());
    EXPECT_EQ(gf.graph.directed(), inst.graph.directed());
    const GnnModel m = model_from_json(Json::parse(model_to_json(inst.model).dump()));
    EXPECT_EQ(forward(m, inst.graph, inst.target).values, forward(inst.model, inst.graph, inst.target).values);
  }
}

TEST(Io, MalformedInputsAreInputErrors) {
  EXPECT_THROW(read_json_file(temp_file("broken.json", "{\"layers\": ")), InputError);
  EXPECT_THROW(read_json_file("/nonexistent/file.json"), InputError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"dims": [2, 2], "aggr": "sum"})")), InputError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"layers": 2, "dims": [1, 2], "aggr": "sum",
      "weights": [{"W1": [[1], [1]], "W2": [[1], [1]], "b": null}]})")),
               InputError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"layers": 1, "dims": [1, 2], "aggr": "lstm",
      "weights": [{"W1": [[1], [1]], "W2": [[1], [1]], "b": null}]})")),
               InputError);
  EXPECT_THROW(graph_from_json(Json::parse(R"({"num_nodes": 2, "edges": [[0, 1, 2]], "attrs": [[0], [0]]})")),
               InputError);
  EXPECT_THROW(graph_from_json(Json::parse(R"({"num_nodes": 2, "edges": [], "attrs": [[0], [0, 1]]})")), InputError);
  EXPECT_THROW(graph_from_json(Json::parse(R"({"num_nodes": 2, "edges": [], "attrs": [[0], [0]], "labels": [1]})")),
               InputError);
}

TEST(Io, Sha256) {
  const auto p = temp_file("abc.txt", "abc");
  EXPECT_EQ(sha256_file(p), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Io, VerdictJsonShape) {
  AttributedGraph g(3, {{1, 0}, {2, 0}}, Matrix{{0}, {2}, {-1}});
  GnnModel m(Aggregation::Sum, {1, 2}, {GnnLayer{Matrix(2, 1), Matrix{{1}, {-1}}, {}}});
  PerturbationSpec s;
  s.fragile = {{1, 0}};
  s.global_budget = 1;
  s.normalize_for(g);
  const Json j = verdict_to_json(0, verify_node(m, g, s, 0, {}), g);
  EXPECT_EQ(j.at("node"), 0);
  EXPECT_EQ(j.at("status"), "nonrobust");
  EXPECT_TRUE(j.at("iterations").is_array());
  EXPECT_TRUE(j.at("time_s").is_number());
  EXPECT_EQ(j.at("witness").at("deletions"), Json::parse("[[1, 0]]"));
  EXPECT_TRUE(j.at("stats").at("encoding").at("within_ceilings").get<bool>());

  s.global_budget = 0;
  const Json r = verdict_to_json(0, verify_node(m, g, s, 0, {}), g);
  EXPECT_EQ(r.at("status"), "robust");
  EXPECT_EQ(r.at("proven_at_layer"), 1);
  EXPECT_FALSE(r.contains("witness"));

  BatchReport batch;
  batch.tasks.push_back({0, false, "", verify_node(m, g, s, 0, {})});
  batch.counts.robust = 1;
  const Json b = batch_to_json(batch, g);
  EXPECT_EQ(b.at("aggregate").at("robust"), 1);
  EXPECT_EQ(b.at("aggregate").at("tasks"), 1);
}
