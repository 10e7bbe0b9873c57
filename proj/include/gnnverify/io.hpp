#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gnnverify/bounds.hpp"
#include "gnnverify/graph.hpp"
#include "gnnverify/model.hpp"
#include "gnnverify/oracle.hpp"
#include "gnnverify/verifier.hpp"

namespace gnnverify {

using Json = nlohmann::json;

/// A graph file; "labels" is an optional extension used to skip misclassified targets.
struct GraphFile {
  AttributedGraph graph;
  std::optional<std::vector<int>> labels;
};

Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

GraphFile graph_from_json(const Json& j);
Json graph_to_json(const AttributedGraph& g, const std::optional<std::vector<int>>& labels = std::nullopt);

/// Parses and normalises a perturbation spec for g.
PerturbationSpec spec_from_json(const Json& j, const AttributedGraph& g);
Json spec_to_json(const PerturbationSpec& spec);

GnnModel model_from_json(const Json& j);
Json model_to_json(const GnnModel& model);

Json solve_stats_to_json(const SolveStats& s);
Json encoding_stats_to_json(const EncodingStats& s);
Json witness_to_json(const Witness& w, const AttributedGraph& g);
Json verdict_to_json(NodeId node, const Verdict& v, const AttributedGraph& g);
Json oracle_to_json(NodeId node, const OracleVerdict& v, const AttributedGraph& g);
Json counts_to_json(const BatchCounts& c, std::size_t tasks);
Json batch_to_json(const BatchReport& report, const AttributedGraph& g);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gnnverify
