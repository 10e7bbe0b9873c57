#include "gnnverify/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gnnverify {

namespace {

template <class F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw InputError(std::string(what) + ": " + e.what());
  }
}

Matrix matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows == 0 ? 0 : j.front().size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw InputError(std::string(what) + ": ragged row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Json arcs_to_json(const std::vector<Arc>& arcs) {
  Json out = Json::array();
  for (const Arc& a : arcs) out.push_back({a.from, a.to});
  return out;
}

std::vector<Arc> arcs_from_json(const Json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string(what) + " must be a list of [u, v] pairs");
  std::vector<Arc> arcs;
  for (const Json& e : j) {
    if (!e.is_array() || e.size() != 2) throw InputError(std::string(what) + ": expected [u, v]");
    const auto u = e[0].get<long long>(), v = e[1].get<long long>();
    if (u < 0 || v < 0) throw InputError(std::string(what) + ": negative node index");
    arcs.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  return arcs;
}

int budget_from_json(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw InputError(std::string(what) + " must be an integer");
  const auto b = j.get<long long>();
  if (b < 0) throw InputError(std::string(what) + " must be non-negative");
  return static_cast<int>(std::min<long long>(b, kUnlimitedBudget));
}

std::size_t parse_index(const std::string& s, const char* what) {
  std::size_t pos = 0;
  long long v = -1;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
  }
  if (v < 0 || pos != s.size()) throw InputError(std::string(what) + ": bad key '" + s + "'");
  return static_cast<std::size_t>(v);
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

GraphFile graph_from_json(const Json& j) {
  return guarded("graph", [&] {
    const bool directed = j.value("directed", true);
    const auto n = j.at("num_nodes").get<long long>();
    if (n < 0) throw InputError("graph: negative num_nodes");
    std::vector<Arc> arcs = arcs_from_json(j.at("edges"), "graph edges");
    Matrix attrs = matrix_from_json(j.at("attrs"), "graph attrs");
    GraphFile gf{AttributedGraph(static_cast<std::size_t>(n), std::move(arcs), std::move(attrs), directed),
                 std::nullopt};
    if (j.contains("labels") && !j.at("labels").is_null()) {
      auto labels = j.at("labels").get<std::vector<int>>();
      if (labels.size() != gf.graph.num_nodes()) throw InputError("graph: labels length mismatch");
      gf.labels = std::move(labels);
    }
    return gf;
  });
}

Json graph_to_json(const AttributedGraph& g, const std::optional<std::vector<int>>& labels) {
  std::vector<Arc> arcs;
  for (const Arc& a : g.arcs())
    if (g.directed() || a.from < a.to) arcs.push_back(a);
  Json j{{"directed", g.directed()},
         {"num_nodes", g.num_nodes()},
         {"edges", arcs_to_json(arcs)},
         {"attrs", matrix_to_json(g.attrs())}};
  if (labels) j["labels"] = *labels;
  return j;
}

PerturbationSpec spec_from_json(const Json& j, const AttributedGraph& g) {
  return guarded("spec", [&] {
    PerturbationSpec spec;
    const Json& fragile = j.at("fragile");
    if (fragile.is_string()) {
      if (fragile.get<std::string>() != "all-edges")
        throw InputError("spec: fragile must be \"all-edges\" or a list of pairs");
      spec.fragile = g.arcs();
    } else {
      spec.fragile = arcs_from_json(fragile, "spec fragile");
    }
    spec.global_budget = budget_from_json(j.at("delta"), "spec delta");
    if (j.contains("local_default") && !j.at("local_default").is_null())
      spec.local_default = budget_from_json(j.at("local_default"), "spec local_default");
    if (j.contains("local"))
      for (const auto& [key, val] : j.at("local").items())
        spec.local[parse_index(key, "spec local")] = budget_from_json(val, "spec local budget");
    spec.eps_default = j.value("eps_default", 0.0);
    if (j.contains("eps")) {
      for (const auto& [key, val] : j.at("eps").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos) throw InputError("spec eps: key must be \"v,i\"");
        spec.eps[{parse_index(key.substr(0, comma), "spec eps"),
                  parse_index(key.substr(comma + 1), "spec eps")}] = val.get<double>();
      }
    }
    for (const auto& [v, b] : spec.local) g.check_node(v);
    for (const auto& [vi, e] : spec.eps) {
      g.check_node(vi.first);
      if (vi.second >= g.attr_dim()) throw InputError("spec eps: attribute index out of range");
    }
    spec.normalize_for(g);
    return spec;
  });
}

Json spec_to_json(const PerturbationSpec& spec) {
  Json j{{"fragile", arcs_to_json(spec.fragile)}, {"delta", spec.global_budget}};
  if (spec.local_default != kUnlimitedBudget) j["local_default"] = spec.local_default;
  Json local = Json::object();
  for (const auto& [v, b] : spec.local) local[std::to_string(v)] = b;
  j["local"] = local;
  j["eps_default"] = spec.eps_default;
  Json eps = Json::object();
  for (const auto& [vi, e] : spec.eps) eps[std::to_string(vi.first) + "," + std::to_string(vi.second)] = e;
  j["eps"] = eps;
  return j;
}

GnnModel model_from_json(const Json& j) {
  return guarded("model", [&] {
    const auto dims_raw = j.at("dims").get<std::vector<long long>>();
    std::vector<std::size_t> dims;
    for (long long d : dims_raw) {
      if (d <= 0) throw InputError("model: dims must be positive");
      dims.push_back(static_cast<std::size_t>(d));
    }
    const Json& weights = j.at("weights");
    if (!weights.is_array()) throw InputError("model: weights must be a list");
    if (j.contains("layers") && j.at("layers").get<long long>() != static_cast<long long>(weights.size()))
      throw InputError("model: 'layers' disagrees with the number of weight entries");
    std::vector<GnnLayer> layers;
    for (const Json& w : weights) {
      GnnLayer layer;
      layer.self_weight = matrix_from_json(w.at("W1"), "model W1");
      layer.neighbor_weight = matrix_from_json(w.at("W2"), "model W2");
      if (w.contains("b") && !w.at("b").is_null()) layer.bias = w.at("b").get<std::vector<double>>();
      layers.push_back(std::move(layer));
    }
    return GnnModel(parse_aggregation(j.at("aggr").get<std::string>()), std::move(dims), std::move(layers));
  });
}

Json model_to_json(const GnnModel& model) {
  Json weights = Json::array();
  for (int k = 1; k <= model.num_layers(); ++k) {
    const GnnLayer& l = model.layer(k);
    weights.push_back({{"W1", matrix_to_json(l.self_weight)},
                       {"W2", matrix_to_json(l.neighbor_weight)},
                       {"b", l.bias.empty() ? Json(nullptr) : Json(l.bias)}});
  }
  return {{"layers", model.num_layers()},
          {"dims", model.dims()},
          {"aggr", std::string(to_string(model.aggregation()))},
          {"weights", weights}};
}

Json solve_stats_to_json(const SolveStats& s) {
  return {{"nodes", s.nodes},     {"lp_iterations", s.lp_iterations}, {"time_s", s.wall_time},
          {"rows", s.rows},       {"columns", s.columns},             {"binaries", s.binaries},
          {"cuts", s.cuts}};
}

Json encoding_stats_to_json(const EncodingStats& s) {
  return {{"num_real", s.num_real},
          {"num_binary", s.num_binary},
          {"num_aux_binary", s.num_aux_binary},
          {"num_constraints", s.num_constraints},
          {"num_raw_constraints", s.num_raw_constraints},
          {"num_aux_constraints", s.num_aux_constraints},
          {"N", s.nodes},
          {"D", s.dim_sum},
          {"within_ceilings", s.within_ceilings()}};
}

Json witness_to_json(const Witness& w, const AttributedGraph& g) {
  Json changed = Json::array();
  for (std::size_t v = 0; v < w.attrs.rows(); ++v)
    for (std::size_t i = 0; i < w.attrs.cols(); ++i)
      if (w.attrs(v, i) != g.attrs()(v, i))
        changed.push_back({{"node", v}, {"index", i}, {"value", w.attrs(v, i)}});
  return {{"deletions", arcs_to_json(w.edits.deletions)},
          {"insertions", arcs_to_json(w.edits.insertions)},
          {"attrs_changed", changed},
          {"logits", w.logits}};
}

Json verdict_to_json(NodeId node, const Verdict& v, const AttributedGraph& g) {
  Json iterations = Json::array();
  long nodes = 0, lp_iterations = 0;
  for (const IterationRecord& it : v.iterations) {
    iterations.push_back({{"layer", it.layer},
                          {"result", std::string(to_string(it.status))},
                          {"stats", solve_stats_to_json(it.stats)}});
    nodes += it.stats.nodes;
    lp_iterations += it.stats.lp_iterations;
  }
  Json j{{"node", node},
         {"status", std::string(to_string(v.status))},
         {"predicted", v.predicted},
         {"logits", v.logits},
         {"iterations", iterations},
         {"time_s", v.time_s},
         {"stats",
          {{"encoding", encoding_stats_to_json(v.encoding)},
           {"solver", {{"nodes", nodes}, {"lp_iterations", lp_iterations}}}}}};
  if (v.status == VerdictStatus::Robust) j["proven_at_layer"] = v.proven_at;
  if (v.status == VerdictStatus::Unknown) {
    j["reason"] = std::string(to_string(v.reason));
    j["last_completed_layer"] = v.last_completed;
  }
  if (v.witness) j["witness"] = witness_to_json(*v.witness, g);
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

Json oracle_to_json(NodeId node, const OracleVerdict& v, const AttributedGraph& g) {
  Json j{{"node", node},
         {"status", v.robust ? "robust" : "nonrobust"},
         {"predicted", v.predicted},
         {"stats", {{"perturbations", v.perturbations}}}};
  if (v.witness) j["witness"] = witness_to_json(*v.witness, g);
  return j;
}

Json counts_to_json(const BatchCounts& c, std::size_t tasks) {
  return {{"tasks", tasks},         {"robust", c.robust}, {"nonrobust", c.nonrobust},
          {"unknown", c.unknown},   {"skipped", c.skipped}, {"failed", c.failed},
          {"solved", c.robust + c.nonrobust}};
}

Json batch_to_json(const BatchReport& report, const AttributedGraph& g) {
  Json tasks = Json::array();
  for (const TaskResult& r : report.tasks) {
    if (!r.error.empty()) {
      tasks.push_back({{"node", r.node}, {"status", "error"}, {"error", r.error}});
    } else if (r.skipped) {
      tasks.push_back({{"node", r.node},
                       {"status", "skipped"},
                       {"predicted", r.verdict.predicted},
                       {"note", r.verdict.note}});
    } else {
      tasks.push_back(verdict_to_json(r.node, r.verdict, g));
    }
  }
  return {{"tasks", tasks}, {"aggregate", counts_to_json(report.counts, report.tasks.size())}};
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

}  // namespace gnnverify
