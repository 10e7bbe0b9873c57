// gnnverify command-line front end.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "gnnverify/bounds.hpp"
#include "gnnverify/encoder.hpp"
#include "gnnverify/io.hpp"
#include "gnnverify/oracle.hpp"
#include "gnnverify/solver.hpp"
#include "gnnverify/verifier.hpp"

namespace gv = gnnverify;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
  std::string model_path, graph_path, spec_path;
  std::string fragile;  // all-edges | none | add-sampled:k
  int delta = -1;
  int local_default = -1;
  double eps = -1.0;
  std::string targets;
  int sample = 0;
  bool all_targets = false;
  std::uint64_t seed = 0;
  std::string output;
};

struct Inputs {
  gv::GnnModel model;
  gv::GraphFile graph;
  gv::PerturbationSpec spec;
  std::vector<gv::NodeId> targets;
  std::size_t sampled_insertions = 0;
};

void add_model_graph(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--model", a.model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--graph", a.graph_path, "Graph JSON")->required()->check(CLI::ExistingFile);
}

void add_spec(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--spec", a.spec_path, "Perturbation spec JSON")->check(CLI::ExistingFile);
  cmd->add_option("--fragile", a.fragile, "all-edges | none | add-sampled:k");
  cmd->add_option("--delta", a.delta, "Global edge budget (overrides the spec)");
  cmd->add_option("--local-default", a.local_default, "Default local budget (overrides the spec)");
  cmd->add_option("--eps", a.eps, "Uniform attribute radius (overrides the spec)");
  cmd->add_option("--seed", a.seed, "Seed for sampled targets and fragile additions");
}

void add_targets(CLI::App* cmd, CommonArgs& a) {
  auto* group = cmd->add_option_group("targets");
  group->add_option("--targets", a.targets, "Comma-separated node ids");
  group->add_option("--sample", a.sample, "Number of randomly sampled target nodes");
  group->add_flag("--all", a.all_targets, "Every node");
  group->require_option(1);
}

std::vector<gv::NodeId> parse_list(const std::string& s) {
  std::vector<gv::NodeId> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    long long v = -1;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
    }
    if (v < 0 || pos != item.size()) throw gv::InputError("bad node id '" + item + "'");
    out.push_back(static_cast<gv::NodeId>(v));
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (gv::NodeId v : parse_list(s)) out.push_back(static_cast<int>(v));
  return out;
}

/// Adds up to k non-edges, sampled uniformly, to F.
std::size_t add_sampled_non_edges(gv::PerturbationSpec& spec, const gv::AttributedGraph& g,
                                  std::size_t k, std::uint64_t seed) {
  std::vector<gv::Arc> candidates;
  for (gv::NodeId u = 0; u < g.num_nodes(); ++u)
    for (gv::NodeId v = 0; v < g.num_nodes(); ++v) {
      if (u == v || g.has_arc(u, v) || (!g.directed() && u > v)) continue;
      if (spec.is_fragile({u, v})) continue;
      candidates.push_back({u, v});
    }
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<gv::Arc> picked;
  std::sample(candidates.begin(), candidates.end(), std::back_inserter(picked),
              std::min(k, candidates.size()), rng);
  spec.fragile.insert(spec.fragile.end(), picked.begin(), picked.end());
  spec.normalize_for(g);
  return picked.size();
}

Inputs load_inputs(const CommonArgs& a, bool need_spec) {
  Inputs in;
  in.model = gv::model_from_json(gv::read_json_file(a.model_path));
  in.graph = gv::graph_from_json(gv::read_json_file(a.graph_path));
  const gv::AttributedGraph& g = in.graph.graph;
  if (g.attr_dim() != in.model.dim(0))
    throw gv::InputError("graph attribute width " + std::to_string(g.attr_dim()) +
                         " does not match model input dimension " + std::to_string(in.model.dim(0)));

  if (need_spec) {
    if (!a.spec_path.empty()) {
      in.spec = gv::spec_from_json(gv::read_json_file(a.spec_path), g);
    } else {
      in.spec.fragile = g.arcs();
    }
    if (a.delta >= 0) in.spec.global_budget = a.delta;
    if (a.local_default >= 0) in.spec.local_default = a.local_default;
    if (a.eps >= 0) {
      in.spec.eps_default = a.eps;
      in.spec.eps.clear();
    }
    if (a.fragile == "all-edges") {
      in.spec.fragile = g.arcs();
    } else if (a.fragile == "none") {
      in.spec.fragile.clear();
    } else if (a.fragile.rfind("add-sampled:", 0) == 0) {
      if (a.spec_path.empty()) in.spec.fragile = g.arcs();
      const auto k = parse_list(a.fragile.substr(12));
      if (k.size() != 1) throw gv::InputError("--fragile add-sampled:k needs one count");
      in.spec.normalize_for(g);
      in.sampled_insertions = add_sampled_non_edges(in.spec, g, k.front(), a.seed);
    } else if (!a.fragile.empty()) {
      throw gv::InputError("--fragile must be all-edges, none or add-sampled:k");
    }
    in.spec.normalize_for(g);
  }

  if (a.all_targets) {
    for (gv::NodeId v = 0; v < g.num_nodes(); ++v) in.targets.push_back(v);
  } else if (a.sample > 0) {
    std::vector<gv::NodeId> nodes(g.num_nodes());
    for (gv::NodeId v = 0; v < g.num_nodes(); ++v) nodes[v] = v;
    std::mt19937_64 rng(a.seed);
    std::sample(nodes.begin(), nodes.end(), std::back_inserter(in.targets),
                std::min<std::size_t>(static_cast<std::size_t>(a.sample), nodes.size()), rng);
  } else {
    in.targets = parse_list(a.targets);
  }
  for (gv::NodeId t : in.targets) g.check_node(t);
  return in;
}

gv::Json provenance(const CommonArgs& a, const Inputs& in) {
  gv::Json files{{"model", {{"path", a.model_path}, {"sha256", gv::sha256_file(a.model_path)}}},
                 {"graph", {{"path", a.graph_path}, {"sha256", gv::sha256_file(a.graph_path)}}}};
  if (!a.spec_path.empty())
    files["spec"] = {{"path", a.spec_path}, {"sha256", gv::sha256_file(a.spec_path)}};
  gv::Json run{{"targets", in.targets}, {"seed", a.seed}};
  if (!a.fragile.empty()) run["fragile"] = a.fragile;
  if (in.sampled_insertions > 0) run["sampled_insertions"] = in.sampled_insertions;
  return {{"tool", "gnnverify"}, {"version", kVersion}, {"inputs", files}, {"run", run}};
}

void emit(const std::string& path, const gv::Json& j) {
  if (path.empty() || path == "-") std::cout << j.dump(2) << "\n";
  else gv::write_json_file(path, j);
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string mode = "incremental", objective = "full", bound_method = "tightened";
  double time_limit = 300.0;
  long node_limit = -1;
  int workers = 1;
  std::string sweep;
  bool force = false;
};

int run_verify(const CommonArgs& a, const VerifyArgs& v) {
  Inputs in = load_inputs(a, true);
  gv::VerifyConfig cfg;
  cfg.mode = gv::parse_verify_mode(v.mode);
  cfg.objective = gv::parse_objective_mode(v.objective);
  if (v.bound_method == "plain") cfg.bounds.method = gv::BoundMethod::Plain;
  else if (v.bound_method != "tightened") throw gv::InputError("--bounds must be tightened or plain");
  if (v.time_limit < 0) throw gv::InputError("--time-limit must be non-negative");
  cfg.time_limit = v.time_limit;
  if (v.node_limit >= 0) cfg.solver.node_limit = v.node_limit;
  if (v.workers < 1) throw gv::InputError("--workers must be >= 1");

  gv::Json report = provenance(a, in);
  report["run"]["mode"] = v.mode;
  report["run"]["objective"] = v.objective;
  report["run"]["bounds"] = v.bound_method;
  report["run"]["time_limit_s"] = v.time_limit;
  report["run"]["workers"] = v.workers;
  report["spec"] = gv::spec_to_json(in.spec);

  const gv::BatchReport batch =
      gv::verify_batch(in.model, in.graph.graph, in.spec, in.targets, cfg, v.workers, in.graph.labels, v.force);
  gv::Json body = gv::batch_to_json(batch, in.graph.graph);
  report["tasks"] = body["tasks"];
  report["aggregate"] = body["aggregate"];

  if (!v.sweep.empty()) {
    gv::Json sweep = gv::Json::array();
    for (const gv::SweepPoint& p : gv::budget_sweep(in.model, in.graph.graph, in.spec, in.targets,
                                                     parse_int_list(v.sweep), cfg, v.workers,
                                                     in.graph.labels, v.force))
      sweep.push_back({{"delta", p.global_budget}, {"counts", gv::counts_to_json(p.counts, in.targets.size())}});
    report["sweep"] = sweep;
  }
  emit(a.output, report);
  return 0;
}

int run_bounds(const CommonArgs& a) {
  Inputs in = load_inputs(a, true);
  const int K = in.model.num_layers();
  gv::Json layers = gv::Json::array();
  struct Gap {
    double sum = 0, max = 0;
    std::size_t count = 0;
  };
  std::vector<Gap> tight(static_cast<std::size_t>(K) + 1), plain(static_cast<std::size_t>(K) + 1);
  for (gv::NodeId t : in.targets) {
    for (auto method : {gv::BoundMethod::Tightened, gv::BoundMethod::Plain}) {
      const gv::BoundsTable table = gv::propagate(in.model, in.graph.graph, in.spec, t, {method, 0.0});
      auto& gaps = method == gv::BoundMethod::Tightened ? tight : plain;
      for (int k = 1; k <= K; ++k)
        for (const auto& [v, lb] : table.layers[static_cast<std::size_t>(k)])
          for (const gv::Interval& iv : lb.y) {
            Gap& g = gaps[static_cast<std::size_t>(k)];
            g.sum += iv.width();
            g.max = std::max(g.max, iv.width());
            ++g.count;
          }
    }
  }
  auto gap_json = [](const Gap& g) {
    return gv::Json{{"mean_gap", g.count ? g.sum / static_cast<double>(g.count) : 0.0},
                    {"max_gap", g.max},
                    {"count", g.count}};
  };
  for (int k = 1; k <= K; ++k)
    layers.push_back({{"layer", k},
                      {"tightened", gap_json(tight[static_cast<std::size_t>(k)])},
                      {"plain", gap_json(plain[static_cast<std::size_t>(k)])}});
  gv::Json report = provenance(a, in);
  report["spec"] = gv::spec_to_json(in.spec);
  report["layers"] = layers;
  emit(a.output, report);
  return 0;
}

int run_oracle(const CommonArgs& a, const gv::OracleLimits& limits, bool force) {
  Inputs in = load_inputs(a, true);
  gv::Json tasks = gv::Json::array();
  gv::BatchCounts counts;
  const auto& labels = in.graph.labels;
  for (gv::NodeId t : in.targets) {
    if (labels && !force && t < labels->size() && (*labels)[t] >= 0) {
      const std::size_t pred = gv::predict(in.model, in.graph.graph, t);
      if (static_cast<std::size_t>((*labels)[t]) != pred) {
        ++counts.skipped;
        tasks.push_back({{"node", t},
                         {"status", "skipped"},
                         {"predicted", pred},
                         {"note", "misclassified (label " + std::to_string((*labels)[t]) + ")"}});
        continue;
      }
    }
    try {
      const gv::OracleVerdict v = gv::brute_force_verify(in.model, in.graph.graph, in.spec, t, limits);
      (v.robust ? counts.robust : counts.nonrobust)++;
      tasks.push_back(gv::oracle_to_json(t, v, in.graph.graph));
    } catch (const gv::InputError& e) {
      ++counts.failed;
      tasks.push_back({{"node", t}, {"status", "error"}, {"error", e.what()}});
    }
  }
  gv::Json report = provenance(a, in);
  report["spec"] = gv::spec_to_json(in.spec);
  report["tasks"] = tasks;
  report["aggregate"] = gv::counts_to_json(counts, in.targets.size());
  emit(a.output, report);
  return 0;
}

int run_attack(const CommonArgs& a, int trials) {
  Inputs in = load_inputs(a, true);
  gv::Json tasks = gv::Json::array();
  std::size_t found = 0;
  for (gv::NodeId t : in.targets) {
    const auto w = gv::attack_sample(in.model, in.graph.graph, in.spec, t, trials, a.seed + t);
    gv::Json task{{"node", t}, {"status", w ? "nonrobust" : "no-witness"}};
    if (w) {
      ++found;
      task["witness"] = gv::witness_to_json(*w, in.graph.graph);
    }
    tasks.push_back(task);
  }
  gv::Json report = provenance(a, in);
  report["run"]["trials"] = trials;
  report["spec"] = gv::spec_to_json(in.spec);
  report["tasks"] = tasks;
  report["aggregate"] = {{"tasks", in.targets.size()}, {"nonrobust", found}};
  emit(a.output, report);
  return 0;
}

int run_predict(const CommonArgs& a) {
  Inputs in = load_inputs(a, false);
  gv::Json out = gv::Json::array();
  for (gv::NodeId t : in.targets) {
    const gv::Logits l = gv::forward(in.model, in.graph.graph, t);
    gv::Json row{{"node", t}, {"class", l.predicted}, {"logits", l.values}};
    if (in.graph.labels) row["label"] = (*in.graph.labels)[t];
    out.push_back(row);
  }
  emit(a.output, {{"predictions", out}});
  return 0;
}

int run_export_lp(const CommonArgs& a, const std::string& objective) {
  Inputs in = load_inputs(a, true);
  if (in.targets.size() != 1) throw gv::InputError("export-lp needs exactly one target");
  const gv::NodeId t = in.targets.front();
  const std::size_t predicted = gv::predict(in.model, in.graph.graph, t);
  const gv::BoundsTable table = gv::propagate(in.model, in.graph.graph, in.spec, t);
  const gv::TaskEncoding enc = gv::encode_task(in.model, in.graph.graph, in.spec, t, predicted,
                                               gv::parse_objective_mode(objective), table);
  const std::string text = gv::export_lp(enc.all());
  if (a.output.empty() || a.output == "-") {
    std::cout << text;
  } else {
    std::ofstream out(a.output);
    if (!out) throw gv::InputError("cannot write " + a.output);
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact robustness verification for message-passing graph neural networks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonArgs common;
  VerifyArgs vargs;
  gv::OracleLimits limits;
  bool oracle_force = false;
  int trials = 1000;
  std::string lp_objective = "full";

  auto* verify = app.add_subcommand("verify", "Verify target nodes and write a JSON report");
  add_model_graph(verify, common);
  add_spec(verify, common);
  add_targets(verify, common);
  verify->add_option("--mode", vargs.mode, "incremental | monolithic");
  verify->add_option("--objective", vargs.objective, "full | pairwise-next");
  verify->add_option("--bounds", vargs.bound_method, "tightened | plain");
  verify->add_option("--time-limit", vargs.time_limit, "Seconds per task (default 300)");
  verify->add_option("--node-limit", vargs.node_limit, "Branch-and-bound node limit per solve");
  verify->add_option("--workers", vargs.workers, "Parallel tasks (default 1)");
  verify->add_option("--sweep", vargs.sweep, "Comma-separated global budgets for a verdict sweep");
  verify->add_flag("--force", vargs.force, "Also verify misclassified targets");
  verify->add_option("-o,--output", common.output, "Report path (default stdout)");

  auto* bounds = app.add_subcommand("bounds", "Per-layer bound gaps, tightened vs plain");
  add_model_graph(bounds, common);
  add_spec(bounds, common);
  add_targets(bounds, common);
  bounds->add_option("-o,--output", common.output, "Output path (default stdout)");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive structural verification");
  add_model_graph(oracle, common);
  add_spec(oracle, common);
  add_targets(oracle, common);
  oracle->add_option("--max-fragile", limits.max_fragile, "Fragile pair limit (default 25)");
  oracle->add_option("--max-delta", limits.max_budget, "Global budget limit (default 6)");
  oracle->add_flag("--force", oracle_force, "Also check misclassified targets");
  oracle->add_option("-o,--output", common.output, "Report path (default stdout)");

  auto* attack = app.add_subcommand("attack", "Random falsification search");
  add_model_graph(attack, common);
  add_spec(attack, common);
  add_targets(attack, common);
  attack->add_option("--trials", trials, "Samples per target (default 1000)");
  attack->add_option("-o,--output", common.output, "Report path (default stdout)");

  auto* predict = app.add_subcommand("predict", "Print predicted class and logits");
  add_model_graph(predict, common);
  add_targets(predict, common);
  predict->add_option("--seed", common.seed, "Seed for sampled targets");
  predict->add_option("-o,--output", common.output, "Output path (default stdout)");

  auto* export_lp = app.add_subcommand("export-lp", "Write the full MILP of one task in LP format");
  add_model_graph(export_lp, common);
  add_spec(export_lp, common);
  export_lp->add_option("--target", common.targets, "Target node")->required();
  export_lp->add_option("--objective", lp_objective, "full | pairwise-next");
  export_lp->add_option("-o,--output", common.output, "LP path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify) return run_verify(common, vargs);
    if (*bounds) return run_bounds(common);
    if (*oracle) return run_oracle(common, limits, oracle_force);
    if (*attack) {
      if (trials < 1) throw gv::InputError("--trials must be >= 1");
      return run_attack(common, trials);
    }
    if (*predict) return run_predict(common);
    if (*export_lp) return run_export_lp(common, lp_objective);
  } catch (const gv::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 3;
}
