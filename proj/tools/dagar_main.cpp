// Command-line front end: build precision matrices, run the verification
// suites, trace correlation curves, fit hierarchical models, and drive the
// simulation experiment sweep. Every run writes a manifest recording the
// resolved configuration and seed; rerunning from the manifest reproduces
// the numeric outputs at a fixed thread count.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dagar/dagar.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerification = 4;

std::string version_string() {
#ifdef DAGAR_VERSION
  return DAGAR_VERSION;
#else
  return "dev";
#endif
}

struct GraphSpec {
  std::string spec = "grid:10x10";
  std::string coords_file;
  std::string data_dir;
};

struct ResolvedGraph {
  std::string name;
  dagar::Graph graph;
  std::optional<dagar::Embedding> embedding;
};

GraphSpec with_data_dir(GraphSpec gs, const std::string& dir) {
  gs.data_dir = dir;
  return gs;
}

ResolvedGraph resolve_graph(const GraphSpec& gs) {
  using namespace dagar;
  ResolvedGraph out;
  const std::string& s = gs.spec;
  if (s.rfind("path:", 0) == 0) {
    const int k = std::stoi(s.substr(5));
    auto [g, emb] = path_graph(k);
    out = {"path" + std::to_string(k), std::move(g), std::move(emb)};
  } else if (s.rfind("grid:", 0) == 0) {
    const std::string dims = s.substr(5);
    const auto x = dims.find('x');
    if (x == std::string::npos)
      throw validation_error("grid spec must look like grid:10x10, got '" + s + "'");
    const int m = std::stoi(dims.substr(0, x));
    const int n = std::stoi(dims.substr(x + 1));
    auto [g, emb] = grid_graph(m, n);
    out = {"grid" + std::to_string(m) + "x" + std::to_string(n), std::move(g), std::move(emb)};
  } else if (s == "us48") {
    UsGraph us = load_us48(gs.data_dir);
    out = {"us48", std::move(us.graph), std::move(us.embedding)};
  } else if (s.rfind("file:", 0) == 0) {
    const std::string path = s.substr(5);
    out.name = path;
    out.graph = read_edge_list(path);
    if (!gs.coords_file.empty())
      out.embedding = read_embedding(gs.coords_file, out.graph.k());
  } else {
    throw validation_error("unknown graph spec '" + s +
                           "' (expected path:K, grid:MxN, us48, or file:PATH)");
  }
  if (out.embedding && !gs.coords_file.empty() && s.rfind("file:", 0) != 0)
    out.embedding = read_embedding(gs.coords_file, out.graph.k());
  return out;
}

dagar::Ordering resolve_ordering(const ResolvedGraph& rg, const std::string& order, int root_1based) {
  using namespace dagar;
  if (order == "left") return identity_ordering(rg.graph);
  if (order == "right") return reverse_ordering(rg.graph);
  if (order == "bfs") return tree_traversal_ordering(rg.graph, root_1based - 1);
  if (order == "sum-inc" || order == "sum-dec" || order == "diff-inc" || order == "diff-dec") {
    if (!rg.embedding)
      throw validation_error("ordering '" + order + "' needs vertex coordinates (--coords)");
    const CoordKey key = order.rfind("sum", 0) == 0 ? CoordKey::sum : CoordKey::difference;
    const CoordDir dir = order.size() >= 3 && order.substr(order.size() - 3) == "inc"
                             ? CoordDir::increasing
                             : CoordDir::decreasing;
    return coordinate_sum_ordering(*rg.embedding, rg.graph, key, dir);
  }
  throw validation_error("unknown ordering '" + order + "'");
}

std::string default_order(const ResolvedGraph& rg) {
  return rg.embedding ? "sum-inc" : "left";
}

void write_manifest(const std::string& primary_output, const std::string& command,
                    const json& config, std::uint64_t seed, double seconds,
                    const std::vector<std::string>& outputs) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  m["versions"] = {{"dagar", version_string()}};
  m["timings"] = {{"seconds", seconds}};
  m["outputs"] = outputs;
  std::ofstream out(primary_output + ".manifest.json");
  out << m.dump(2) << "\n";
}

json summary_to_json(const dagar::PosteriorSummary& s) {
  json out;
  out["parameters"] = json::object();
  for (const auto& p : s.scalars)
    out["parameters"][p.name] = {{"median", p.median}, {"lower", p.lower},
                                 {"upper", p.upper},   {"mean", p.mean},
                                 {"ess", p.ess}};
  out["w"] = json::array();
  for (const auto& p : s.w)
    out["w"].push_back({{"name", p.name}, {"median", p.median}, {"lower", p.lower},
                        {"upper", p.upper}, {"mean", p.mean}});
  return out;
}

json report_to_json(const dagar::verify::SuiteReport& r) {
  json out;
  out["suite"] = r.suite;
  out["pass"] = r.pass();
  out["seconds"] = r.seconds;
  out["checks"] = json::array();
  for (const auto& c : r.checks)
    out["checks"].push_back({{"name", c.name},
                             {"pass", c.pass},
                             {"observed", c.observed},
                             {"bound", c.bound},
                             {"note", c.note}});
  return out;
}

// ---------------------------------------------------------------------------

int cmd_build(const GraphSpec& gs, const std::string& model, double rho, bool improper,
              const std::string& order_flag, int root, bool allow_islands,
              const std::string& out_path, std::uint64_t seed) {
  using namespace dagar;
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedGraph rg = resolve_graph(gs);
  ModelKind kind = model_kind_from_string(model);
  if (kind == ModelKind::car_proper && improper) kind = ModelKind::car_improper;
  if (kind != ModelKind::car_improper) check_rho(rho, "build");

  std::optional<Ordering> ord;
  if (kind == ModelKind::dagar) {
    const std::string order = order_flag.empty() ? default_order(rg) : order_flag;
    ord = resolve_ordering(rg, order, root);
  }
  const SparseSymmetric q = build_precision(kind, rg.graph, ord, rho, allow_islands);
  write_triplets(out_path, q);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json cfg = {{"graph", gs.spec},   {"model", to_string(kind)}, {"rho", rho},
              {"order", order_flag.empty() ? (kind == ModelKind::dagar ? default_order(rg) : "")
                                           : order_flag},
              {"allow_islands", allow_islands}, {"out", out_path},
              {"k", rg.graph.k()}, {"nnz", q.nnz_stored()}};
  write_manifest(out_path, "build", cfg, seed, secs, {out_path});
  std::cout << "wrote " << out_path << " (k=" << rg.graph.k() << ", nnz=" << q.nnz_stored()
            << ")\n";
  return kExitOk;
}

int cmd_verify(const std::string& suite, int trees, int max_k, int exhaustive_k,
               std::vector<double> rhos, int random_graphs, int path_k, int grid_m,
               int grid_cols, int threads, std::uint64_t seed, const std::string& report_path,
               const std::string& data_dir) {
  using namespace dagar;
  std::vector<verify::SuiteReport> reports;
  const std::vector<double> default_rhos = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const std::vector<double> used = rhos.empty() ? default_rhos : rhos;
  auto want = [&](const std::string& s) { return suite == "all" || suite == s; };
  if (want("tree")) reports.push_back(verify::tree_suite(trees, max_k, used, seed));
  if (want("grid")) reports.push_back(verify::grid_suite(grid_m, grid_cols, used));
  if (want("orderfree"))
    reports.push_back(verify::orderfree_suite(exhaustive_k, random_graphs,
                                              rhos.empty() ? std::vector<double>{0.25, 0.5, 0.9}
                                                           : rhos,
                                              seed, threads));
  if (want("frobenius"))
    reports.push_back(verify::frobenius_suite(path_k, grid_m == 10 ? 60 : grid_m,
                                              rhos.empty() ? std::vector<double>{0.25, 0.5, 0.75}
                                                           : rhos));
  if (want("ldl")) reports.push_back(verify::ldl_suite(data_dir));
  if (reports.empty())
    throw validation_error("unknown suite '" + suite +
                           "' (expected tree, grid, orderfree, frobenius, ldl, all)");

  bool all_pass = true;
  json jr = json::array();
  for (const auto& r : reports) {
    for (const auto& c : r.checks) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << r.suite << ": " << c.name
                << " (observed " << c.observed << ", bound " << c.bound << ")"
                << (c.note.empty() ? "" : "  -- " + c.note) << "\n";
      all_pass = all_pass && c.pass;
    }
    jr.push_back(report_to_json(r));
  }
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << jr.dump(2) << "\n";
  }
  return all_pass ? kExitOk : kExitVerification;
}

int cmd_curve(const std::vector<std::string>& graph_specs, const std::vector<std::string>& models,
              std::vector<double> rhos, const std::string& out_path, const std::string& order_flag,
              const std::string& data_dir, std::uint64_t seed) {
  using namespace dagar;
  const auto t0 = std::chrono::steady_clock::now();
  if (rhos.empty())
    for (int i = 1; i <= 9; ++i) rhos.push_back(i / 10.0);
  std::vector<std::string> outputs;
  for (const auto& spec : graph_specs) {
    GraphSpec gs;
    gs.spec = spec;
    gs.data_dir = data_dir;
    const ResolvedGraph rg = resolve_graph(gs);
    if (rg.graph.k() > 2000)
      throw validation_error("curve: graph too large for dense inversion (k > 2000)");
    std::string path = out_path;
    if (graph_specs.size() > 1) {
      const auto dot = path.rfind('.');
      const std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
      const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
      std::string tag = rg.name;
      for (char& c : tag)
        if (c == '/' || c == '\\' || c == ':') c = '_';
      path = stem + "_" + tag + ext;
    }
    std::ofstream out(path);
    if (!out) throw validation_error("cannot open '" + path + "' for writing");
    out << "rho,model,value\n";
    for (const auto& model : models) {
      const ModelKind kind = model_kind_from_string(model);
      if (kind == ModelKind::car_improper)
        throw validation_error("curve: improper CAR has no correlation curve (singular)");
      std::optional<Ordering> ord;
      if (kind == ModelKind::dagar)
        ord = resolve_ordering(rg, order_flag.empty() ? default_order(rg) : order_flag, 1);
      for (double rho : rhos) {
        const double c = avg_neighbor_correlation(
            build_precision(kind, rg.graph, ord, rho).to_dense(), rg.graph);
        out << fmt17(rho) << ',' << to_string(kind) << ',' << fmt17(c) << '\n';
      }
    }
    outputs.push_back(path);
    std::cout << "wrote " << path << "\n";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json cfg = {{"graphs", graph_specs}, {"models", models}, {"rho", rhos}, {"out", out_path}};
  write_manifest(out_path, "curve", cfg, seed, secs, outputs);
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const GraphSpec& gs, const std::string& model,
            const std::string& link_name, const std::string& order_flag, int root,
            bool intercept, bool allow_islands, dagar::MCMCConfig cfg, dagar::Priors priors,
            const std::string& out_prefix, bool run_loo, int threads) {
  using namespace dagar;
  const auto t0 = std::chrono::steady_clock::now();
  const ResolvedGraph rg = resolve_graph(gs);
  const Link link = link_name == "log" ? Link::log
                    : link_name == "identity"
                        ? Link::identity
                        : throw validation_error("link must be identity or log");
  const Dataset ds = read_dataset_csv(data_path, rg.graph.k(), link);

  ModelSpec spec;
  spec.kind = model_kind_from_string(model);
  spec.graph = rg.graph;
  spec.link = link;
  spec.allow_disconnected = allow_islands;
  if (spec.kind == ModelKind::dagar)
    spec.ordering = resolve_ordering(rg, order_flag.empty() ? default_order(rg) : order_flag, root);
  const int p_data = static_cast<int>(ds.X.cols());
  if (intercept) {
    spec.X.resize(rg.graph.k(), p_data + 1);
    spec.X.col(0).setOnes();
    if (p_data > 0) spec.X.rightCols(p_data) = ds.X;
  } else {
    spec.X = ds.X;
  }
  if (link == Link::log) spec.offsets = ds.expected;

  const ChainOutput chain = link == Link::identity
                                ? fit_gaussian(ds.response, spec, priors, cfg)
                                : fit_poisson(ds.response, spec, priors, cfg);
  // rename columns: intercept (if any) then data covariate names
  ChainOutput named = chain;
  {
    int j = 0;
    if (intercept) named.scalar_names[j++] = "b_intercept";
    for (const auto& nm : ds.covariate_names) named.scalar_names[j++] = "b_" + nm;
  }
  const std::string trace_path = out_prefix + "_trace.csv";
  const std::string w_path = out_prefix + "_w.csv";
  const std::string summary_path = out_prefix + "_summary.json";
  write_trace_csv(trace_path, named);
  write_w_csv(w_path, named);

  json js = summary_to_json(posterior_summary(named));
  js["dic"] = dic(named);
  js["acceptance"] = named.acceptance;
  js["seed"] = cfg.seed;
  js["model"] = to_string(spec.kind);
  js["link"] = link_name;
  js["draws"] = named.n_draws();
  if (run_loo) {
    if (rg.graph.k() > 250)
      std::cerr << "warning: leave-one-out over " << rg.graph.k()
                << " regions refits the model that many times; this will be slow\n";
    LooOptions loo_opt;
    loo_opt.threads = threads;
    js["loo_lppd"] = loo_lppd(ds.response, spec, priors, cfg, loo_opt);
  }
  {
    std::ofstream out(summary_path);
    out << js.dump(2) << "\n";
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json jc = {{"data", data_path},   {"graph", gs.spec},       {"model", model},
             {"link", link_name},   {"order", order_flag},    {"intercept", intercept},
             {"iterations", cfg.iterations}, {"burn_in", cfg.burn_in}, {"thin", cfg.thin},
             {"loo", run_loo}};
  write_manifest(summary_path, "fit", jc, cfg.seed, secs, {trace_path, w_path, summary_path});
  std::cout << "wrote " << trace_path << ", " << w_path << ", " << summary_path << "\n";
  return kExitOk;
}

dagar::ExperimentConfig parse_experiment_config(const json& j_in, const std::string& data_dir) {
  using namespace dagar;
  // accept either a plain config or a manifest wrapping one under "config"
  const json& j = j_in.contains("command") && j_in.contains("config") ? j_in.at("config") : j_in;
  ExperimentConfig cfg;
  cfg.mcmc = make_desk_mcmc();
  for (const auto& g : j.at("graphs")) {
    GraphSpec gs;
    if (g.is_string()) {
      const std::string name = g.get<std::string>();
      if (name == "path100") gs.spec = "path:100";
      else if (name == "grid10") gs.spec = "grid:10x10";
      else if (name == "us48") gs.spec = "us48";
      else gs.spec = name;  // raw path:/grid:/file: spec
    } else {
      gs.spec = "file:" + g.at("edges").get<std::string>();
      gs.coords_file = g.at("coords").get<std::string>();
    }
    gs.data_dir = data_dir;
    ResolvedGraph rg = resolve_graph(gs);
    if (!rg.embedding)
      throw validation_error("experiment graphs need embeddings (coordinates)");
    cfg.graphs.push_back({rg.name, std::move(rg.graph), std::move(*rg.embedding)});
  }
  if (j.contains("rho_grid")) cfg.rho_grid = j.at("rho_grid").get<std::vector<double>>();
  if (j.contains("noise_ratios"))
    cfg.noise_ratios = j.at("noise_ratios").get<std::vector<double>>();
  if (j.contains("tau_w")) cfg.tau_w = j.at("tau_w").get<double>();
  if (j.contains("beta")) {
    const auto b = j.at("beta").get<std::vector<double>>();
    cfg.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  }
  if (j.contains("models")) {
    cfg.models.clear();
    for (const auto& m : j.at("models"))
      cfg.models.push_back(model_kind_from_string(m.get<std::string>()));
  }
  if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
  if (j.contains("iterations")) cfg.mcmc.iterations = j.at("iterations").get<long>();
  if (j.contains("burn_in")) cfg.mcmc.burn_in = j.at("burn_in").get<long>();
  if (j.contains("thin")) cfg.mcmc.thin = j.at("thin").get<long>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("field_matrix_is_precision"))
    cfg.field_matrix_is_precision = j.at("field_matrix_is_precision").get<bool>();
  return cfg;
}

int cmd_experiment(const std::string& config_path, const std::string& out_path, int threads_flag,
                   const std::string& data_dir) {
  using namespace dagar;
  const auto t0 = std::chrono::steady_clock::now();
  json jcfg;
  {
    std::ifstream in(config_path);
    if (!in) throw validation_error("cannot open config '" + config_path + "'");
    in >> jcfg;
  }
  ExperimentConfig cfg = parse_experiment_config(jcfg, data_dir);
  if (threads_flag > 0) cfg.threads = threads_flag;
  const ExperimentResult result = run_experiment(cfg);

  std::ofstream out(out_path);
  if (!out) throw validation_error("cannot open '" + out_path + "' for writing");
  out << "graph,rho,r,model,replicate,mse,beta1,beta2,seconds\n";
  long failures = 0;
  for (const auto& c : result.cells) {
    out << c.graph << ',' << fmt17(c.rho) << ',' << fmt17(c.r) << ',' << to_string(c.model)
        << ',' << c.replicate << ',';
    if (c.ok) {
      out << fmt17(c.mse_w) << ','
          << (c.beta_estimate.size() > 0 ? fmt17(c.beta_estimate[0]) : "") << ','
          << (c.beta_estimate.size() > 1 ? fmt17(c.beta_estimate[1]) : "") << ','
          << fmt17(c.seconds) << '\n';
    } else {
      out << ",,," << fmt17(c.seconds) << '\n';
      std::cerr << "cell failed (" << c.graph << ", rho=" << c.rho << ", r=" << c.r << ", "
                << to_string(c.model) << ", rep " << c.replicate << "): " << c.error << "\n";
      ++failures;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  // strip graphs down to their resolvable names in the manifest echo
  json echo = jcfg.contains("config") ? jcfg.at("config") : jcfg;
  echo["threads"] = cfg.threads;
  write_manifest(out_path, "experiment", echo, cfg.seed, secs, {out_path});
  std::cout << "wrote " << out_path << " (" << result.cells.size() << " cells, " << failures
            << " failures)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse precision models on graphs (DAGAR, order-free DAGAR, CAR) and "
               "hierarchical Bayesian spatial regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  std::string data_dir;
  app.add_option("--data-dir", data_dir, "directory holding the bundled graph assets");

  int threads = [] {
    if (const char* env = std::getenv("DAGAR_THREADS"); env && *env) return std::atoi(env);
    return 0;
  }();
  app.add_option("--threads", threads, "worker thread cap (0 = hardware)");

  // --- build ---
  auto* build = app.add_subcommand("build", "assemble a precision matrix and write triplets");
  GraphSpec b_gs;
  std::string b_model = "dagar", b_order;
  double b_rho = 0.5;
  int b_root = 1;
  bool b_improper = false, b_islands = false;
  std::string b_out = "precision.txt";
  std::uint64_t b_seed = 0;
  build->add_option("--graph", b_gs.spec, "path:K | grid:MxN | us48 | file:PATH");
  build->add_option("--coords", b_gs.coords_file, "embedding file for file: graphs");
  build->add_option("--model", b_model, "dagar | dagar-of | car | icar");
  build->add_option("--rho", b_rho, "autocorrelation parameter in [0,1)");
  build->add_flag("--improper", b_improper, "improper CAR (rho pinned at 1)");
  build->add_option("--order", b_order,
                    "left | right | sum-inc | sum-dec | diff-inc | diff-dec | bfs");
  build->add_option("--root", b_root, "1-based root for bfs ordering");
  build->add_flag("--allow-islands", b_islands, "accept disconnected graphs (block diagonal)");
  build->add_option("--out", b_out, "output triplet file");
  build->add_option("--seed", b_seed, "recorded in the manifest");

  // --- verify ---
  auto* verify = app.add_subcommand("verify", "run the theorem-oracle suites");
  std::string v_suite = "all", v_report;
  int v_trees = 50, v_max_k = 50, v_exh_k = 5, v_random = 100, v_path_k = 2000, v_grid_m = 10,
      v_grid_n = 10;
  std::uint64_t v_seed = 20240809;
  std::vector<double> v_rhos;
  verify->add_option("--suite", v_suite, "tree | grid | orderfree | frobenius | ldl | all");
  verify->add_option("--trees", v_trees, "random trees for the tree suite");
  verify->add_option("--max-k", v_max_k, "max vertices for the tree suite");
  verify->add_option("--exhaustive-k", v_exh_k,
                     "orderfree suite: enumerate all connected graphs up to this size (<= 6)");
  verify->add_option("--rho", v_rhos, "rho values (repeatable)");
  verify->add_option("--random-graphs", v_random, "random graphs for the orderfree suite");
  verify->add_option("--path-k", v_path_k, "path length for the frobenius suite");
  verify->add_option("--grid-m", v_grid_m, "grid rows");
  verify->add_option("--grid-n", v_grid_n, "grid columns");
  verify->add_option("--seed", v_seed, "suite seed");
  verify->add_option("--report", v_report, "write a JSON report here");

  // --- curve ---
  auto* curve = app.add_subcommand("curve", "average neighbour-pair correlation curves");
  std::vector<std::string> c_graphs = {"path:100"};
  std::vector<std::string> c_models = {"dagar", "dagar-of", "car"};
  std::vector<double> c_rhos;
  std::string c_out = "curve.csv", c_order;
  std::uint64_t c_seed = 0;
  curve->add_option("--graph", c_graphs, "graph specs (repeatable)");
  curve->add_option("--model", c_models, "models (repeatable; car means proper CAR)");
  curve->add_option("--rho", c_rhos, "rho values (default 0.1..0.9)");
  curve->add_option("--order", c_order, "DAGAR ordering (default sum-inc given coordinates)");
  curve->add_option("--out", c_out, "output CSV (rho,model,value)");
  curve->add_option("--seed", c_seed, "recorded in the manifest");

  // --- fit ---
  auto* fit = app.add_subcommand("fit", "fit the hierarchical model by MCMC");
  GraphSpec f_gs;
  std::string f_data, f_model = "dagar", f_link = "identity", f_order, f_out = "fit";
  int f_root = 1;
  bool f_intercept = true, f_islands = false, f_loo = false;
  dagar::MCMCConfig f_cfg;
  dagar::Priors f_priors;
  bool f_gamma_scale = false;
  fit->add_option("--data", f_data, "dataset CSV (region,y,... or region,observed,expected,...)")
      ->required();
  fit->add_option("--graph", f_gs.spec, "path:K | grid:MxN | us48 | file:PATH");
  fit->add_option("--coords", f_gs.coords_file, "embedding file for file: graphs");
  fit->add_option("--model", f_model, "dagar | dagar-of | car | icar");
  fit->add_option("--link", f_link, "identity | log");
  fit->add_option("--order", f_order, "DAGAR ordering");
  fit->add_option("--root", f_root, "1-based root for bfs ordering");
  fit->add_flag("--intercept,!--no-intercept", f_intercept, "include an intercept column (default on)");
  fit->add_flag("--allow-islands", f_islands, "accept disconnected graphs");
  fit->add_option("--iterations", f_cfg.iterations, "MCMC iterations (default 100000)");
  fit->add_option("--burn-in", f_cfg.burn_in, "burn-in iterations (default 50000)");
  fit->add_option("--thin", f_cfg.thin, "thinning stride");
  fit->add_option("--seed", f_cfg.seed, "chain seed");
  fit->add_option("--rho-proposal-sd", f_cfg.rho_proposal_sd, "logit-scale proposal sd");
  fit->add_option("--beta-precision", f_priors.beta_precision, "prior precision of beta");
  fit->add_flag("--gamma-scale", f_gamma_scale,
                "interpret gamma prior second parameters as scales, not rates");
  fit->add_flag("--loo", f_loo, "also compute leave-one-out cross-validated lppd");
  fit->add_option("--out", f_out, "output prefix");

  // --- experiment ---
  auto* exp = app.add_subcommand("experiment", "replicate sweep over graphs/rho/noise/models");
  std::string e_config, e_out = "experiment.csv";
  exp->add_option("--config", e_config, "JSON config (or a previous manifest)")->required();
  exp->add_option("--out", e_out, "output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build)
      return cmd_build(with_data_dir(b_gs, data_dir), b_model, b_rho, b_improper, b_order, b_root,
                       b_islands, b_out, b_seed);
    if (*verify)
      return cmd_verify(v_suite, v_trees, v_max_k, v_exh_k, v_rhos, v_random, v_path_k,
                        v_grid_m, v_grid_n, threads > 0 ? threads : 1, v_seed, v_report,
                        data_dir);
    if (*curve) return cmd_curve(c_graphs, c_models, c_rhos, c_out, c_order, data_dir, c_seed);
    if (*fit) {
      f_priors.gamma_is_rate = !f_gamma_scale;
      return cmd_fit(f_data, with_data_dir(f_gs, data_dir), f_model, f_link, f_order, f_root,
                     f_intercept, f_islands, f_cfg, f_priors, f_out, f_loo, threads);
    }
    if (*exp) return cmd_experiment(e_config, e_out, threads, data_dir);
  } catch (const dagar::validation_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  } catch (const dagar::numerical_error& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
