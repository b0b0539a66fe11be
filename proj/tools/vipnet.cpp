// vipnet: slotted-time simulator and stability analyzer for joint
// dynamic forwarding and caching with scaled VIP counters.
//
// Subcommands:
//   validate   load topology + config, print the invariant report
//   run        single-point run over the configured policies
//   sweep      full (lambda, seed, policy) grid, aggregated CSV
//   stability  Theorem-style feasibility, load scaling and backlog bound

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vipnet/builtin_topologies.hpp"
#include "vipnet/config.hpp"
#include "vipnet/experiment.hpp"
#include "vipnet/stability.hpp"
#include "vipnet/topology.hpp"
#include "vipnet/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int seeds = -1;
  bool quiet = false;
};

vipnet::Config load_config(const CommonArgs& args) {
  vipnet::Config cfg;
  if (!args.config_path.empty())
    cfg = vipnet::Config::from_file(args.config_path);
  for (const auto& kv : args.overrides) cfg.apply_override(kv);
  return cfg;
}

vipnet::RunConfig make_run_config(const CommonArgs& args) {
  vipnet::Config cfg = load_config(args);
  vipnet::RunConfig rc = vipnet::RunConfig::from_config(cfg);
  if (args.seeds > 0) rc.seed_count = args.seeds;
  rc.out_dir = args.out_dir;
  return rc;
}

int cmd_validate(const CommonArgs& args) {
  vipnet::RunConfig rc = make_run_config(args);
  vipnet::Topology topo = rc.load();
  std::vector<std::string> warnings;
  topo.catalog.validate(topo.graph, &warnings);
  if (!args.quiet) {
    std::cout << "topology: " << rc.topology << "\n"
              << "nodes: " << topo.graph.node_count() << "\n"
              << "links: " << topo.graph.link_count() << "\n"
              << "objects: " << topo.catalog.object_count << "\n"
              << "object_bits: " << topo.catalog.object_size_bits << "\n"
              << "chunks_per_object: " << topo.catalog.chunks_per_object()
              << "\n"
              << "requesters: " << topo.graph.requesters().size() << "\n";
    std::uint64_t cache = topo.graph.cache_bits(1);
    std::cout << "cache_objects_node1: "
              << cache / topo.catalog.object_size_bits << "\n";
    std::cout << "reverse_link_closure: ok\n";
    std::cout << "sources_in_graph: ok\n";
    for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_run(const CommonArgs& args, bool full_sweep) {
  vipnet::RunConfig rc = make_run_config(args);
  if (!full_sweep && rc.lambda_grid.size() > 1)
    rc.lambda_grid.resize(1);
  auto cells =
      vipnet::run_experiment(rc, args.quiet ? nullptr : &std::cerr);
  auto rows = vipnet::aggregate(cells, rc);
  std::filesystem::create_directories(rc.out_dir);
  std::string path = rc.out_dir + "/results.csv";
  vipnet::emit_csv_file(rows, path);
  if (!args.quiet) {
    std::cout << "wrote " << path << " (" << rows.size() << " rows)\n";
    vipnet::emit_csv(rows, std::cout);
  }
  return kExitOk;
}

int cmd_stability(const CommonArgs& args) {
  vipnet::Config cfg = load_config(args);
  cfg.require_known({"topology", "cache_bits", "object_count", "cap_bits",
                     "object_bits", "chunk_bits", "interest_bits", "zipf",
                     "lambda", "theta.value", "eps", "r_default",
                     "source_seed", "enum_cap", "arrival_cap"});
  vipnet::Config rcfg = cfg;  // reuse the run-config loader for topology keys
  vipnet::RunConfig rc;
  rc.topology = cfg.get("topology", "abilene");
  rc.cache_bits = cfg.get_u64("cache_bits", 0);
  rc.object_count = static_cast<int>(cfg.get_long("object_count", 4));
  rc.cap_bits = cfg.get_u64("cap_bits", 500000000ULL);
  rc.object_size_bits = cfg.get_u64("object_bits", 40000000ULL);
  rc.chunk_size_bits = cfg.get_u64("chunk_bits", 400000ULL);
  rc.interest_size_bits = cfg.get_u64("interest_bits", 1000ULL);
  rc.zipf = cfg.get_double("zipf", 0.75);
  rc.read_rate = cfg.get_double("r_default", 1.0);
  rc.source_seed = cfg.get_u64("source_seed", 1);
  double lambda = cfg.get_double("lambda", 1.0);
  double theta = cfg.get_double("theta.value", 1.0);
  double eps = cfg.get_double("eps", 0.0);
  std::uint64_t enum_cap = cfg.get_u64("enum_cap", 1000000);

  vipnet::Topology topo = rc.load();
  const int N = topo.graph.node_count();
  const int K = topo.catalog.object_count;
  auto pmf = vipnet::zipf_pmf(K, rc.zipf);
  std::vector<std::vector<double>> lam(N + 1, std::vector<double>(K + 1, 0.0));
  for (vipnet::NodeId n : topo.graph.requesters())
    for (vipnet::ObjId k = 1; k <= K; ++k) lam[n][k] = lambda * pmf[k - 1];

  auto inst = vipnet::StabilityInstance::uniform_theta(topo.graph,
                                                       topo.catalog, lam,
                                                       theta);
  auto res = vipnet::check_feasibility(inst, eps, enum_cap);
  std::string verdict;
  switch (res.outcome) {
    case vipnet::FeasibilityOutcome::Feasible: verdict = "Feasible"; break;
    case vipnet::FeasibilityOutcome::Infeasible: verdict = "Infeasible"; break;
    case vipnet::FeasibilityOutcome::SolverFailure:
      std::cerr << "ERROR 3: LP solver failure (not an infeasibility)\n";
      return kExitRuntime;
  }
  double rho = vipnet::max_load_scaling(inst, 1e-4, enum_cap);

  double arrival_cap = cfg.get_double(
      "arrival_cap", std::ceil(lambda + 6.0 * std::sqrt(lambda)));
  std::vector<double> amax(N + 1, 0.0);
  for (vipnet::NodeId n : topo.graph.requesters()) amax[n] = arrival_cap;
  double bound_eps = eps > 0 ? eps : 0.1 * rho * lambda;
  auto report = vipnet::lyapunov_bound(topo.graph, topo.catalog, amax,
                                       inst.theta, bound_eps);

  std::cout << "verdict: " << verdict << " (slack eps=" << eps << ")\n";
  std::cout << "rho_star: " << rho << "\n";
  if (res.outcome == vipnet::FeasibilityOutcome::Feasible) {
    double fmass = 0;
    for (const auto& row : res.solution.f)
      for (double x : row) fmass += x;
    std::cout << "certificate: total flow " << fmass
              << " obj/slot, max violation "
              << vipnet::certificate_violation(inst, res.solution, eps)
              << "\n";
  }
  std::cout << "bound: B=" << report.B << " eps=" << report.epsilon
            << " NB/eps=" << report.bound << "\n";
  // machine-readable row
  std::cout << "RESULT " << rc.topology << " " << lambda << " " << theta << " "
            << verdict << " " << rho << " " << report.B << " " << report.bound
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scaled-VIP forwarding/caching simulator and analyzer"};
  app.require_subcommand(1);
  CommonArgs args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "config file (key = value)");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_option("--set", args.overrides, "override key=value (repeatable)");
    sub->add_option("--seeds", args.seeds, "number of seeds");
    sub->add_flag("--quiet", args.quiet, "suppress progress output");
  };

  CLI::App* validate = app.add_subcommand("validate", "check inputs");
  CLI::App* run = app.add_subcommand("run", "single-point run");
  CLI::App* sweep = app.add_subcommand("sweep", "full lambda grid");
  CLI::App* stability = app.add_subcommand("stability", "region analysis");
  for (CLI::App* s : {validate, run, sweep, stability}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "ERROR 1: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(args);
    if (run->parsed()) return cmd_run(args, false);
    if (sweep->parsed()) return cmd_run(args, true);
    if (stability->parsed()) return cmd_stability(args);
    std::cerr << "ERROR 1: no subcommand\n";
    return kExitUsage;
  } catch (const vipnet::ConfigError& e) {
    std::cerr << "ERROR 2: " << e.what() << "\n";
    return kExitValidation;
  } catch (const vipnet::TopologyError& e) {
    std::cerr << "ERROR 2: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "ERROR 3: " << e.what() << "\n";
    return kExitRuntime;
  }
}
