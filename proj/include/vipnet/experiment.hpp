#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vipnet/aplane.hpp"
#include "vipnet/builtin_topologies.hpp"
#include "vipnet/config.hpp"
#include "vipnet/topology.hpp"
#include "vipnet/vplane.hpp"
#include "vipnet/workload.hpp"

namespace vipnet {

struct ExperimentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A named policy cell: actual-plane policy plus the theta configuration
// driving its virtual plane (when it has one).
struct ExperimentPolicy {
  std::string name;
  PolicySpec spec;
  bool uses_vplane = false;
  ThetaMode theta_mode = ThetaMode::Constant;
  double theta_value = 1.0;
  double theta_beta = 0.125;
};

inline ExperimentPolicy policy_by_name(const std::string& name,
                                       int mapping_window = 64) {
  ExperimentPolicy p;
  p.name = name;
  p.spec.mapping_window = mapping_window;
  auto vip = [&](ThetaMode m, double v) {
    p.spec.forwarding = ForwardingPolicy::VipMapped;
    p.spec.caching = CachingPolicy::VipMapped;
    p.uses_vplane = true;
    p.theta_mode = m;
    p.theta_value = v;
  };
  if (name == "nvip-ema") {
    vip(ThetaMode::Ema, 1.0);
  } else if (name == "nvip-t2") {
    vip(ThetaMode::Constant, 2.0);
  } else if (name == "nvip-t4") {
    vip(ThetaMode::Constant, 4.0);
  } else if (name == "vip") {
    vip(ThetaMode::Constant, 1.0);
  } else if (name == "sp-lce-lru") {
    p.spec = {ForwardingPolicy::ShortestPath, CachingPolicy::LceLru};
  } else if (name == "sp-lcd-lru") {
    p.spec = {ForwardingPolicy::ShortestPath, CachingPolicy::LcdLru};
  } else if (name == "sp-lfu") {
    p.spec = {ForwardingPolicy::ShortestPath, CachingPolicy::Lfu};
  } else if (name == "sp-lce-unif") {
    p.spec = {ForwardingPolicy::ShortestPath, CachingPolicy::LceUnif};
  } else if (name == "sp-lce-bias") {
    p.spec = {ForwardingPolicy::ShortestPath, CachingPolicy::LceBias};
  } else if (name == "pot-lce-lru") {
    p.spec = {ForwardingPolicy::PotentialBased, CachingPolicy::LceLru};
  } else {
    throw ExperimentError("unknown policy name: " + name);
  }
  return p;
}

// The eight-policy roster used by the full sweeps.
inline std::vector<std::string> default_policy_names() {
  return {"nvip-ema", "nvip-t2", "nvip-t4",   "vip",
          "sp-lce-lru", "sp-lcd-lru", "sp-lfu", "pot-lce-lru"};
}

struct RunConfig {
  std::string topology = "abilene";  // builtin name or file path
  std::uint64_t cache_bits = 0;      // 0 = topology default
  int object_count = 3000;
  std::uint64_t cap_bits = 500000000ULL;
  std::uint64_t object_size_bits = 40000000ULL;
  std::uint64_t chunk_size_bits = 400000ULL;
  std::uint64_t interest_size_bits = 1000ULL;
  double zipf = 0.75;
  std::vector<double> lambda_grid = {10};
  long horizon = 10000;
  int seed_count = 10;
  std::uint64_t seed_base = 1;
  std::uint64_t source_seed = 1;
  double read_rate = 1.0;
  int mapping_window = 64;
  double theta_beta = 0.125;
  std::vector<std::string> policy_names = default_policy_names();
  std::string out_dir = ".";
  bool truncate_arrivals = false;
  std::string theta_mode_override;    // "", "constant" or "ema"
  double theta_value_override = -1;   // < 0 = no override

  static const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "topology",      "cache_bits",    "object_count", "cap_bits",
        "object_bits",   "chunk_bits",    "interest_bits", "zipf",
        "lambda",        "horizon",       "seeds",        "seed_base",
        "source_seed",   "r_default",     "mapping.window", "theta.mode",
        "theta.value",   "theta.beta",    "policies",     "out",
        "truncate_arrivals"};
    return keys;
  }

  static RunConfig from_config(const Config& cfg) {
    cfg.require_known(known_keys());
    RunConfig rc;
    rc.topology = cfg.get("topology", rc.topology);
    rc.cache_bits = cfg.get_u64("cache_bits", rc.cache_bits);
    rc.object_count = static_cast<int>(cfg.get_long("object_count", rc.object_count));
    rc.cap_bits = cfg.get_u64("cap_bits", rc.cap_bits);
    rc.object_size_bits = cfg.get_u64("object_bits", rc.object_size_bits);
    rc.chunk_size_bits = cfg.get_u64("chunk_bits", rc.chunk_size_bits);
    rc.interest_size_bits = cfg.get_u64("interest_bits", rc.interest_size_bits);
    rc.zipf = cfg.get_double("zipf", rc.zipf);
    rc.lambda_grid = cfg.get_double_list("lambda", rc.lambda_grid);
    rc.horizon = cfg.get_long("horizon", rc.horizon);
    rc.seed_count = static_cast<int>(cfg.get_long("seeds", rc.seed_count));
    rc.seed_base = cfg.get_u64("seed_base", rc.seed_base);
    rc.source_seed = cfg.get_u64("source_seed", rc.source_seed);
    rc.read_rate = cfg.get_double("r_default", rc.read_rate);
    rc.mapping_window =
        static_cast<int>(cfg.get_long("mapping.window", rc.mapping_window));
    rc.theta_beta = cfg.get_double("theta.beta", rc.theta_beta);
    rc.policy_names = cfg.get_string_list("policies", rc.policy_names);
    rc.out_dir = cfg.get("out", rc.out_dir);
    rc.truncate_arrivals = cfg.get_bool("truncate_arrivals", false);
    rc.theta_mode_override = cfg.get("theta.mode", "");
    if (!rc.theta_mode_override.empty() && rc.theta_mode_override != "ema" &&
        rc.theta_mode_override != "constant")
      throw ConfigError("theta.mode must be 'constant' or 'ema'");
    rc.theta_value_override = cfg.get_double("theta.value", -1);
    return rc;
  }

  Topology load() const {
    BuiltinOptions opt;
    opt.cache_size_bits = cache_bits;
    opt.object_count = object_count;
    opt.cap_bits = cap_bits;
    opt.object_size_bits = object_size_bits;
    opt.chunk_size_bits = chunk_size_bits;
    opt.interest_size_bits = interest_size_bits;
    opt.read_rate = read_rate;
    opt.source_seed = source_seed;
    if (topology == "service" || topology == "abilene" || topology == "geant" ||
        topology == "dtelekom")
      return builtin(topology_name_from_string(topology), opt);
    return load_topology(topology, source_seed);
  }
};

// One (lambda, seed, policy) cell result.
struct CellMetrics {
  std::string policy;
  double lambda = 0;
  std::uint64_t seed = 0;
  double total_chunk_delay = 0;
  long fulfilled = 0;
  long unfulfilled = 0;
  double total_object_delay = 0;
  double mean_backlog = 0;  // time-average of sum V (0 for baselines)
  double cache_hit_rate = 0;
};

inline CellMetrics run_cell(const NetworkGraph& graph,
                            const ObjectCatalog& cat, const RunConfig& rc,
                            const ExperimentPolicy& pol, double lambda,
                            std::uint64_t seed) {
  DemandModel demand(graph, cat.object_count, lambda, rc.zipf, seed, -1.0,
                     rc.truncate_arrivals);
  std::optional<VirtualPlane> vp;
  if (pol.uses_vplane) {
    ThetaPolicy theta =
        pol.theta_mode == ThetaMode::Ema
            ? ThetaPolicy::ema(graph.node_count(), cat.object_count,
                               pol.theta_beta)
            : ThetaPolicy::constant(graph.node_count(), cat.object_count,
                                    pol.theta_value);
    vp.emplace(graph, cat, std::move(theta));
  }
  PacketWorld world(graph, cat, pol.spec, seed ^ 0x9e3779b97f4a7c15ULL,
                    vp ? &*vp : nullptr);
  double backlog_sum = 0;
  for (long t = 1; t <= rc.horizon; ++t) {
    world.step(demand.sample_arrivals(t));
    if (vp) backlog_sum += vp->state().total();
  }
  world.finalize();
  const AplaneMetrics& m = world.metrics();
  CellMetrics cm;
  cm.policy = pol.name;
  cm.lambda = lambda;
  cm.seed = seed;
  cm.total_chunk_delay = m.total_chunk_delay;
  cm.fulfilled = m.chunk_interests_fulfilled;
  cm.unfulfilled = m.chunk_interests_open;
  cm.total_object_delay = m.total_object_delay;
  cm.mean_backlog = vp ? backlog_sum / rc.horizon : 0.0;
  cm.cache_hit_rate = m.cache_hit_rate();
  return cm;
}

// Runs the full (lambda, seed, policy) grid.  Cells are independent jobs;
// VIPNET_THREADS caps worker concurrency (default 1).  Results come back
// in deterministic sorted cell order regardless of scheduling.
inline std::vector<CellMetrics> run_experiment(const RunConfig& rc,
                                               std::ostream* progress = nullptr) {
  Topology topo = rc.load();
  std::vector<ExperimentPolicy> pols;
  for (const auto& name : rc.policy_names) {
    ExperimentPolicy p = policy_by_name(name, rc.mapping_window);
    p.theta_beta = rc.theta_beta;
    if (p.uses_vplane && !rc.theta_mode_override.empty())
      p.theta_mode = rc.theta_mode_override == "ema" ? ThetaMode::Ema
                                                     : ThetaMode::Constant;
    if (p.uses_vplane && rc.theta_value_override >= 1)
      p.theta_value = rc.theta_value_override;
    pols.push_back(std::move(p));
  }

  struct Job {
    int pol;
    double lambda;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double lam : rc.lambda_grid)
    for (size_t pi = 0; pi < pols.size(); ++pi)
      for (int s = 0; s < rc.seed_count; ++s)
        jobs.push_back({static_cast<int>(pi), lam, rc.seed_base + s});

  int threads = 1;
  if (const char* env = std::getenv("VIPNET_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  threads = std::min<int>(threads, static_cast<int>(jobs.size()));

  std::vector<CellMetrics> results(jobs.size());
  std::atomic<size_t> next{0};
  std::atomic<size_t> done{0};
  std::mutex io_mu;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const Job& j = jobs[i];
      results[i] = run_cell(topo.graph, topo.catalog, rc, pols[j.pol],
                            j.lambda, j.seed);
      size_t d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lk(io_mu);
        *progress << "cell " << d << "/" << jobs.size() << " "
                  << pols[j.pol].name << " lambda=" << j.lambda
                  << " seed=" << j.seed << "\n";
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return results;
}

// Aggregated over seeds for one (lambda, policy).
struct SummaryRow {
  std::string topology;
  std::string policy;
  std::string theta_mode;
  double theta_value = 0;
  double lambda = 0;
  int seed_count = 0;
  double mean_total_delay = 0;
  double stddev = 0;  // sample (n-1)
  double mean_backlog = 0;
  double cache_hit_rate = 0;
};

inline std::vector<SummaryRow> aggregate(const std::vector<CellMetrics>& cells,
                                         const RunConfig& rc) {
  std::map<std::pair<double, std::string>, std::vector<const CellMetrics*>>
      groups;
  for (const auto& c : cells) groups[{c.lambda, c.policy}].push_back(&c);
  std::vector<SummaryRow> rows;
  for (auto& [key, group] : groups) {
    SummaryRow r;
    r.topology = rc.topology;
    r.policy = key.second;
    ExperimentPolicy p = policy_by_name(key.second, rc.mapping_window);
    r.theta_mode = p.uses_vplane
                       ? (p.theta_mode == ThetaMode::Ema ? "ema" : "constant")
                       : "none";
    r.theta_value = p.uses_vplane && p.theta_mode == ThetaMode::Constant
                        ? p.theta_value
                        : 0.0;
    r.lambda = key.first;
    r.seed_count = static_cast<int>(group.size());
    double sum = 0, sum_backlog = 0, sum_hit = 0;
    for (auto* c : group) {
      sum += c->total_chunk_delay;
      sum_backlog += c->mean_backlog;
      sum_hit += c->cache_hit_rate;
    }
    r.mean_total_delay = sum / group.size();
    r.mean_backlog = sum_backlog / group.size();
    r.cache_hit_rate = sum_hit / group.size();
    if (group.size() > 1) {
      double ss = 0;
      for (auto* c : group) {
        double d = c->total_chunk_delay - r.mean_total_delay;
        ss += d * d;
      }
      r.stddev = std::sqrt(ss / (group.size() - 1));
    }
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end(), [](const SummaryRow& a,
                                         const SummaryRow& b) {
    return std::tie(a.lambda, a.policy) < std::tie(b.lambda, b.policy);
  });
  return rows;
}

// (delay_b - delay_a) / delay_b: the fraction by which policy a improves
// on policy b at the given lambda.
inline double relative_improvement(const std::vector<SummaryRow>& rows,
                                   const std::string& a, const std::string& b,
                                   double lambda) {
  const SummaryRow* ra = nullptr;
  const SummaryRow* rb = nullptr;
  for (const auto& r : rows) {
    if (r.lambda != lambda) continue;
    if (r.policy == a) ra = &r;
    if (r.policy == b) rb = &r;
  }
  if (!ra || !rb) throw ExperimentError("policy row not found for improvement");
  if (rb->mean_total_delay == 0) return 0;
  return (rb->mean_total_delay - ra->mean_total_delay) / rb->mean_total_delay;
}

inline void emit_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "topology,policy,theta_mode,theta_value,lambda,seed_count,"
         "mean_total_delay,stddev,mean_backlog,cache_hit_rate\n";
  out.precision(17);
  for (const auto& r : rows)
    out << r.topology << "," << r.policy << "," << r.theta_mode << ","
        << r.theta_value << "," << r.lambda << "," << r.seed_count << ","
        << r.mean_total_delay << "," << r.stddev << "," << r.mean_backlog
        << "," << r.cache_hit_rate << "\n";
}

inline void emit_csv_file(const std::vector<SummaryRow>& rows,
                          const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ExperimentError("cannot write csv: " + path);
  emit_csv(rows, f);
}

inline std::vector<SummaryRow> read_csv(std::istream& in) {
  std::vector<SummaryRow> rows;
  std::string line;
  if (!std::getline(in, line)) throw ExperimentError("empty csv");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::vector<std::string> f;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 10) throw ExperimentError("bad csv row: " + line);
    SummaryRow r;
    r.topology = f[0];
    r.policy = f[1];
    r.theta_mode = f[2];
    r.theta_value = std::stod(f[3]);
    r.lambda = std::stod(f[4]);
    r.seed_count = std::stoi(f[5]);
    r.mean_total_delay = std::stod(f[6]);
    r.stddev = std::stod(f[7]);
    r.mean_backlog = std::stod(f[8]);
    r.cache_hit_rate = std::stod(f[9]);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace vipnet
