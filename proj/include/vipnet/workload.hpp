#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vipnet/topology.hpp"

namespace vipnet {

struct WorkloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Normalized Zipf pmf: p_k proportional to k^{-s}.
inline std::vector<double> zipf_pmf(int K, double s) {
  if (K < 1) throw WorkloadError("zipf_pmf: K must be >= 1");
  if (s < 0) throw WorkloadError("zipf_pmf: exponent must be >= 0");
  std::vector<double> p(K);
  double sum = 0;
  for (int k = 1; k <= K; ++k) {
    p[k - 1] = std::pow(static_cast<double>(k), -s);
    sum += p[k - 1];
  }
  for (double& x : p) x /= sum;
  return p;
}

// One slot of exogenous request arrivals, sparse over (node, object).
struct ArrivalBatch {
  long slot = 0;
  struct Entry {
    NodeId node;
    ObjId object;
    int count;
  };
  std::vector<Entry> entries;  // sorted by (node, object)
};

// Poisson object-request arrivals with Zipf popularity at requester
// nodes.  Owns its random stream; clone with a new seed for parallel
// sweeps.  An overall per-node rate lambda is thinned over objects, which
// yields independent Poisson(lambda*p_k) counts per (n,k).
class DemandModel {
 public:
  DemandModel(const NetworkGraph& graph, int object_count, double lambda,
              double zipf_exponent, std::uint64_t seed,
              double arrival_cap = -1.0, bool truncate = false)
      : requesters_(graph.requesters()),
        lambda_(lambda),
        pmf_(zipf_pmf(object_count, zipf_exponent)),
        rng_(seed),
        truncate_(truncate) {
    if (lambda < 0) throw WorkloadError("lambda must be >= 0");
    // default A_n,max: ceil(lambda + 6 sigma) for a Poisson(lambda) total
    arrival_cap_ = arrival_cap >= 0
                       ? arrival_cap
                       : std::ceil(lambda + 6.0 * std::sqrt(lambda));
    cdf_.resize(pmf_.size());
    double acc = 0;
    for (size_t i = 0; i < pmf_.size(); ++i) {
      acc += pmf_[i];
      cdf_[i] = acc;
    }
    cdf_.back() = 1.0;
  }

  double lambda() const { return lambda_; }
  const std::vector<double>& pmf() const { return pmf_; }
  double arrival_cap() const { return arrival_cap_; }
  double rate(const NetworkGraph& g, NodeId n, ObjId k) const {
    return g.is_requester(n) ? lambda_ * pmf_[k - 1] : 0.0;
  }

  ArrivalBatch sample_arrivals(long slot) {
    ArrivalBatch batch;
    batch.slot = slot;
    std::poisson_distribution<int> total(lambda_);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::map<std::pair<NodeId, ObjId>, int> counts;
    for (NodeId n : requesters_) {
      if (lambda_ == 0) continue;
      int reqs = total(rng_);
      for (int i = 0; i < reqs; ++i) {
        double u = u01(rng_);
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        ObjId k = static_cast<ObjId>(it - cdf_.begin()) + 1;
        ++counts[{n, k}];
      }
    }
    for (auto& [nk, c] : counts) {
      int cnt = c;
      if (truncate_ && cnt > static_cast<int>(arrival_cap_))
        cnt = static_cast<int>(arrival_cap_);
      batch.entries.push_back({nk.first, nk.second, cnt});
    }
    return batch;
  }

 private:
  std::vector<NodeId> requesters_;
  double lambda_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
  std::mt19937_64 rng_;
  double arrival_cap_;
  bool truncate_;
};

// Deterministic trace: text rows "t n k count"; missing slots are zero.
class TraceReplay {
 public:
  explicit TraceReplay(std::istream& in, int node_count, int object_count) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      long t;
      int n, k, c;
      if (!(ls >> t)) continue;  // blank line
      if (!(ls >> n >> k >> c))
        throw WorkloadError("trace line " + std::to_string(lineno) +
                            ": expected 't n k count'");
      std::string extra;
      if (ls >> extra)
        throw WorkloadError("trace line " + std::to_string(lineno) +
                            ": trailing tokens");
      if (n < 1 || n > node_count)
        throw WorkloadError("trace line " + std::to_string(lineno) +
                            ": node id out of range");
      if (k < 1 || k > object_count)
        throw WorkloadError("trace line " + std::to_string(lineno) +
                            ": object id out of range");
      if (t < 1 || c < 0)
        throw WorkloadError("trace line " + std::to_string(lineno) +
                            ": bad slot or count");
      rows_[t].entries.push_back({n, k, c});
      rows_[t].slot = t;
    }
    for (auto& [t, b] : rows_)
      std::sort(b.entries.begin(), b.entries.end(),
                [](const auto& x, const auto& y) {
                  return std::tie(x.node, x.object) < std::tie(y.node, y.object);
                });
  }

  static TraceReplay from_file(const std::string& path, int node_count,
                               int object_count) {
    std::ifstream f(path);
    if (!f) throw WorkloadError("cannot open trace file: " + path);
    return TraceReplay(f, node_count, object_count);
  }

  ArrivalBatch arrivals(long slot) const {
    auto it = rows_.find(slot);
    if (it == rows_.end()) return ArrivalBatch{slot, {}};
    return it->second;
  }

  long last_slot() const { return rows_.empty() ? 0 : rows_.rbegin()->first; }

 private:
  std::map<long, ArrivalBatch> rows_;
};

inline void dump_trace(std::ostream& out, const std::vector<ArrivalBatch>& bs) {
  for (const auto& b : bs)
    for (const auto& e : b.entries)
      out << b.slot << " " << e.node << " " << e.object << " " << e.count
          << "\n";
}

}  // namespace vipnet
