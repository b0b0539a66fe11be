#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vipnet/topology.hpp"
#include "vipnet/workload.hpp"

namespace vipnet {

struct VplaneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// VIP counter matrix V_n^k(t).  Counts are nonnegative reals; the source
// of each object is pinned at zero.
struct VipState {
  int node_count = 0;
  int object_count = 0;
  long slot = 1;
  std::vector<double> v;  // (n-1)*K + (k-1)

  VipState() = default;
  VipState(int n, int k)
      : node_count(n), object_count(k), v(static_cast<size_t>(n) * k, 0.0) {}

  double& at(NodeId n, ObjId k) {
    return v[static_cast<size_t>(n - 1) * object_count + (k - 1)];
  }
  double at(NodeId n, ObjId k) const {
    return v[static_cast<size_t>(n - 1) * object_count + (k - 1)];
  }
  const double* row(NodeId n) const {
    return v.data() + static_cast<size_t>(n - 1) * object_count;
  }
  double total() const { return std::accumulate(v.begin(), v.end(), 0.0); }
};

enum class ThetaMode { Constant, Ema };

// Scaling factors theta_n^k >= 1.  Constant mode holds a fixed matrix;
// EMA mode tracks the per-slot VIP inflow A_n^k + sum_a mu_hat_an with
// smoothing weight beta and a floor at 1 (the analysis requires
// theta >= 1, and the raw EMA can drift below it).  theta at src(k) is
// pinned to 1; V there is zero so the backpressure weight is unaffected.
class ThetaPolicy {
 public:
  static ThetaPolicy constant(int n, int k, double value = 1.0) {
    if (value < 1.0) throw VplaneError("theta must be >= 1");
    ThetaPolicy p;
    p.mode_ = ThetaMode::Constant;
    p.node_count_ = n;
    p.object_count_ = k;
    p.theta_.assign(static_cast<size_t>(n) * k, value);
    return p;
  }

  static ThetaPolicy ema(int n, int k, double beta = 0.125,
                         double initial = 1.0) {
    if (beta <= 0.0 || beta > 1.0) throw VplaneError("beta must be in (0,1]");
    if (initial < 1.0) throw VplaneError("theta must be >= 1");
    ThetaPolicy p;
    p.mode_ = ThetaMode::Ema;
    p.beta_ = beta;
    p.node_count_ = n;
    p.object_count_ = k;
    p.theta_.assign(static_cast<size_t>(n) * k, initial);
    return p;
  }

  ThetaMode mode() const { return mode_; }
  double beta() const { return beta_; }

  double at(NodeId n, ObjId k) const {
    return theta_[static_cast<size_t>(n - 1) * object_count_ + (k - 1)];
  }
  double& mutable_at(NodeId n, ObjId k) {
    return theta_[static_cast<size_t>(n - 1) * object_count_ + (k - 1)];
  }
  const double* row(NodeId n) const {
    return theta_.data() + static_cast<size_t>(n - 1) * object_count_;
  }
  double min_at_node(NodeId n) const {
    const double* r = row(n);
    return *std::min_element(r, r + object_count_);
  }

  // EMA update with the realized inflow; no-op in Constant mode.
  // inflow is dense (n-1)*K + (k-1); entries at src(k) are ignored.
  void update(const std::vector<double>& inflow, const ObjectCatalog& cat) {
    if (mode_ != ThetaMode::Ema) return;
    for (size_t i = 0; i < theta_.size(); ++i) {
      double next = (1.0 - beta_) * theta_[i] + beta_ * inflow[i];
      theta_[i] = std::max(1.0, next);
    }
    for (ObjId k = 1; k <= object_count_; ++k)
      mutable_at(cat.src(k), k) = 1.0;
  }

 private:
  ThetaMode mode_ = ThetaMode::Constant;
  double beta_ = 0.125;
  int node_count_ = 0;
  int object_count_ = 0;
  std::vector<double> theta_;
};

// One slot of virtual-plane decisions: the per-link allocation (each link
// serves at most one object per slot at rate C_ba/D) and the per-node
// caching vector.
struct VipDecision {
  struct LinkAlloc {
    ObjId object = 0;  // 0 = idle
    double mu = 0;     // allocated, objects/slot
    double mu_hat = 0; // actually transmitted (limited by sender backlog)
  };
  std::vector<LinkAlloc> links;              // by link index
  std::vector<std::vector<ObjId>> cached;    // [1..N], sorted object ids
};

// Backpressure weight W_ab^k = V_a^k - V_b^k / theta_b^k.
inline double backpressure_weight(const VipState& state,
                                  const ThetaPolicy& theta,
                                  const ObjectCatalog& cat,
                                  const NetworkGraph& graph, NodeId a,
                                  NodeId b, ObjId k) {
  int li = graph.link_index(a, b);
  if (!cat.link_allowed(k, li))
    throw VplaneError("link not allowed for object " + std::to_string(k));
  return state.at(a, k) - state.at(b, k) / theta.at(b, k);
}

// Max-weight forwarding: per link, allocate the full reverse capacity
// C_ba/D to the object maximizing W_ab^k, if that maximum is strictly
// positive.  Ties break to the smallest object id.
inline void forward_vips(const VipState& state, const ThetaPolicy& theta,
                         const NetworkGraph& graph, const ObjectCatalog& cat,
                         VipDecision& dec) {
  const int K = cat.object_count;
  dec.links.assign(graph.link_count(), {});
  for (int li = 0; li < graph.link_count(); ++li) {
    const Link& l = graph.link(li);
    const double* va = state.row(l.from);
    const double* vb = state.row(l.to);
    const double* tb = theta.row(l.to);
    ObjId best = 0;
    double best_w = 0;
    for (ObjId k = 1; k <= K; ++k) {
      if (!cat.link_allowed(k, li)) continue;
      double w = va[k - 1] - vb[k - 1] / tb[k - 1];
      if (best == 0 || w > best_w) {
        best = k;
        best_w = w;
      }
    }
    if (best != 0 && best_w > 0) {
      dec.links[li].object = best;
      dec.links[li].mu = static_cast<double>(graph.reverse_cap_bits(
                             l.from, l.to)) /
                         static_cast<double>(cat.object_size_bits);
    }
  }
}

// Max-weight caching at node n: the floor(L_n/D) objects with the
// largest V_n^k, ties to the smallest id.  Returns a sorted object list.
inline std::vector<ObjId> cache_vips(const VipState& state,
                                     const NetworkGraph& graph,
                                     const ObjectCatalog& cat, NodeId n) {
  const int K = cat.object_count;
  int cap = static_cast<int>(graph.cache_bits(n) / cat.object_size_bits);
  if (cap <= 0) return {};
  std::vector<ObjId> idx(K);
  std::iota(idx.begin(), idx.end(), 1);
  auto better = [&](ObjId a, ObjId b) {
    double va = state.at(n, a), vb = state.at(n, b);
    return va > vb || (va == vb && a < b);
  };
  if (cap < K) {
    std::nth_element(idx.begin(), idx.begin() + cap, idx.end(), better);
    idx.resize(cap);
  }
  std::sort(idx.begin(), idx.end());
  return idx;
}

// Resolves oversubscription at each sender: the backlog V_n^k is split
// across that node's allocated links in ascending link order, so
// mu_hat <= mu and the Eq.-style inequality becomes an equality for the
// transmitted amount.
inline void resolve_transmissions(const VipState& state,
                                  const NetworkGraph& graph,
                                  VipDecision& dec) {
  for (NodeId n = 1; n <= graph.node_count(); ++n) {
    std::unordered_map<ObjId, double> remaining;
    for (int li : graph.out_links(n)) {  // ascending (a,b) order
      auto& a = dec.links[li];
      if (a.object == 0) {
        a.mu_hat = 0;
        continue;
      }
      auto [it, fresh] = remaining.try_emplace(a.object, state.at(n, a.object));
      double send = std::min(a.mu, it->second);
      a.mu_hat = send;
      it->second -= send;
    }
  }
}

// Eq.-(3)-style slot update with mu_hat inflows:
//   V' = ((V - sum_out mu)^+ + (A + sum_in mu_hat)/theta - r_n s)^+
// Only touched (n,k) pairs are visited.  If inflow_out is non-null it
// receives the dense realized inflow A + sum_in mu_hat (for EMA theta).
inline void step_vip_counts(VipState& state, const ThetaPolicy& theta,
                            const VipDecision& dec,
                            const ArrivalBatch& arrivals,
                            const NetworkGraph& graph,
                            const ObjectCatalog& cat,
                            std::vector<double>* inflow_out = nullptr) {
  const int K = cat.object_count;
  struct Delta {
    double out = 0, in_hat = 0, arr = 0;
    bool cached = false;
  };
  std::unordered_map<std::uint64_t, Delta> touched;
  auto key = [K](NodeId n, ObjId k) {
    return static_cast<std::uint64_t>(n - 1) * K + (k - 1);
  };
  if (inflow_out) inflow_out->assign(static_cast<size_t>(state.node_count) * K, 0.0);

  for (int li = 0; li < graph.link_count(); ++li) {
    const auto& a = dec.links[li];
    if (a.object == 0) continue;
    const Link& l = graph.link(li);
    touched[key(l.from, a.object)].out += a.mu;
    touched[key(l.to, a.object)].in_hat += a.mu_hat;
  }
  for (const auto& e : arrivals.entries)
    touched[key(e.node, e.object)].arr += e.count;
  for (NodeId n = 1; n <= state.node_count; ++n)
    for (ObjId k : dec.cached[n]) touched[key(n, k)].cached = true;

  for (const auto& [kk, d] : touched) {
    NodeId n = static_cast<NodeId>(kk / K) + 1;
    ObjId k = static_cast<ObjId>(kk % K) + 1;
    double inflow = d.arr + d.in_hat;
    if (inflow_out) (*inflow_out)[kk] = inflow;
    if (cat.src(k) == n) {
      state.at(n, k) = 0.0;
      continue;
    }
    double r_drain = d.cached ? graph.read_rate(n) : 0.0;
    double v = state.at(n, k);
    double next = std::max(v - d.out, 0.0) + inflow / theta.at(n, k) - r_drain;
    state.at(n, k) = std::max(next, 0.0);
  }
  ++state.slot;
}

// Per-slot trajectory statistics from a virtual-plane run.
struct VipRunStats {
  std::vector<double> total_vip;  // sum over (n,k) of V, per slot (after step)
  double final_total = 0;
};

// Full virtual-plane driver.  Slot order: observe V -> forward -> cache ->
// resolve transmissions -> arrivals -> count update -> theta update.
class VirtualPlane {
 public:
  VirtualPlane(const NetworkGraph& graph, const ObjectCatalog& cat,
               ThetaPolicy theta)
      : graph_(&graph),
        cat_(&cat),
        theta_(std::move(theta)),
        state_(graph.node_count(), cat.object_count) {
    decision_.cached.assign(graph.node_count() + 1, {});
  }

  const VipState& state() const { return state_; }
  const ThetaPolicy& theta() const { return theta_; }
  const VipDecision& decision() const { return decision_; }

  void set_decision_log(std::ostream* log) { log_ = log; }

  // Advances one slot with the given arrivals; returns the decision used.
  const VipDecision& step(const ArrivalBatch& arrivals) {
    forward_vips(state_, theta_, *graph_, *cat_, decision_);
    for (NodeId n = 1; n <= graph_->node_count(); ++n)
      decision_.cached[n] = cache_vips(state_, *graph_, *cat_, n);
    resolve_transmissions(state_, *graph_, decision_);
    if (log_) write_log(arrivals);
    std::vector<double>* inflow =
        theta_.mode() == ThetaMode::Ema ? &inflow_buf_ : nullptr;
    step_vip_counts(state_, theta_, decision_, arrivals, *graph_, *cat_,
                    inflow);
    if (inflow) theta_.update(*inflow, *cat_);
    return decision_;
  }

 private:
  void write_log(const ArrivalBatch& arrivals) {
    long t = state_.slot;
    for (int li = 0; li < graph_->link_count(); ++li) {
      const auto& a = decision_.links[li];
      if (a.object == 0) continue;
      const Link& l = graph_->link(li);
      *log_ << "fwd " << t << " " << l.from << " " << l.to << " " << a.object
            << " " << a.mu << " " << a.mu_hat << "\n";
    }
    for (NodeId n = 1; n <= graph_->node_count(); ++n) {
      if (decision_.cached[n].empty()) continue;
      *log_ << "cache " << t << " " << n;
      for (ObjId k : decision_.cached[n]) *log_ << " " << k;
      *log_ << "\n";
    }
    for (const auto& e : arrivals.entries)
      *log_ << "arr " << t << " " << e.node << " " << e.object << " "
            << e.count << "\n";
  }

  const NetworkGraph* graph_;
  const ObjectCatalog* cat_;
  ThetaPolicy theta_;
  VipState state_;
  VipDecision decision_;
  std::vector<double> inflow_buf_;
  std::ostream* log_ = nullptr;
};

// Runs the virtual plane alone for T slots against a demand model.
inline VipRunStats run_virtual(const NetworkGraph& graph,
                               const ObjectCatalog& cat, DemandModel& demand,
                               ThetaPolicy theta, long horizon,
                               std::ostream* log = nullptr,
                               VirtualPlane* out_plane = nullptr) {
  VirtualPlane plane(graph, cat, std::move(theta));
  plane.set_decision_log(log);
  VipRunStats stats;
  stats.total_vip.reserve(horizon);
  for (long t = 1; t <= horizon; ++t) {
    plane.step(demand.sample_arrivals(t));
    stats.total_vip.push_back(plane.state().total());
  }
  stats.final_total = stats.total_vip.empty() ? 0 : stats.total_vip.back();
  if (out_plane) *out_plane = plane;
  return stats;
}

}  // namespace vipnet
