#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vipnet/topology.hpp"
#include "vipnet/vplane.hpp"
#include "vipnet/workload.hpp"

namespace vipnet {

struct AplaneError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ForwardingPolicy { VipMapped, ShortestPath, PotentialBased };
enum class CachingPolicy { VipMapped, Lfu, LceUnif, LceLru, LcdLru, LceBias };

struct PolicySpec {
  ForwardingPolicy forwarding = ForwardingPolicy::ShortestPath;
  CachingPolicy caching = CachingPolicy::LceLru;
  // exponential window (slots) for the VIP-mapped nu/V averages
  int mapping_window = 64;
  // eviction-score exponent for the reconstructed LCE-BIAS rule
  double bias_gamma = 0.75;
};

inline std::string to_string(const PolicySpec& p) {
  std::string f, c;
  switch (p.forwarding) {
    case ForwardingPolicy::VipMapped: f = "vip"; break;
    case ForwardingPolicy::ShortestPath: f = "sp"; break;
    case ForwardingPolicy::PotentialBased: f = "pot"; break;
  }
  switch (p.caching) {
    case CachingPolicy::VipMapped: c = "vip"; break;
    case CachingPolicy::Lfu: c = "lfu"; break;
    case CachingPolicy::LceUnif: c = "lce-unif"; break;
    case CachingPolicy::LceLru: c = "lce-lru"; break;
    case CachingPolicy::LcdLru: c = "lcd-lru"; break;
    case CachingPolicy::LceBias: c = "lce-bias"; break;
  }
  return f + "/" + c;
}

enum class PitResult { Forwarded, Collapsed };

// Per-node pending-interest table, keyed by (object, chunk).  Each entry
// forwards upstream at most once; later requests collapse onto it.
class PitTable {
 public:
  struct Entry {
    NodeId upstream = 0;        // face the Interest was forwarded to
    std::vector<NodeId> faces;  // downstream neighbor faces
    struct LocalReq {
      long creation;
      std::uint32_t request_idx;
    };
    std::vector<LocalReq> local;  // locally-submitted requests
  };

  bool pending(std::uint32_t chunk) const { return map_.count(chunk) != 0; }

  // face > 0: neighbor; returns whether an upstream Interest is needed.
  PitResult insert_or_collapse_face(std::uint32_t chunk, NodeId face) {
    auto [it, fresh] = map_.try_emplace(chunk);
    auto& fs = it->second.faces;
    if (std::find(fs.begin(), fs.end(), face) == fs.end()) fs.push_back(face);
    return fresh ? PitResult::Forwarded : PitResult::Collapsed;
  }

  PitResult insert_or_collapse_local(std::uint32_t chunk, long creation,
                                     std::uint32_t request_idx) {
    auto [it, fresh] = map_.try_emplace(chunk);
    it->second.local.push_back({creation, request_idx});
    return fresh ? PitResult::Forwarded : PitResult::Collapsed;
  }

  Entry* find(std::uint32_t chunk) {
    auto it = map_.find(chunk);
    return it == map_.end() ? nullptr : &it->second;
  }
  void erase(std::uint32_t chunk) { map_.erase(chunk); }
  size_t size() const { return map_.size(); }

 private:
  std::unordered_map<std::uint32_t, Entry> map_;
};

// Per-node content store, object-granular, with per-policy metadata.
class ContentStore {
 public:
  ContentStore() = default;
  ContentStore(int object_count, int capacity_objects)
      : cached_(object_count + 1, 0), capacity_(capacity_objects) {}

  bool has(ObjId k) const { return cached_[k] != 0; }
  int size() const { return count_; }
  int capacity() const { return capacity_; }
  const std::vector<char>& bitmap() const { return cached_; }

  void touch(ObjId k, long slot) { last_touch_[k] = slot; }
  void note_request(ObjId k) { ++freq_[k]; }
  long freq(ObjId k) const {
    auto it = freq_.find(k);
    return it == freq_.end() ? 0 : it->second;
  }

  void insert(ObjId k, long slot) {
    if (cached_[k]) {
      last_touch_[k] = slot;
      return;
    }
    cached_[k] = 1;
    ++count_;
    last_touch_[k] = slot;
  }

  void evict(ObjId k) {
    if (!cached_[k]) return;
    cached_[k] = 0;
    --count_;
    last_touch_.erase(k);
  }

  template <typename Score>
  ObjId argmin_cached(Score&& score) const {
    ObjId best = 0;
    double best_s = 0;
    for (ObjId k = 1; k < static_cast<ObjId>(cached_.size()); ++k) {
      if (!cached_[k]) continue;
      double s = score(k);
      if (best == 0 || s < best_s) {
        best = k;
        best_s = s;
      }
    }
    return best;
  }

  long last_touch(ObjId k) const {
    auto it = last_touch_.find(k);
    return it == last_touch_.end() ? -1 : it->second;
  }

  std::vector<ObjId> cached_objects() const {
    std::vector<ObjId> out;
    for (ObjId k = 1; k < static_cast<ObjId>(cached_.size()); ++k)
      if (cached_[k]) out.push_back(k);
    return out;
  }

 private:
  std::vector<char> cached_;
  int capacity_ = 0;
  int count_ = 0;
  std::unordered_map<ObjId, long> last_touch_;
  std::unordered_map<ObjId, long> freq_;
};

struct AplaneMetrics {
  long chunk_interests_created = 0;
  long chunk_interests_fulfilled = 0;
  long chunk_interests_open = 0;       // still pending at horizon
  double total_chunk_delay = 0;        // fulfilled chunk interests only
  long object_requests = 0;
  long object_requests_fulfilled = 0;
  double total_object_delay = 0;       // last-chunk fulfillment - creation
  long cache_serves = 0;               // chunk interests answered by a cache
  long source_serves = 0;
  long upstream_interests = 0;         // Interests put on links
  long collapses = 0;
  std::vector<double> link_bits;       // bits carried, by link index
  double cache_hit_rate() const {
    long tot = cache_serves + source_serves;
    return tot ? static_cast<double>(cache_serves) / tot : 0.0;
  }
};

// Chunk-level Interest/Data simulation with PIT collapse and per-slot
// link bit budgets.  Optionally runs in lockstep with a VirtualPlane
// (VIP-mapped forwarding/caching read its windowed flow rates and
// counts).
class PacketWorld {
 public:
  PacketWorld(const NetworkGraph& graph, const ObjectCatalog& cat,
              PolicySpec policy, std::uint64_t seed,
              VirtualPlane* vplane = nullptr, std::ostream* event_log = nullptr)
      : graph_(&graph),
        cat_(&cat),
        policy_(policy),
        vplane_(vplane),
        rng_(seed),
        log_(event_log) {
    const int N = graph.node_count();
    const int K = cat.object_count;
    chunks_ = cat.chunks_per_object();
    if (policy.forwarding == ForwardingPolicy::VipMapped ||
        policy.caching == CachingPolicy::VipMapped) {
      if (!vplane_)
        throw AplaneError("VIP-mapped policy requires a virtual plane");
    }
    pit_.resize(N + 1);
    stores_.reserve(N + 1);
    for (NodeId n = 0; n <= N; ++n)
      stores_.emplace_back(
          K, static_cast<int>(n == 0 ? 0
                                     : graph.cache_bits(n) /
                                           cat.object_size_bits));
    queues_.resize(graph.link_count());
    metrics_.link_bits.assign(graph.link_count(), 0.0);
    dist_to_.assign(N + 1, {});
    for (NodeId d = 1; d <= N; ++d) dist_to_[d] = graph.hop_distances_to(d);
    if (vplane_) {
      nu_.assign(graph.link_count(),
                 std::vector<double>(K, 0.0));
      vbar_.assign(static_cast<size_t>(N) * K, 0.0);
      alpha_ = 1.0 / policy.mapping_window;
    }
  }

  const AplaneMetrics& metrics() const { return metrics_; }
  const ContentStore& store(NodeId n) const { return stores_[n]; }
  const PitTable& pit(NodeId n) const { return pit_[n]; }
  long slot() const { return slot_; }

  // Registers one object request at `node`; issues its chunk Interests in
  // order within the current slot.
  void submit_request(NodeId node, ObjId k, long slot) {
    ++metrics_.object_requests;
    std::uint32_t req = static_cast<std::uint32_t>(requests_.size());
    requests_.push_back({slot, chunks_, slot});
    stores_[node].note_request(k);
    for (int c = 0; c < chunks_; ++c) {
      ++metrics_.chunk_interests_created;
      std::uint32_t chunk = chunk_id(k, c);
      if (node == cat_->src(k) || stores_[node].has(k)) {
        // local hit: fulfilled at the start of the next slot
        if (stores_[node].has(k) && node != cat_->src(k)) {
          ++metrics_.cache_serves;
          stores_[node].touch(k, slot);
        } else {
          ++metrics_.source_serves;
        }
        fulfill_local(req, slot, slot + 1);
        continue;
      }
      auto r = pit_[node].insert_or_collapse_local(chunk, slot, req);
      if (r == PitResult::Collapsed) {
        ++metrics_.collapses;
        log_event("COLLAPSE", node, k, c);
        continue;
      }
      bool detour = false;
      NodeId nh = next_hop(node, k, 0, &detour);
      pit_[node].find(chunk)->upstream = nh;
      send_interest(node, nh, chunk, 0, detour ? 1 : 0);
    }
  }

  // Advances one slot: virtual plane first (when attached), then local
  // request admission, then link transmission under per-slot bit
  // budgets, then arrival processing (cache hits, PIT collapse and
  // forwarding, Data fan-out, caching decisions, delay closure).
  void step(const ArrivalBatch& arrivals) {
    slot_ = arrivals.slot;
    per_slot_nexthop_.clear();
    per_slot_potential_.clear();
    per_slot_topset_.clear();
    if (vplane_) {
      const VipDecision& dec = vplane_->step(arrivals);
      update_mapping_averages(dec, arrivals);
    }
    for (const auto& e : arrivals.entries)
      for (int i = 0; i < e.count; ++i) submit_request(e.node, e.object, slot_);
    transmit_and_process();
  }

  // Remaining unfulfilled chunk interests (horizon accounting).
  void finalize() {
    metrics_.chunk_interests_open =
        metrics_.chunk_interests_created - metrics_.chunk_interests_fulfilled;
  }

  // exposed for tests
  NodeId next_hop_for(NodeId n, ObjId k) { return next_hop(n, k, 0); }

 private:
  struct Packet {
    std::uint32_t chunk;
    std::uint8_t kind;      // 0 = Interest, 1 = Data
    std::uint8_t hops;      // Interest: hops travelled; Data: hops since serve
    std::uint8_t detoured;  // Interest chased a cached copy and may miss
  };
  struct RequestRec {
    long creation;
    int remaining;
    long last_fulfill;
  };

  std::uint32_t chunk_id(ObjId k, int c) const {
    return static_cast<std::uint32_t>(k - 1) * chunks_ + c;
  }
  ObjId chunk_obj(std::uint32_t id) const { return id / chunks_ + 1; }
  int chunk_index(std::uint32_t id) const { return id % chunks_; }

  void log_event(const char* ev, NodeId n, ObjId k, int c) {
    if (log_) *log_ << slot_ << " " << ev << " " << n << " " << k << " " << c
                    << "\n";
  }

  void fulfill_local(std::uint32_t req, long creation, long fulfill) {
    ++metrics_.chunk_interests_fulfilled;
    metrics_.total_chunk_delay += fulfill - creation;
    auto& r = requests_[req];
    r.last_fulfill = std::max(r.last_fulfill, fulfill);
    if (--r.remaining == 0) {
      ++metrics_.object_requests_fulfilled;
      metrics_.total_object_delay += r.last_fulfill - r.creation;
    }
  }

  void send_interest(NodeId from, NodeId to, std::uint32_t chunk,
                     std::uint8_t hops, std::uint8_t detoured = 0) {
    queues_[graph_->link_index(from, to)].push_back({chunk, 0, hops, detoured});
    ++metrics_.upstream_interests;
    log_event("INTEREST_FWD", from, chunk_obj(chunk), chunk_index(chunk));
  }

  void send_data(NodeId from, NodeId to, std::uint32_t chunk,
                 std::uint8_t hops) {
    queues_[graph_->link_index(from, to)].push_back({chunk, 1, hops, 0});
    log_event("DATA_FWD", from, chunk_obj(chunk), chunk_index(chunk));
  }

  void transmit_and_process() {
    arrivals_.clear();
    for (int li = 0; li < graph_->link_count(); ++li) {
      auto& q = queues_[li];
      std::uint64_t budget = graph_->link(li).cap_bits;
      while (!q.empty()) {
        std::uint64_t sz = q.front().kind == 0 ? cat_->interest_size_bits
                                               : cat_->chunk_size_bits;
        if (sz > budget) break;  // FIFO head-of-line; no partial packets
        budget -= sz;
        metrics_.link_bits[li] += static_cast<double>(sz);
        arrivals_.push_back({li, q.front()});
        q.pop_front();
      }
    }
    for (const auto& [li, pkt] : arrivals_) {
      const Link& l = graph_->link(li);
      if (pkt.kind == 0)
        process_interest(l.to, l.from, pkt);
      else
        process_data(l.to, pkt);
    }
  }

  void process_interest(NodeId n, NodeId from, const Packet& pkt) {
    ObjId k = chunk_obj(pkt.chunk);
    if (chunk_index(pkt.chunk) == 0) stores_[n].note_request(k);
    if (n == cat_->src(k) || stores_[n].has(k)) {
      if (stores_[n].has(k) && n != cat_->src(k)) {
        ++metrics_.cache_serves;
        stores_[n].touch(k, slot_);
      } else {
        ++metrics_.source_serves;
      }
      send_data(n, from, pkt.chunk, 0);
      return;
    }
    auto r = pit_[n].insert_or_collapse_face(pkt.chunk, from);
    PitTable::Entry* e = pit_[n].find(pkt.chunk);
    std::uint8_t hops = static_cast<std::uint8_t>(
        std::min<int>(pkt.hops + 1, 250));
    if (r == PitResult::Collapsed) {
      if (e->upstream == from) {
        // our own upstream bounced the Interest back (the copy it was
        // chasing is gone); repair by strict shortest-path descent so
        // the pending entry cannot wait on us forever
        NodeId nh = sp_next_hop(n, k);
        e->upstream = nh;
        send_interest(n, nh, pkt.chunk, hops);
        return;
      }
      ++metrics_.collapses;
      log_event("COLLAPSE", n, k, chunk_index(pkt.chunk));
      return;
    }
    // an Interest gets one cached-copy detour; once it has missed it
    // descends strictly toward the source (keeps forwarding loop-free
    // under cache churn)
    bool detour = false;
    NodeId nh = pkt.detoured ? sp_next_hop(n, k) : next_hop(n, k, hops, &detour);
    e->upstream = nh;
    send_interest(n, nh, pkt.chunk, hops,
                  static_cast<std::uint8_t>(pkt.detoured | (detour ? 1 : 0)));
  }

  void process_data(NodeId n, const Packet& pkt) {
    ObjId k = chunk_obj(pkt.chunk);
    if (n != cat_->src(k)) cache_on_data_arrival(n, k, pkt.hops);
    PitTable::Entry* e = pit_[n].find(pkt.chunk);
    if (!e) return;  // no pending state (e.g. evicted-then-refetched dup)
    std::uint8_t hops = static_cast<std::uint8_t>(
        std::min<int>(pkt.hops + 1, 250));
    for (NodeId f : e->faces) send_data(n, f, pkt.chunk, hops);
    for (const auto& lr : e->local)
      fulfill_local(lr.request_idx, lr.creation, slot_ + 1);
    if (!e->local.empty())
      log_event("FULFILL", n, k, chunk_index(pkt.chunk));
    pit_[n].erase(pkt.chunk);
  }

  // ---- caching -------------------------------------------------------

  void cache_on_data_arrival(NodeId n, ObjId k, std::uint8_t hops_from_serve) {
    ContentStore& cs = stores_[n];
    if (cs.capacity() == 0 || cs.has(k)) {
      if (cs.has(k)) cs.touch(k, slot_);
      return;
    }
    switch (policy_.caching) {
      case CachingPolicy::LceUnif:
      case CachingPolicy::LceLru:
      case CachingPolicy::LceBias:
        insert_with_eviction(n, k);
        break;
      case CachingPolicy::LcdLru:
        // leave-copy-down: only the immediate downstream neighbor of the
        // serving node caches
        if (hops_from_serve == 0) insert_with_eviction(n, k);
        break;
      case CachingPolicy::Lfu: {
        if (cs.size() < cs.capacity()) {
          insert_with_eviction(n, k);
          break;
        }
        ObjId victim =
            cs.argmin_cached([&](ObjId j) { return double(cs.freq(j)); });
        if (victim != 0 && cs.freq(k) > cs.freq(victim)) {
          evict(n, victim);
          cs.insert(k, slot_);
          log_event("CACHE_INSERT", n, k, 0);
        }
        break;
      }
      case CachingPolicy::VipMapped: {
        const auto& top = vip_top_set(n);
        if (!top[k]) break;
        if (cs.size() >= cs.capacity()) {
          // evict the lowest-score cached object if it ranks below k
          ObjId victim = cs.argmin_cached(
              [&](ObjId j) { return vbar_at(n, j); });
          if (victim == 0 || vbar_at(n, victim) >= vbar_at(n, k)) break;
          evict(n, victim);
        }
        cs.insert(k, slot_);
        log_event("CACHE_INSERT", n, k, 0);
        break;
      }
    }
  }

  void insert_with_eviction(NodeId n, ObjId k) {
    ContentStore& cs = stores_[n];
    if (cs.size() >= cs.capacity()) {
      ObjId victim = 0;
      switch (policy_.caching) {
        case CachingPolicy::LceUnif: {
          auto objs = cs.cached_objects();
          std::uniform_int_distribution<size_t> d(0, objs.size() - 1);
          victim = objs[d(rng_)];
          break;
        }
        case CachingPolicy::LceLru:
        case CachingPolicy::LcdLru:
          victim = cs.argmin_cached(
              [&](ObjId j) { return double(cs.last_touch(j)); });
          break;
        case CachingPolicy::LceBias:
          // reconstructed: request frequency weighted toward evicting
          // high-rank (unpopular) objects; score = freq * k^{-gamma}
          victim = cs.argmin_cached([&](ObjId j) {
            return cs.freq(j) * std::pow(double(j), -policy_.bias_gamma);
          });
          break;
        default:
          victim = cs.argmin_cached(
              [&](ObjId j) { return double(cs.last_touch(j)); });
      }
      if (victim != 0) evict(n, victim);
    }
    cs.insert(k, slot_);
    log_event("CACHE_INSERT", n, k, 0);
  }

  void evict(NodeId n, ObjId k) {
    stores_[n].evict(k);
    log_event("CACHE_EVICT", n, k, 0);
  }

  // ---- forwarding ----------------------------------------------------

  NodeId next_hop(NodeId n, ObjId k, std::uint8_t hops,
                  bool* detoured = nullptr) {
    if (hops >= 250)  // safety net; descent rules below never loop
      return sp_next_hop(n, k);
    switch (policy_.forwarding) {
      case ForwardingPolicy::ShortestPath:
        return sp_next_hop(n, k);
      case ForwardingPolicy::VipMapped:
        return vip_next_hop(n, k);
      case ForwardingPolicy::PotentialBased:
        return potential_next_hop(n, k, detoured);
    }
    return sp_next_hop(n, k);
  }

  NodeId sp_next_hop(NodeId n, ObjId k) const {
    NodeId dst = cat_->src(k);
    const auto& dist = dist_to_[dst];
    if (dist[n] < 0) throw AplaneError("source unreachable");
    NodeId best = 0;
    for (NodeId v : graph_->neighbors(n))
      if (dist[v] == dist[n] - 1 && (best == 0 || v < best)) best = v;
    return best;
  }

  // VIP-mapped: among neighbors strictly closer to src(k) (keeps the
  // per-slot forwarding graph loop-free), take the one with the largest
  // windowed VIP transmission rate nu_nb^k; all-zero rates fall back to
  // the shortest-path next hop.
  NodeId vip_next_hop(NodeId n, ObjId k) {
    auto key = std::make_pair(n, k);
    auto it = per_slot_nexthop_.find(key);
    if (it != per_slot_nexthop_.end()) return it->second;
    const auto& dist = dist_to_[cat_->src(k)];
    NodeId best = 0;
    double best_nu = -1;
    for (NodeId v : graph_->neighbors(n)) {
      if (dist[v] != dist[n] - 1) continue;
      double nu = nu_at(graph_->link_index(n, v), k);
      if (best == 0 || nu > best_nu) {
        best = v;
        best_nu = nu;
      }
    }
    if (best == 0 || best_nu <= 0) best = sp_next_hop(n, k);
    per_slot_nexthop_[key] = best;
    return best;
  }

  // potential-based: an adjacent copy (cache or source) is taken
  // directly; otherwise descend toward src(k) along the neighbor with
  // the smallest hop distance to the nearest current copy, ties to the
  // smallest id.  Off-path moves are limited to that single terminal
  // hop: copies evict under churn, and an unrestricted gradient chase
  // can strand Interests in PIT wait cycles that never resolve.
  NodeId potential_next_hop(NodeId n, ObjId k, bool* detoured = nullptr) {
    NodeId adj = 0;
    for (NodeId v : graph_->neighbors(n))
      if ((v == cat_->src(k) || stores_[v].has(k)) && (adj == 0 || v < adj))
        adj = v;
    if (adj != 0) {
      if (detoured && adj != cat_->src(k)) *detoured = true;
      return adj;
    }
    auto it = per_slot_potential_.find(k);
    if (it == per_slot_potential_.end()) {
      std::vector<int> dist(graph_->node_count() + 1, -1);
      std::deque<NodeId> q;
      auto seed = [&](NodeId v) {
        if (dist[v] < 0) {
          dist[v] = 0;
          q.push_back(v);
        }
      };
      seed(cat_->src(k));
      for (NodeId v = 1; v <= graph_->node_count(); ++v)
        if (stores_[v].has(k)) seed(v);
      while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        for (NodeId v : graph_->neighbors(u))
          if (dist[v] < 0) {
            dist[v] = dist[u] + 1;
            q.push_back(v);
          }
      }
      it = per_slot_potential_.emplace(k, std::move(dist)).first;
    }
    const auto& dist = it->second;
    const auto& sdist = dist_to_[cat_->src(k)];
    NodeId best = 0;
    int best_pot = 0;
    for (NodeId v : graph_->neighbors(n)) {
      if (sdist[v] != sdist[n] - 1) continue;
      int pot = dist[v] < 0 ? std::numeric_limits<int>::max() : dist[v];
      if (best == 0 || pot < best_pot || (pot == best_pot && v < best)) {
        best = v;
        best_pot = pot;
      }
    }
    if (best == 0) best = sp_next_hop(n, k);
    return best;
  }

  // ---- VIP mapping state ---------------------------------------------

  double nu_at(int li, ObjId k) const { return nu_[li][k - 1]; }
  double vbar_at(NodeId n, ObjId k) const {
    return vbar_[static_cast<size_t>(n - 1) * cat_->object_count + (k - 1)];
  }

  // vbar tracks the windowed VIP inflow rate A + sum_in mu_hat, not the
  // instantaneous count: cached objects drain their V to zero, so raw
  // counts thrash the top set while inflow stays popularity-shaped.
  void update_mapping_averages(const VipDecision& dec,
                               const ArrivalBatch& arrivals) {
    for (int li = 0; li < graph_->link_count(); ++li) {
      auto& row = nu_[li];
      for (double& x : row) x *= (1.0 - alpha_);
      if (dec.links[li].object != 0)
        row[dec.links[li].object - 1] += alpha_ * dec.links[li].mu_hat;
    }
    const int K = cat_->object_count;
    for (double& x : vbar_) x *= (1.0 - alpha_);
    for (int li = 0; li < graph_->link_count(); ++li) {
      const auto& a = dec.links[li];
      if (a.object == 0) continue;
      NodeId to = graph_->link(li).to;
      vbar_[static_cast<size_t>(to - 1) * K + (a.object - 1)] +=
          alpha_ * a.mu_hat;
    }
    for (const auto& e : arrivals.entries)
      vbar_[static_cast<size_t>(e.node - 1) * K + (e.object - 1)] +=
          alpha_ * e.count;
  }

  const std::vector<char>& vip_top_set(NodeId n) {
    auto it = per_slot_topset_.find(n);
    if (it != per_slot_topset_.end()) return it->second;
    const int K = cat_->object_count;
    int cap = stores_[n].capacity();
    std::vector<char> top(K + 1, 0);
    if (cap > 0) {
      std::vector<ObjId> idx(K);
      std::iota(idx.begin(), idx.end(), 1);
      auto better = [&](ObjId a, ObjId b) {
        double va = vbar_at(n, a), vb = vbar_at(n, b);
        return va > vb || (va == vb && a < b);
      };
      if (cap < K) std::nth_element(idx.begin(), idx.begin() + cap, idx.end(),
                                    better);
      for (int i = 0; i < std::min(cap, K); ++i) top[idx[i]] = 1;
    }
    return per_slot_topset_.emplace(n, std::move(top)).first->second;
  }

  const NetworkGraph* graph_;
  const ObjectCatalog* cat_;
  PolicySpec policy_;
  VirtualPlane* vplane_;
  std::mt19937_64 rng_;
  std::ostream* log_;
  int chunks_ = 1;
  long slot_ = 0;

  std::vector<PitTable> pit_;
  std::vector<ContentStore> stores_;
  std::vector<std::deque<Packet>> queues_;
  std::vector<std::pair<int, Packet>> arrivals_;
  std::vector<RequestRec> requests_;
  std::vector<std::vector<int>> dist_to_;  // [dest][node]
  AplaneMetrics metrics_;

  // VIP mapping
  std::vector<std::vector<double>> nu_;
  std::vector<double> vbar_;
  double alpha_ = 1.0 / 64;
  std::map<std::pair<NodeId, ObjId>, NodeId> per_slot_nexthop_;
  std::map<ObjId, std::vector<int>> per_slot_potential_;
  std::map<NodeId, std::vector<char>> per_slot_topset_;
};

}  // namespace vipnet
