#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vipnet {

using NodeId = int;  // dense 1..N
using ObjId = int;   // dense 1..K

struct TopologyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Link {
  NodeId from = 0;
  NodeId to = 0;
  std::uint64_t cap_bits = 0;  // bits per slot
};

// Directed graph with per-link capacities, per-node cache sizes and cache
// read rates. Immutable after load; shared read-only across runs.
class NetworkGraph {
 public:
  int node_count() const { return n_; }
  int link_count() const { return static_cast<int>(links_.size()); }
  const std::vector<Link>& links() const { return links_; }
  const Link& link(int idx) const { return links_[idx]; }

  std::uint64_t cache_bits(NodeId n) const { return cache_bits_[n]; }
  double read_rate(NodeId n) const { return read_rate_[n]; }

  bool has_link(NodeId a, NodeId b) const {
    return link_index_.count({a, b}) != 0;
  }
  int link_index(NodeId a, NodeId b) const {
    auto it = link_index_.find({a, b});
    if (it == link_index_.end())
      throw TopologyError("no link (" + std::to_string(a) + "," +
                          std::to_string(b) + ")");
    return it->second;
  }
  // Capacity of the reverse link (b,a); the forwarding allocation budget
  // for VIPs flowing over (a,b).
  std::uint64_t reverse_cap_bits(NodeId a, NodeId b) const {
    return links_[link_index(b, a)].cap_bits;
  }

  const std::vector<int>& out_links(NodeId n) const { return out_links_[n]; }
  const std::vector<int>& in_links(NodeId n) const { return in_links_[n]; }
  const std::vector<NodeId>& neighbors(NodeId n) const { return nbrs_[n]; }

  const std::vector<NodeId>& requesters() const { return requesters_; }
  bool is_requester(NodeId n) const { return is_requester_[n]; }

  // Hop distances from every node to `to` (-1 if unreachable).
  std::vector<int> hop_distances_to(NodeId to) const {
    std::vector<int> dist(n_ + 1, -1);
    dist[to] = 0;
    std::deque<NodeId> q{to};
    while (!q.empty()) {
      NodeId u = q.front();
      q.pop_front();
      for (NodeId v : nbrs_[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push_back(v);
        }
      }
    }
    return dist;
  }

  static NetworkGraph build(int n, std::vector<Link> links,
                            std::vector<std::uint64_t> cache_bits,
                            std::vector<double> read_rate,
                            std::vector<NodeId> requesters) {
    NetworkGraph g;
    g.n_ = n;
    std::sort(links.begin(), links.end(), [](const Link& x, const Link& y) {
      return std::tie(x.from, x.to) < std::tie(y.from, y.to);
    });
    g.links_ = std::move(links);
    g.cache_bits_ = std::move(cache_bits);
    g.read_rate_ = std::move(read_rate);
    g.out_links_.assign(n + 1, {});
    g.in_links_.assign(n + 1, {});
    g.nbrs_.assign(n + 1, {});
    for (int i = 0; i < static_cast<int>(g.links_.size()); ++i) {
      const Link& l = g.links_[i];
      if (l.from < 1 || l.from > n || l.to < 1 || l.to > n)
        throw TopologyError("link endpoint out of range");
      if (l.from == l.to) throw TopologyError("self-loop link not allowed");
      if (l.cap_bits == 0) throw TopologyError("link capacity must be positive");
      if (!g.link_index_.emplace(std::make_pair(l.from, l.to), i).second)
        throw TopologyError("duplicate link declaration");
      g.out_links_[l.from].push_back(i);
      g.in_links_[l.to].push_back(i);
      g.nbrs_[l.from].push_back(l.to);
    }
    for (const Link& l : g.links_)
      if (!g.has_link(l.to, l.from))
        throw TopologyError("missing reverse link (" + std::to_string(l.to) +
                            "," + std::to_string(l.from) + ")");
    if (requesters.empty()) {
      for (NodeId v = 1; v <= n; ++v) requesters.push_back(v);
    }
    std::sort(requesters.begin(), requesters.end());
    requesters.erase(std::unique(requesters.begin(), requesters.end()),
                     requesters.end());
    g.is_requester_.assign(n + 1, false);
    for (NodeId v : requesters) {
      if (v < 1 || v > n) throw TopologyError("requester id out of range");
      g.is_requester_[v] = true;
    }
    g.requesters_ = std::move(requesters);
    return g;
  }

 private:
  int n_ = 0;
  std::vector<Link> links_;                       // sorted by (from,to)
  std::map<std::pair<NodeId, NodeId>, int> link_index_;
  std::vector<std::uint64_t> cache_bits_;         // [1..N]
  std::vector<double> read_rate_;                 // [1..N]
  std::vector<std::vector<int>> out_links_;
  std::vector<std::vector<int>> in_links_;
  std::vector<std::vector<NodeId>> nbrs_;
  std::vector<NodeId> requesters_;
  std::vector<bool> is_requester_;
};

// Object catalog: K equally-sized objects, fixed content sources, optional
// per-object allowed-link restrictions (empty = all links allowed).
class ObjectCatalog {
 public:
  int object_count = 0;                       // K
  std::uint64_t object_size_bits = 0;         // D
  std::uint64_t chunk_size_bits = 0;
  std::uint64_t interest_size_bits = 0;
  std::vector<NodeId> source;                 // [1..K]
  std::vector<std::set<int>> allowed_links;   // [1..K]; empty set = all

  NodeId src(ObjId k) const { return source[k]; }
  bool link_allowed(ObjId k, int link_idx) const {
    const auto& s = allowed_links[k];
    return s.empty() || s.count(link_idx) != 0;
  }
  bool restricted(ObjId k) const { return !allowed_links[k].empty(); }
  int chunks_per_object() const {
    return static_cast<int>(object_size_bits / chunk_size_bits);
  }
  double c_max(const NetworkGraph& g) const {
    double m = 0;
    for (const Link& l : g.links())
      m = std::max(m, static_cast<double>(l.cap_bits) /
                          static_cast<double>(object_size_bits));
    return m;
  }

  void validate(const NetworkGraph& g, std::vector<std::string>* warnings =
                                           nullptr) const {
    if (object_count < 1) throw TopologyError("object count must be >= 1");
    if (chunk_size_bits == 0 || object_size_bits % chunk_size_bits != 0)
      throw TopologyError("chunk size must divide object size");
    for (ObjId k = 1; k <= object_count; ++k) {
      if (source[k] < 1 || source[k] > g.node_count())
        throw TopologyError("source of object " + std::to_string(k) +
                            " is not a node");
      for (int li : allowed_links[k])
        if (li < 0 || li >= g.link_count())
          throw TopologyError("allowed link index out of range for object " +
                              std::to_string(k));
    }
    if (warnings) {
      for (NodeId v = 1; v <= g.node_count(); ++v) {
        if (g.cache_bits(v) >=
            static_cast<std::uint64_t>(object_count) * object_size_bits)
          warnings->push_back("node " + std::to_string(v) +
                              " can cache the entire catalog (L_n >= K*D)");
      }
    }
  }
};

struct Topology {
  NetworkGraph graph;
  ObjectCatalog catalog;
};

namespace detail {

inline std::map<std::string, std::string> parse_kv_fields(
    const std::vector<std::string>& toks, size_t first, int lineno) {
  std::map<std::string, std::string> kv;
  for (size_t i = first; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string::npos)
      throw TopologyError("line " + std::to_string(lineno) +
                          ": expected key=value, got '" + toks[i] + "'");
    kv[toks[i].substr(0, eq)] = toks[i].substr(eq + 1);
  }
  return kv;
}

}  // namespace detail

// Parses the line-oriented topology format.  Sections:
//   node <id> cache_bits=<u64> read_rate=<f64>
//   link <a> <b> cap_bits=<u64>            (reverse links declared explicitly)
//   object_defaults count=<u32> size_bits=<u64> chunk_bits=<u64> interest_bits=<u64>
//   source <k> <node>                      (absent entries filled by seed)
//   requester <node>                       (absent means all nodes request)
inline Topology parse_topology(std::istream& in, std::uint64_t source_seed = 0) {
  struct NodeDecl {
    std::uint64_t cache_bits = 0;
    double read_rate = 1.0;
  };
  std::map<NodeId, NodeDecl> nodes;
  std::vector<Link> links;
  std::vector<NodeId> requesters;
  std::map<ObjId, NodeId> sources;
  int obj_count = -1;
  std::uint64_t size_bits = 0, chunk_bits = 0, interest_bits = 0;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.empty()) continue;
    auto err = [&](const std::string& m) {
      return TopologyError("line " + std::to_string(lineno) + ": " + m);
    };
    try {
      if (toks[0] == "node") {
        if (toks.size() < 2) throw err("node id missing");
        NodeId id = std::stoi(toks[1]);
        auto kv = detail::parse_kv_fields(toks, 2, lineno);
        NodeDecl d;
        if (kv.count("cache_bits")) d.cache_bits = std::stoull(kv["cache_bits"]);
        if (kv.count("read_rate")) d.read_rate = std::stod(kv["read_rate"]);
        if (!nodes.emplace(id, d).second) throw err("duplicate node");
      } else if (toks[0] == "link") {
        if (toks.size() < 3) throw err("link endpoints missing");
        Link l;
        l.from = std::stoi(toks[1]);
        l.to = std::stoi(toks[2]);
        auto kv = detail::parse_kv_fields(toks, 3, lineno);
        if (!kv.count("cap_bits")) throw err("link missing cap_bits");
        l.cap_bits = std::stoull(kv["cap_bits"]);
        links.push_back(l);
      } else if (toks[0] == "object_defaults") {
        auto kv = detail::parse_kv_fields(toks, 1, lineno);
        if (!kv.count("count") || !kv.count("size_bits") ||
            !kv.count("chunk_bits") || !kv.count("interest_bits"))
          throw err("object_defaults needs count, size_bits, chunk_bits, interest_bits");
        obj_count = std::stoi(kv["count"]);
        size_bits = std::stoull(kv["size_bits"]);
        chunk_bits = std::stoull(kv["chunk_bits"]);
        interest_bits = std::stoull(kv["interest_bits"]);
      } else if (toks[0] == "source") {
        if (toks.size() < 3) throw err("source needs <k> <node>");
        sources[std::stoi(toks[1])] = std::stoi(toks[2]);
      } else if (toks[0] == "requester") {
        if (toks.size() < 2) throw err("requester needs <node>");
        requesters.push_back(std::stoi(toks[1]));
      } else {
        throw err("unknown directive '" + toks[0] + "'");
      }
    } catch (const TopologyError&) {
      throw;
    } catch (const std::exception& e) {
      throw err(std::string("parse error: ") + e.what());
    }
  }
  if (nodes.empty()) throw TopologyError("no nodes declared");
  if (obj_count < 0) throw TopologyError("missing object_defaults");

  int n = static_cast<int>(nodes.size());
  for (auto& [id, d] : nodes)
    if (id < 1 || id > n)
      throw TopologyError("node ids must be dense 1..N; got " +
                          std::to_string(id));
  std::vector<std::uint64_t> cache(n + 1, 0);
  std::vector<double> rr(n + 1, 1.0);
  for (auto& [id, d] : nodes) {
    cache[id] = d.cache_bits;
    rr[id] = d.read_rate;
  }

  Topology t;
  t.graph = NetworkGraph::build(n, std::move(links), std::move(cache),
                                std::move(rr), std::move(requesters));
  t.catalog.object_count = obj_count;
  t.catalog.object_size_bits = size_bits;
  t.catalog.chunk_size_bits = chunk_bits;
  t.catalog.interest_size_bits = interest_bits;
  t.catalog.source.assign(obj_count + 1, 0);
  t.catalog.allowed_links.assign(obj_count + 1, {});
  std::mt19937_64 rng(source_seed);
  std::uniform_int_distribution<int> unif(1, n);
  for (ObjId k = 1; k <= obj_count; ++k) {
    auto it = sources.find(k);
    t.catalog.source[k] = (it != sources.end()) ? it->second : unif(rng);
  }
  for (auto& [k, v] : sources)
    if (k < 1 || k > obj_count)
      throw TopologyError("source declared for unknown object " +
                          std::to_string(k));
  t.catalog.validate(t.graph);
  return t;
}

inline Topology load_topology(const std::string& path,
                              std::uint64_t source_seed = 0) {
  std::ifstream f(path);
  if (!f) throw TopologyError("cannot open topology file: " + path);
  return parse_topology(f, source_seed);
}

// Next hop on a minimum-hop path from `from` to `to`; ties broken by
// smallest node id.
inline NodeId shortest_path_next_hop(const NetworkGraph& g, NodeId from,
                                     NodeId to) {
  if (from == to) return to;
  auto dist = g.hop_distances_to(to);
  if (dist[from] < 0)
    throw TopologyError("destination " + std::to_string(to) +
                        " unreachable from " + std::to_string(from));
  NodeId best = 0;
  for (NodeId v : g.neighbors(from)) {
    if (dist[v] == dist[from] - 1 && (best == 0 || v < best)) best = v;
  }
  return best;
}

// Precomputed next-hop table: next_hop[to][from].
inline std::vector<std::vector<NodeId>> all_next_hops(const NetworkGraph& g) {
  std::vector<std::vector<NodeId>> nh(g.node_count() + 1);
  for (NodeId to = 1; to <= g.node_count(); ++to) {
    auto dist = g.hop_distances_to(to);
    nh[to].assign(g.node_count() + 1, 0);
    nh[to][to] = to;
    for (NodeId from = 1; from <= g.node_count(); ++from) {
      if (from == to || dist[from] < 0) continue;
      NodeId best = 0;
      for (NodeId v : g.neighbors(from))
        if (dist[v] == dist[from] - 1 && (best == 0 || v < best)) best = v;
      nh[to][from] = best;
    }
  }
  return nh;
}

}  // namespace vipnet
