#pragma once

// Built-in experiment topologies.  Adjacency lists were transcribed once
// into this header (and into the shipped data/*.topo files, which a test
// keeps byte-identical with the generator below).  All built-in links use
// 500 Mb/slot; defaults: D = 5 MB objects in 50 KB chunks, 125 B Interests.

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vipnet/topology.hpp"

namespace vipnet {

enum class TopologyName { Service, Abilene, GEANT, DTelekom };

inline TopologyName topology_name_from_string(const std::string& s) {
  if (s == "service" || s == "Service") return TopologyName::Service;
  if (s == "abilene" || s == "Abilene") return TopologyName::Abilene;
  if (s == "geant" || s == "GEANT") return TopologyName::GEANT;
  if (s == "dtelekom" || s == "DTelekom") return TopologyName::DTelekom;
  throw TopologyError("unknown topology name: " + s);
}

inline std::string to_string(TopologyName n) {
  switch (n) {
    case TopologyName::Service: return "service";
    case TopologyName::Abilene: return "abilene";
    case TopologyName::GEANT: return "geant";
    case TopologyName::DTelekom: return "dtelekom";
  }
  return "?";
}

namespace builtin_data {

struct Adjacency {
  int nodes;
  // undirected edges; both directions are emitted
  std::vector<std::pair<int, int>> edges;
  std::vector<int> requesters;       // empty = all nodes
  bool all_sources_node1;
  std::uint64_t default_cache_bits;  // §5 default for this topology
};

inline const Adjacency& adjacency(TopologyName name) {
  // Service: NODE 1 is the content source, two router tiers, five
  // CONSUMER leaves (nodes 4..8) which are the only requesters.
  static const Adjacency service{
      8,
      {{1, 2}, {1, 3}, {2, 4}, {2, 5}, {2, 6}, {3, 6}, {3, 7}, {3, 8}},
      {4, 5, 6, 7, 8},
      true,
      40000000000ULL};  // 5 GB

  // Abilene (Internet2) backbone: 11 PoPs, 14 undirected links.
  // 1 Seattle 2 Sunnyvale 3 Los Angeles 4 Denver 5 Kansas City 6 Houston
  // 7 Chicago 8 Indianapolis 9 Atlanta 10 Washington DC 11 New York
  static const Adjacency abilene{
      11,
      {{1, 2}, {1, 4}, {2, 3}, {2, 4}, {3, 6}, {4, 5}, {5, 6},
       {5, 8}, {6, 9}, {7, 8}, {7, 11}, {8, 9}, {9, 10}, {10, 11}},
      {},
      false,
      40000000000ULL};  // 5 GB

  // GEANT: 22-node pan-European research backbone, 35 undirected links.
  static const Adjacency geant{
      22,
      {{1, 2},   {1, 3},   {1, 4},   {2, 4},   {2, 5},   {2, 12},  {3, 6},
       {3, 7},   {4, 8},   {4, 9},   {5, 10},  {5, 11},  {5, 19},  {6, 8},
       {6, 12},  {7, 13},  {7, 14},  {8, 15},  {9, 10},  {9, 16},  {10, 17},
       {11, 18}, {12, 13}, {12, 19}, {13, 20}, {14, 21}, {14, 22}, {15, 16},
       {16, 22}, {17, 18}, {17, 22}, {18, 21}, {19, 20}, {20, 21}, {21, 22}},
      {},
      false,
      16000000000ULL};  // 2 GB

  // DTelekom: 68-node German backbone abstraction, 136 undirected links.
  static const Adjacency dtelekom = [] {
    Adjacency a;
    a.nodes = 68;
    a.requesters = {};
    a.all_sources_node1 = false;
    a.default_cache_bits = 16000000000ULL;  // 2 GB
    const char* edge_str =
        "1,2;1,16;1,17;1,68;2,3;2,5;2,28;3,4;4,5;4,10;4,22;4,31;4,50;4,62;"
        "5,6;5,51;5,54;5,68;6,7;6,40;6,64;7,8;7,9;7,11;7,30;8,9;8,16;8,41;"
        "9,10;9,33;10,11;11,12;11,35;11,39;11,50;11,60;12,13;12,43;13,14;"
        "13,33;13,58;13,61;14,15;15,16;15,19;15,38;16,17;16,21;16,28;17,18;"
        "18,19;18,39;19,20;19,43;19,44;19,50;20,21;20,57;20,65;20,67;21,22;"
        "21,29;21,44;21,58;22,23;22,50;23,24;23,56;23,62;24,25;24,60;25,26;"
        "26,27;26,29;26,56;27,28;27,59;27,64;28,29;28,59;29,30;29,32;30,31;"
        "30,53;31,32;31,66;32,33;33,34;34,35;34,55;34,62;35,36;35,56;35,60;"
        "36,37;37,38;38,39;39,40;40,41;41,42;41,59;41,65;42,43;43,44;44,45;"
        "45,46;46,47;47,48;47,62;48,49;48,51;48,61;49,50;49,52;50,51;50,65;"
        "51,52;52,53;53,54;54,55;55,56;56,57;57,58;57,63;58,59;58,60;58,62;"
        "59,60;60,61;61,62;62,63;63,64;64,65;65,66;66,67;67,68";
    std::istringstream ss(edge_str);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
      auto c = tok.find(',');
      a.edges.emplace_back(std::stoi(tok.substr(0, c)),
                           std::stoi(tok.substr(c + 1)));
    }
    return a;
  }();

  switch (name) {
    case TopologyName::Service: return service;
    case TopologyName::Abilene: return abilene;
    case TopologyName::GEANT: return geant;
    case TopologyName::DTelekom: return dtelekom;
  }
  throw TopologyError("unknown builtin topology");
}

}  // namespace builtin_data

struct BuiltinOptions {
  std::uint64_t cache_size_bits = 0;  // 0 = topology default
  int object_count = 3000;
  std::uint64_t cap_bits = 500000000ULL;        // 500 Mb/slot
  std::uint64_t object_size_bits = 40000000ULL; // 5 MB
  std::uint64_t chunk_size_bits = 400000ULL;    // 50 KB
  std::uint64_t interest_size_bits = 1000ULL;   // 125 B
  double read_rate = 1.0;
  std::uint64_t source_seed = 1;
};

// Renders a built-in topology as topology-file text; builtin() and the
// shipped data files both come from this.
inline std::string render_builtin(TopologyName name,
                                  const BuiltinOptions& opt = {}) {
  const auto& adj = builtin_data::adjacency(name);
  std::uint64_t cache =
      opt.cache_size_bits ? opt.cache_size_bits : adj.default_cache_bits;
  std::ostringstream out;
  out << "# builtin topology: " << to_string(name) << "\n";
  for (int v = 1; v <= adj.nodes; ++v)
    out << "node " << v << " cache_bits=" << cache
        << " read_rate=" << opt.read_rate << "\n";
  for (auto [a, b] : adj.edges) {
    out << "link " << a << " " << b << " cap_bits=" << opt.cap_bits << "\n";
    out << "link " << b << " " << a << " cap_bits=" << opt.cap_bits << "\n";
  }
  out << "object_defaults count=" << opt.object_count
      << " size_bits=" << opt.object_size_bits
      << " chunk_bits=" << opt.chunk_size_bits
      << " interest_bits=" << opt.interest_size_bits << "\n";
  if (adj.all_sources_node1)
    for (int k = 1; k <= opt.object_count; ++k)
      out << "source " << k << " 1\n";
  for (int r : adj.requesters) out << "requester " << r << "\n";
  return out.str();
}

// Built-in instance.  Service pins all sources to NODE 1 and restricts
// requesters to the CONSUMER nodes; the others draw src(k) independently
// and uniformly over all nodes from source_seed.
inline Topology builtin(TopologyName name, const BuiltinOptions& opt = {}) {
  std::istringstream in(render_builtin(name, opt));
  return parse_topology(in, opt.source_seed);
}

}  // namespace vipnet
