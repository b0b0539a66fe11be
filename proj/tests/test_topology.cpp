#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "vipnet/builtin_topologies.hpp"
#include "vipnet/topology.hpp"

using namespace vipnet;

namespace {

Topology parse_str(const std::string& text, std::uint64_t seed = 0) {
  std::istringstream in(text);
  return parse_topology(in, seed);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const std::string kTwoNode =
    "node 1 cache_bits=0\n"
    "node 2 cache_bits=0\n"
    "link 1 2 cap_bits=500000000\n"
    "link 2 1 cap_bits=500000000\n"
    "object_defaults count=1 size_bits=40000000 chunk_bits=400000 "
    "interest_bits=1000\n"
    "source 1 2\n";

}  // namespace

TEST_CASE("minimal symmetric two-node graph parses") {
  Topology t = parse_str(kTwoNode);
  CHECK(t.graph.node_count() == 2);
  CHECK(t.graph.link_count() == 2);
  CHECK(t.catalog.object_count == 1);
  CHECK(t.catalog.src(1) == 2);
  CHECK(t.graph.has_link(1, 2));
  CHECK(t.graph.reverse_cap_bits(1, 2) == 500000000ULL);
  CHECK(t.catalog.chunks_per_object() == 100);
}

TEST_CASE("missing reverse link is a validation error") {
  std::string text =
      "node 1 cache_bits=0\n"
      "node 2 cache_bits=0\n"
      "link 1 2 cap_bits=1000\n"
      "object_defaults count=1 size_bits=100 chunk_bits=100 interest_bits=10\n"
      "source 1 1\n";
  REQUIRE_THROWS_WITH(parse_str(text),
                      Catch::Matchers::ContainsSubstring("reverse link"));
}

TEST_CASE("parse errors carry line numbers") {
  REQUIRE_THROWS_WITH(parse_str("frobnicate 1\n"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  REQUIRE_THROWS_WITH(parse_str("node 1\nlink 1 2\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("structural invariants rejected") {
  SECTION("self loop") {
    std::string text =
        "node 1 cache_bits=0\n"
        "link 1 1 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 1\n";
    REQUIRE_THROWS_AS(parse_str(text), TopologyError);
  }
  SECTION("zero capacity") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "link 1 2 cap_bits=0\nlink 2 1 cap_bits=0\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 1\n";
    REQUIRE_THROWS_AS(parse_str(text), TopologyError);
  }
  SECTION("source outside graph") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 7\n";
    REQUIRE_THROWS_AS(parse_str(text), TopologyError);
  }
  SECTION("chunk size must divide object size") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=3 interest_bits=1\n"
        "source 1 1\n";
    REQUIRE_THROWS_AS(parse_str(text), TopologyError);
  }
}

TEST_CASE("full-catalog cache triggers a warning, not an error") {
  std::string text =
      "node 1 cache_bits=100\nnode 2 cache_bits=0\n"
      "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
      "object_defaults count=2 size_bits=10 chunk_bits=10 interest_bits=1\n"
      "source 1 1\nsource 2 1\n";
  Topology t = parse_str(text);
  std::vector<std::string> warnings;
  t.catalog.validate(t.graph, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("node 1") != std::string::npos);
}

TEST_CASE("shipped abilene file matches the adjacency reference") {
  Topology t = load_topology(std::string(VIPNET_DATA_DIR) + "/abilene.topo", 1);
  REQUIRE(t.graph.node_count() == 11);
  std::ostringstream got;
  got << t.graph.node_count() << "\n";
  for (const Link& l : t.graph.links())
    if (l.from < l.to) got << l.from << " " << l.to << "\n";
  CHECK(got.str() ==
        read_file(std::string(VIPNET_DATA_DIR) + "/abilene_adjacency.ref"));
}

TEST_CASE("shipped data files are byte-identical with the generator") {
  for (auto name : {TopologyName::Service, TopologyName::Abilene,
                    TopologyName::GEANT, TopologyName::DTelekom}) {
    std::string path =
        std::string(VIPNET_DATA_DIR) + "/" + to_string(name) + ".topo";
    CHECK(read_file(path) == render_builtin(name));
  }
}

TEST_CASE("builtin shapes") {
  BuiltinOptions opt;
  opt.object_count = 5;
  SECTION("service pins sources and requesters") {
    Topology t = builtin(TopologyName::Service, opt);
    CHECK(t.graph.node_count() == 8);
    for (ObjId k = 1; k <= 5; ++k) CHECK(t.catalog.src(k) == 1);
    CHECK(t.graph.requesters() == std::vector<NodeId>{4, 5, 6, 7, 8});
    CHECK_FALSE(t.graph.is_requester(1));
  }
  SECTION("abilene has 11 nodes, 28 directed links, all requesters") {
    Topology t = builtin(TopologyName::Abilene, opt);
    CHECK(t.graph.node_count() == 11);
    CHECK(t.graph.link_count() == 28);
    CHECK(t.graph.requesters().size() == 11);
  }
  SECTION("geant default cache holds 400 objects") {
    Topology t = builtin(TopologyName::GEANT, opt);
    CHECK(t.graph.node_count() == 22);
    CHECK(t.graph.link_count() == 70);
    CHECK(t.graph.cache_bits(1) / t.catalog.object_size_bits == 400);
  }
  SECTION("dtelekom shape") {
    Topology t = builtin(TopologyName::DTelekom, opt);
    CHECK(t.graph.node_count() == 68);
    CHECK(t.graph.link_count() == 272);
  }
  SECTION("abilene/geant default cache is 5 GB") {
    Topology t = builtin(TopologyName::Abilene, opt);
    CHECK(t.graph.cache_bits(3) == 40000000000ULL);
  }
}

TEST_CASE("builtin source assignment is seed-deterministic") {
  BuiltinOptions opt;
  opt.object_count = 50;
  opt.source_seed = 7;
  Topology a = builtin(TopologyName::Abilene, opt);
  Topology b = builtin(TopologyName::Abilene, opt);
  CHECK(a.catalog.source == b.catalog.source);
  opt.source_seed = 8;
  Topology c = builtin(TopologyName::Abilene, opt);
  CHECK(a.catalog.source != c.catalog.source);
  for (ObjId k = 1; k <= 50; ++k) {
    CHECK(a.catalog.src(k) >= 1);
    CHECK(a.catalog.src(k) <= 11);
  }
}

TEST_CASE("round trip: re-parsing rendered text reproduces the graph") {
  std::string text = render_builtin(TopologyName::GEANT);
  Topology a = parse_str(text, 3);
  Topology b = parse_str(text, 3);
  CHECK(a.graph.node_count() == b.graph.node_count());
  CHECK(a.graph.links().size() == b.graph.links().size());
  for (int i = 0; i < a.graph.link_count(); ++i) {
    CHECK(a.graph.link(i).from == b.graph.link(i).from);
    CHECK(a.graph.link(i).to == b.graph.link(i).to);
    CHECK(a.graph.link(i).cap_bits == b.graph.link(i).cap_bits);
  }
  CHECK(a.catalog.source == b.catalog.source);
}

TEST_CASE("shortest path next hop") {
  SECTION("direct neighbor") {
    Topology t = parse_str(kTwoNode);
    CHECK(shortest_path_next_hop(t.graph, 1, 2) == 2);
  }
  SECTION("forced path on a line") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\nnode 3 cache_bits=0\n"
        "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
        "link 2 3 cap_bits=5\nlink 3 2 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 3\n";
    Topology t = parse_str(text);
    CHECK(shortest_path_next_hop(t.graph, 1, 3) == 2);
  }
  SECTION("diamond tie breaks to the smaller id") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "node 3 cache_bits=0\nnode 4 cache_bits=0\n"
        "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
        "link 1 3 cap_bits=5\nlink 3 1 cap_bits=5\n"
        "link 2 4 cap_bits=5\nlink 4 2 cap_bits=5\n"
        "link 3 4 cap_bits=5\nlink 4 3 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 4\n";
    Topology t = parse_str(text);
    CHECK(shortest_path_next_hop(t.graph, 1, 4) == 2);
  }
  SECTION("unreachable destination throws") {
    std::string text =
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "node 3 cache_bits=0\nnode 4 cache_bits=0\n"
        "link 1 2 cap_bits=5\nlink 2 1 cap_bits=5\n"
        "link 3 4 cap_bits=5\nlink 4 3 cap_bits=5\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 4\n";
    Topology t = parse_str(text);
    REQUIRE_THROWS_AS(shortest_path_next_hop(t.graph, 1, 4), TopologyError);
  }
}

TEST_CASE("next-hop table agrees with the single-pair op") {
  Topology t = builtin(TopologyName::Abilene, BuiltinOptions{.object_count = 1});
  auto nh = all_next_hops(t.graph);
  for (NodeId to = 1; to <= 11; ++to)
    for (NodeId from = 1; from <= 11; ++from)
      CHECK(nh[to][from] == shortest_path_next_hop(t.graph, from, to));
}

TEST_CASE("hop distances are BFS-consistent") {
  Topology t = builtin(TopologyName::GEANT, BuiltinOptions{.object_count = 1});
  for (NodeId to = 1; to <= t.graph.node_count(); ++to) {
    auto dist = t.graph.hop_distances_to(to);
    CHECK(dist[to] == 0);
    for (const Link& l : t.graph.links()) {
      REQUIRE(dist[l.from] >= 0);
      CHECK(std::abs(dist[l.from] - dist[l.to]) <= 1);
    }
  }
}

TEST_CASE("c_max accessor") {
  Topology t = parse_str(kTwoNode);
  CHECK(t.catalog.c_max(t.graph) == Catch::Approx(12.5));
}
