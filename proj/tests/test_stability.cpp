#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "stability_testutil.hpp"
#include "vipnet/stability.hpp"
#include "vipnet/topology.hpp"

using namespace vipnet;

namespace {

// two nodes: 1 = requester, 2 = source of every object; C/D = 2 both ways
Topology two_node(int K = 1, std::uint64_t cache_bits = 0) {
  std::ostringstream text;
  text << "node 1 cache_bits=" << cache_bits << "\nnode 2 cache_bits=0\n"
       << "link 1 2 cap_bits=80000000\nlink 2 1 cap_bits=80000000\n"
       << "object_defaults count=" << K
       << " size_bits=40000000 chunk_bits=400000 interest_bits=1000\n";
  for (int k = 1; k <= K; ++k) text << "source " << k << " 2\n";
  std::istringstream in(text.str());
  return parse_topology(in);
}

std::vector<std::vector<double>> lambda_matrix(int N, int K) {
  return std::vector<std::vector<double>>(N + 1,
                                          std::vector<double>(K + 1, 0.0));
}

}  // namespace

TEST_CASE("caching set enumeration") {
  SECTION("K=3, i=1 -> 4 sets") {
    auto sets = enumerate_caching_sets(3, 1);
    REQUIRE(sets.size() == 4);
    CHECK(sets[0].objects.empty());
    CHECK(sets[1].objects == std::vector<ObjId>{1});
    CHECK(sets[2].objects == std::vector<ObjId>{2});
    CHECK(sets[3].objects == std::vector<ObjId>{3});
  }
  SECTION("K=4, i=2 -> 11 sets") {
    auto sets = enumerate_caching_sets(4, 2);
    CHECK(sets.size() == 11);
  }
  SECTION("i=0 -> only the empty set") {
    auto sets = enumerate_caching_sets(4, 0);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].objects.empty());
  }
  SECTION("enumeration is deterministic and duplicate-free") {
    auto sets = enumerate_caching_sets(5, 3);
    CHECK(sets.size() == 1 + 5 + 10 + 10);
    for (size_t i = 1; i < sets.size(); ++i)
      CHECK(sets[i - 1].objects != sets[i].objects);
  }
  SECTION("cap enforced") {
    REQUIRE_THROWS_AS(enumerate_caching_sets(40, 20, 1000), StabilityError);
  }
}

TEST_CASE("two-node feasibility examples") {
  Topology t = two_node();
  SECTION("lambda=0 is trivially feasible with zero flow") {
    auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog,
                                                 lambda_matrix(2, 1), 1.0);
    auto res = check_feasibility(inst, 0.0);
    REQUIRE(res.outcome == FeasibilityOutcome::Feasible);
    double mass = 0;
    for (const auto& row : res.solution.f)
      for (double x : row) mass += x;
    CHECK(mass <= 1e-9);
  }
  SECTION("lambda=1.5 feasible, 2.5 infeasible at theta=1") {
    auto lam = lambda_matrix(2, 1);
    lam[1][1] = 1.5;
    auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
    CHECK(check_feasibility(inst, 0.0).outcome ==
          FeasibilityOutcome::Feasible);
    inst.lambda[1][1] = 2.5;
    CHECK(check_feasibility(inst, 0.0).outcome ==
          FeasibilityOutcome::Infeasible);
  }
  SECTION("theta=2 admits lambda=3") {
    auto lam = lambda_matrix(2, 1);
    lam[1][1] = 3.0;
    auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 2.0);
    CHECK(check_feasibility(inst, 0.0).outcome ==
          FeasibilityOutcome::Feasible);
    auto one = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
    CHECK(check_feasibility(one, 0.0).outcome ==
          FeasibilityOutcome::Infeasible);
  }
  SECTION("a cache closes the gap") {
    Topology tc = two_node(1, 40000000ULL);
    auto lam = lambda_matrix(2, 1);
    lam[1][1] = 2.5;  // C/D = 2 plus r = 1 of cache drain
    auto inst =
        StabilityInstance::uniform_theta(tc.graph, tc.catalog, lam, 1.0);
    auto res = check_feasibility(inst, 0.0);
    REQUIRE(res.outcome == FeasibilityOutcome::Feasible);
    CHECK(res.solution.cache_share(1, 1) > 0.4);
  }
}

TEST_CASE("feasible certificates verify by substitution") {
  std::mt19937_64 rng(2024);
  int feasible_seen = 0;
  for (int trial = 0; trial < 40; ++trial) {
    auto si = testutil::random_instance(rng);
    auto inst = StabilityInstance::uniform_theta(si.topo.graph,
                                                 si.topo.catalog, si.lambda,
                                                 1.0);
    auto res = check_feasibility(inst, 0.0);
    REQUIRE(res.outcome != FeasibilityOutcome::SolverFailure);
    if (res.outcome == FeasibilityOutcome::Feasible) {
      ++feasible_seen;
      CHECK(certificate_violation(inst, res.solution, 0.0) <= 1e-9);
    }
  }
  CHECK(feasible_seen > 0);
}

TEST_CASE("max_load_scaling") {
  Topology t = two_node();
  auto lam = lambda_matrix(2, 1);
  lam[1][1] = 1.0;
  auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
  SECTION("two-node boundary at rho* = 2") {
    CHECK(max_load_scaling(inst) == Catch::Approx(2.0).margin(2e-4));
  }
  SECTION("doubling capacities doubles rho*") {
    std::istringstream in(
        "node 1 cache_bits=0\nnode 2 cache_bits=0\n"
        "link 1 2 cap_bits=160000000\nlink 2 1 cap_bits=160000000\n"
        "object_defaults count=1 size_bits=40000000 chunk_bits=400000 "
        "interest_bits=1000\n"
        "source 1 2\n");
    Topology t2 = parse_topology(in);
    auto inst2 =
        StabilityInstance::uniform_theta(t2.graph, t2.catalog, lam, 1.0);
    CHECK(max_load_scaling(inst2) == Catch::Approx(4.0).margin(4e-4));
  }
  SECTION("monotone in theta") {
    auto inst2 = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 2.0);
    CHECK(max_load_scaling(inst2) >= max_load_scaling(inst) - 1e-4);
  }
  SECTION("zero lambda rejected") {
    auto zero =
        StabilityInstance::uniform_theta(t.graph, t.catalog,
                                         lambda_matrix(2, 1), 1.0);
    REQUIRE_THROWS_AS(max_load_scaling(zero), StabilityError);
  }
}

TEST_CASE("theta monotonicity of feasibility on random instances") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> td(1.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto si = testutil::random_instance(rng);
    const int N = si.topo.graph.node_count();
    const int K = si.topo.catalog.object_count;
    double t1 = td(rng), t2 = t1 + td(rng) - 1.0;
    auto lo = StabilityInstance::uniform_theta(si.topo.graph, si.topo.catalog,
                                               si.lambda, t1);
    auto hi = StabilityInstance::uniform_theta(si.topo.graph, si.topo.catalog,
                                               si.lambda, t2);
    // push a few components even higher; monotonicity is componentwise
    std::uniform_int_distribution<int> nd(1, N), kd(1, K);
    for (int j = 0; j < 3; ++j) hi.theta[nd(rng)][kd(rng)] += td(rng);
    auto rlo = check_feasibility(lo, 0.0);
    auto rhi = check_feasibility(hi, 0.0);
    REQUIRE(rlo.outcome != FeasibilityOutcome::SolverFailure);
    REQUIRE(rhi.outcome != FeasibilityOutcome::SolverFailure);
    if (rlo.outcome == FeasibilityOutcome::Feasible)
      CHECK(rhi.outcome == FeasibilityOutcome::Feasible);
  }
}

TEST_CASE("theta=1 program matches the independently coded unscaled region") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    auto si = testutil::random_instance(rng);
    auto inst = StabilityInstance::uniform_theta(si.topo.graph,
                                                 si.topo.catalog, si.lambda,
                                                 1.0);
    auto scaled = check_feasibility(inst, 0.0);
    auto plain = testutil::unscaled_feasible(si, 0.0);
    REQUIRE(scaled.outcome != FeasibilityOutcome::SolverFailure);
    REQUIRE(plain != FeasibilityOutcome::SolverFailure);
    CHECK(scaled.outcome == plain);
  }
}

TEST_CASE("grid-search oracle agreement on tiny instances") {
  const double step = 0.01;
  SECTION("two nodes, K=2, cache slot at the requester") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ld(0.0, 2.0);
    for (int trial = 0; trial < 8; ++trial) {
      std::istringstream in(
          "node 1 cache_bits=40000000\nnode 2 cache_bits=0\n"
          "link 1 2 cap_bits=40000000\nlink 2 1 cap_bits=40000000\n"
          "object_defaults count=2 size_bits=40000000 chunk_bits=400000 "
          "interest_bits=1000\n"
          "source 1 2\nsource 2 2\n");
      Topology t = parse_topology(in);
      auto lam = lambda_matrix(2, 2);
      lam[1][1] = std::floor(ld(rng) * 100) / 100.0;
      lam[1][2] = std::floor(ld(rng) * 100) / 100.0;
      auto inst =
          StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
      testutil::GridOracle oracle(inst, step);
      bool grid = oracle.feasible();
      auto lp0 = check_feasibility(inst, 0.0);
      auto lp2 = check_feasibility(inst, 2 * step);
      REQUIRE(lp0.outcome != FeasibilityOutcome::SolverFailure);
      REQUIRE(lp2.outcome != FeasibilityOutcome::SolverFailure);
      if (grid) CHECK(lp0.outcome == FeasibilityOutcome::Feasible);
      if (lp2.outcome == FeasibilityOutcome::Feasible) CHECK(grid);
    }
  }
  SECTION("three-node line, K=1") {
    std::istringstream in(
        "node 1 cache_bits=0\nnode 2 cache_bits=0\nnode 3 cache_bits=0\n"
        "link 1 2 cap_bits=40000000\nlink 2 1 cap_bits=40000000\n"
        "link 2 3 cap_bits=40000000\nlink 3 2 cap_bits=40000000\n"
        "object_defaults count=1 size_bits=40000000 chunk_bits=400000 "
        "interest_bits=1000\n"
        "source 1 3\n");
    Topology t = parse_topology(in);
    for (double l1 : {0.3, 0.6, 0.97}) {
      for (double l2 : {0.0, 0.5, 0.99}) {
        auto lam = lambda_matrix(3, 1);
        lam[1][1] = l1;
        lam[2][1] = l2;
        auto inst =
            StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
        testutil::GridOracle oracle(inst, step);
        bool grid = oracle.feasible();
        auto lp0 = check_feasibility(inst, 0.0);
        auto lp2 = check_feasibility(inst, 2 * step);
        if (grid) CHECK(lp0.outcome == FeasibilityOutcome::Feasible);
        if (lp2.outcome == FeasibilityOutcome::Feasible) CHECK(grid);
      }
    }
  }
}

TEST_CASE("randomized policy sampler") {
  Topology t = two_node(2, 40000000ULL);
  FlowSolution sol;
  sol.f.assign(t.graph.link_count(), std::vector<double>(2, 0.0));
  int li = t.graph.link_index(1, 2);
  sol.f[li][0] = 3.0;
  sol.f[li][1] = 1.0;
  sol.combos.assign(3, {});
  sol.beta.assign(3, {});
  sol.combos[1] = enumerate_caching_sets(2, 1);  // {}, {1}, {2}
  sol.beta[1] = {0.25, 0.5, 0.25};
  sol.combos[2] = enumerate_caching_sets(2, 0);
  sol.beta[2] = {1.0};

  RandomizedPolicy pol(t.graph, sol, 99);
  const long T = 100000;
  double mu1 = 0, mu2 = 0, cache1 = 0;
  long idle_other = 0;
  int other = t.graph.link_index(2, 1);
  for (long s = 0; s < T; ++s) {
    VipDecision dec = pol.sample();
    if (dec.links[li].object == 1) mu1 += dec.links[li].mu;
    if (dec.links[li].object == 2) mu2 += dec.links[li].mu;
    CHECK(dec.links[li].mu == Catch::Approx(4.0));
    if (dec.links[other].object == 0) ++idle_other;
    for (ObjId k : dec.cached[1]) cache1 += (k == 1);
    CHECK(dec.cached[2].empty());
  }
  CHECK(idle_other == T);  // zero-flow link never serves
  CHECK(mu1 / T == Catch::Approx(3.0).epsilon(0.01));
  CHECK(mu2 / T == Catch::Approx(1.0).epsilon(0.01));
  CHECK(cache1 / T == Catch::Approx(0.5).epsilon(0.01));
  CHECK(pol.expected_mu(li, 1) == Catch::Approx(3.0));
  CHECK(pol.expected_cache(1, 1) == Catch::Approx(0.5));

  SECTION("degenerate beta caches deterministically") {
    sol.beta[1] = {0.0, 1.0, 0.0};
    RandomizedPolicy det(t.graph, sol, 4);
    for (int s = 0; s < 100; ++s)
      CHECK(det.sample().cached[1] == std::vector<ObjId>{1});
  }
}

TEST_CASE("certificate-driven randomized policy stabilizes the vplane") {
  Topology t = two_node(1);
  auto lam = lambda_matrix(2, 1);
  lam[1][1] = 1.2;
  auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog, lam, 1.0);
  auto res = check_feasibility(inst, 0.3);
  REQUIRE(res.outcome == FeasibilityOutcome::Feasible);
  RandomizedPolicy pol(t.graph, res.solution, 17);
  DemandModel demand(t.graph, 1, 1.2, 0.75, 3);
  VipState state(2, 1);
  ThetaPolicy theta = ThetaPolicy::constant(2, 1, 1.0);
  const long T = 100000;
  double avg_sum = 0;
  for (long s = 1; s <= T; ++s) {
    VipDecision dec = pol.sample();
    resolve_transmissions(state, t.graph, dec);
    step_vip_counts(state, theta, dec, demand.sample_arrivals(s), t.graph,
                    t.catalog);
    avg_sum += state.total();
  }
  CHECK(avg_sum / T < 50.0);  // bounded time-averaged backlog
}

TEST_CASE("lyapunov bound") {
  Topology t = two_node();  // C/D = 2 each way
  SECTION("hand-evaluated per-node term: (4 + 16 + 4)/2 = 12") {
    std::vector<double> amax{0.0, 1.0, 0.0};
    auto theta = std::vector<std::vector<double>>(3,
                                                  std::vector<double>(2, 1.0));
    auto rep = lyapunov_bound(t.graph, t.catalog, amax, theta, 0.5);
    const auto& pn = rep.nodes[1];
    CHECK(pn.mu_out_max == Catch::Approx(2.0));
    CHECK(pn.mu_in_max == Catch::Approx(2.0));
    CHECK(pn.r_max == Catch::Approx(1.0));
    double t2 = (pn.arrival_max + pn.mu_in_max) / pn.theta_min + pn.r_max;
    double term = 0.5 * (pn.mu_out_max * pn.mu_out_max + t2 * t2 +
                         2.0 * pn.mu_out_max * pn.r_max);
    CHECK(term == Catch::Approx(12.0));
    CHECK(rep.bound == Catch::Approx(2.0 * rep.B / 0.5));
  }
  SECTION("large theta shrinks B toward the theta-free part") {
    std::vector<double> amax{0.0, 5.0, 5.0};
    auto theta1 = std::vector<std::vector<double>>(3,
                                                   std::vector<double>(2, 1.0));
    auto thetaBig =
        std::vector<std::vector<double>>(3, std::vector<double>(2, 1e9));
    auto r1 = lyapunov_bound(t.graph, t.catalog, amax, theta1, 1.0);
    auto rb = lyapunov_bound(t.graph, t.catalog, amax, thetaBig, 1.0);
    CHECK(rb.B < r1.B);
    double expect = 0;
    for (NodeId n = 1; n <= 2; ++n) {
      double mo = 2.0, r = 1.0;
      expect += mo * mo + r * r + 2.0 * mo * r;
    }
    expect /= 2.0 * 2.0;
    CHECK(rb.B == Catch::Approx(expect).epsilon(1e-6));
  }
  SECTION("empty network gives a zero bound") {
    std::istringstream in(
        "node 1 cache_bits=0 read_rate=0\n"
        "object_defaults count=1 size_bits=10 chunk_bits=10 interest_bits=1\n"
        "source 1 1\n");
    Topology empty = parse_topology(in);
    std::vector<double> amax{0.0, 0.0};
    auto theta =
        std::vector<std::vector<double>>(2, std::vector<double>(2, 1.0));
    auto rep = lyapunov_bound(empty.graph, empty.catalog, amax, theta, 1.0);
    CHECK(rep.B == 0.0);
    CHECK(rep.bound == 0.0);
  }
  SECTION("nonpositive epsilon rejected") {
    std::vector<double> amax{0.0, 0.0, 0.0};
    auto theta =
        std::vector<std::vector<double>>(3, std::vector<double>(2, 1.0));
    REQUIRE_THROWS_AS(lyapunov_bound(t.graph, t.catalog, amax, theta, 0.0),
                      StabilityError);
  }
}

TEST_CASE("solver failure is distinct from infeasible") {
  // the enumeration cap trips before the LP ever runs
  Topology t = two_node(4, 2 * 40000000ULL);
  auto inst = StabilityInstance::uniform_theta(t.graph, t.catalog,
                                               lambda_matrix(2, 4), 1.0);
  REQUIRE_THROWS_AS(check_feasibility(inst, 0.0, 2), StabilityError);
}
