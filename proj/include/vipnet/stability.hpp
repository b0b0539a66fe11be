#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "vipnet/simplex.hpp"
#include "vipnet/topology.hpp"
#include "vipnet/vplane.hpp"

namespace vipnet {

struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A candidate caching set B_{n,i,l}: l objects out of K, l <= floor(L_n/D).
struct CachingCombination {
  std::vector<ObjId> objects;  // sorted
  bool contains(ObjId k) const {
    return std::binary_search(objects.begin(), objects.end(), k);
  }
};

inline std::uint64_t binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  std::uint64_t v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return v;
}

// All caching sets of size 0..cache_slots, lexicographic within each size.
inline std::vector<CachingCombination> enumerate_caching_sets(
    int object_count, int cache_slots, std::uint64_t cap = 1000000) {
  cache_slots = std::min(cache_slots, object_count);
  std::uint64_t total = 0;
  for (int l = 0; l <= cache_slots; ++l) {
    total += binomial(object_count, l);
    if (total > cap)
      throw StabilityError(
          "caching-set enumeration exceeds cap of " + std::to_string(cap));
  }
  std::vector<CachingCombination> out;
  out.reserve(total);
  for (int l = 0; l <= cache_slots; ++l) {
    std::vector<ObjId> combo(l);
    for (int i = 0; i < l; ++i) combo[i] = i + 1;
    while (true) {
      out.push_back({combo});
      if (l == 0) break;
      int i = l - 1;
      while (i >= 0 && combo[i] == object_count - (l - 1 - i)) --i;
      if (i < 0) break;
      ++combo[i];
      for (int j = i + 1; j < l; ++j) combo[j] = combo[j - 1] + 1;
    }
  }
  return out;
}

// Instance for the stability analyzer: topology plus arrival-rate and
// theta matrices (both [1..N][1..K], 1-based).
struct StabilityInstance {
  const NetworkGraph* graph = nullptr;
  const ObjectCatalog* catalog = nullptr;
  std::vector<std::vector<double>> lambda;  // [n][k]
  std::vector<std::vector<double>> theta;   // [n][k], >= 1

  static StabilityInstance uniform_theta(const NetworkGraph& g,
                                         const ObjectCatalog& c,
                                         std::vector<std::vector<double>> lam,
                                         double theta_value = 1.0) {
    StabilityInstance inst;
    inst.graph = &g;
    inst.catalog = &c;
    inst.lambda = std::move(lam);
    inst.theta.assign(g.node_count() + 1,
                      std::vector<double>(c.object_count + 1, theta_value));
    return inst;
  }

  int cache_slots(NodeId n) const {
    return static_cast<int>(graph->cache_bits(n) / catalog->object_size_bits);
  }
};

// Certificate for membership in the stability region: flow variables
// f_ab^k and storage variables beta over enumerated caching sets.
struct FlowSolution {
  // f[link_index][k-1]
  std::vector<std::vector<double>> f;
  // per node: the enumerated combinations and their beta weights
  std::vector<std::vector<CachingCombination>> combos;  // [1..N]
  std::vector<std::vector<double>> beta;                // [1..N]
  double slack = 0;

  double cache_share(NodeId n, ObjId k) const {
    double s = 0;
    for (size_t i = 0; i < combos[n].size(); ++i)
      if (combos[n][i].contains(k)) s += beta[n][i];
    return s;
  }
};

enum class FeasibilityOutcome { Feasible, Infeasible, SolverFailure };

struct FeasibilityResult {
  FeasibilityOutcome outcome = FeasibilityOutcome::SolverFailure;
  FlowSolution solution;  // valid when Feasible
};

// Largest constraint violation of the certificate by direct substitution.
inline double certificate_violation(const StabilityInstance& inst,
                                    const FlowSolution& sol, double eps) {
  const NetworkGraph& g = *inst.graph;
  const ObjectCatalog& cat = *inst.catalog;
  const int K = cat.object_count;
  double worst = 0;
  for (int li = 0; li < g.link_count(); ++li) {
    double sum = 0;
    const Link& l = g.link(li);
    for (ObjId k = 1; k <= K; ++k) {
      double fv = sol.f[li][k - 1];
      worst = std::max(worst, -fv);  // f >= 0
      if (!cat.link_allowed(k, li) || l.from == cat.src(k))
        worst = std::max(worst, std::abs(fv));  // structural zeros
      sum += fv;
    }
    double cap = static_cast<double>(g.reverse_cap_bits(l.from, l.to)) /
                 static_cast<double>(cat.object_size_bits);
    worst = std::max(worst, sum - cap);
  }
  for (NodeId n = 1; n <= g.node_count(); ++n) {
    double bsum = 0;
    for (size_t i = 0; i < sol.beta[n].size(); ++i) {
      double b = sol.beta[n][i];
      worst = std::max({worst, -b, b - 1.0});
      bsum += b;
    }
    worst = std::max(worst, std::abs(bsum - 1.0));
    for (ObjId k = 1; k <= K; ++k) {
      if (cat.src(k) == n) continue;
      double th = inst.theta[n][k];
      double out = 0, in = 0;
      for (int li : g.out_links(n)) out += sol.f[li][k - 1];
      for (int li : g.in_links(n)) in += sol.f[li][k - 1];
      double rhs = out - in / th + g.read_rate(n) * sol.cache_share(n, k);
      worst = std::max(worst, (inst.lambda[n][k] + eps) / th - rhs);
    }
  }
  return worst;
}

// Decides whether lambda + eps*1 lies in the Theorem-1 region via a
// linear feasibility program over (f, beta); a Feasible answer carries a
// certificate checked by direct substitution.
inline FeasibilityResult check_feasibility(const StabilityInstance& inst,
                                           double eps,
                                           std::uint64_t enum_cap = 1000000) {
  const NetworkGraph& g = *inst.graph;
  const ObjectCatalog& cat = *inst.catalog;
  const int K = cat.object_count;
  const int N = g.node_count();

  // variable layout: f vars first (only structurally-free ones), then beta
  std::map<std::pair<int, ObjId>, int> fvar;  // (link, object) -> col
  int ncols = 0;
  for (int li = 0; li < g.link_count(); ++li) {
    const Link& l = g.link(li);
    for (ObjId k = 1; k <= K; ++k) {
      if (!cat.link_allowed(k, li)) continue;
      if (l.from == cat.src(k)) continue;  // f_{src(k),n}^k = 0
      fvar[{li, k}] = ncols++;
    }
  }
  std::vector<std::vector<CachingCombination>> combos(N + 1);
  std::vector<int> beta0(N + 1, 0);
  for (NodeId n = 1; n <= N; ++n) {
    combos[n] = enumerate_caching_sets(K, inst.cache_slots(n), enum_cap);
    beta0[n] = ncols;
    ncols += static_cast<int>(combos[n].size());
  }

  std::vector<std::vector<double>> A;
  std::vector<double> b;
  std::vector<char> rel;
  auto new_row = [&]() -> std::vector<double>& {
    A.emplace_back(ncols, 0.0);
    return A.back();
  };

  for (NodeId n = 1; n <= N; ++n) {
    for (ObjId k = 1; k <= K; ++k) {
      if (cat.src(k) == n) continue;
      double th = inst.theta[n][k];
      auto& row = new_row();
      for (int li : g.out_links(n)) {
        auto it = fvar.find({li, k});
        if (it != fvar.end()) row[it->second] += 1.0;
      }
      for (int li : g.in_links(n)) {
        auto it = fvar.find({li, k});
        if (it != fvar.end()) row[it->second] -= 1.0 / th;
      }
      for (size_t i = 0; i < combos[n].size(); ++i)
        if (combos[n][i].contains(k))
          row[beta0[n] + static_cast<int>(i)] += g.read_rate(n);
      b.push_back((inst.lambda[n][k] + eps) / th);
      rel.push_back('>');
    }
  }
  for (int li = 0; li < g.link_count(); ++li) {
    const Link& l = g.link(li);
    auto& row = new_row();
    for (ObjId k = 1; k <= K; ++k) {
      auto it = fvar.find({li, k});
      if (it != fvar.end()) row[it->second] += 1.0;
    }
    b.push_back(static_cast<double>(g.reverse_cap_bits(l.from, l.to)) /
                static_cast<double>(cat.object_size_bits));
    rel.push_back('<');
  }
  for (NodeId n = 1; n <= N; ++n) {
    auto& row = new_row();
    for (size_t i = 0; i < combos[n].size(); ++i)
      row[beta0[n] + static_cast<int>(i)] = 1.0;
    b.push_back(1.0);
    rel.push_back('=');
  }

  // minimize total flow mass so the certificate is canonical (zero demand
  // yields zero flow, not an arbitrary feasible vertex)
  std::vector<double> objective(ncols, 0.0);
  for (auto& [lk, col] : fvar) objective[col] = 1.0;
  auto lp = FeasibilityLp::solve(A, b, rel, 1e-9, &objective);
  FeasibilityResult res;
  if (lp.status == FeasibilityLp::Status::Infeasible) {
    res.outcome = FeasibilityOutcome::Infeasible;
    return res;
  }
  if (lp.status == FeasibilityLp::Status::Failure) {
    res.outcome = FeasibilityOutcome::SolverFailure;
    return res;
  }

  FlowSolution sol;
  sol.f.assign(g.link_count(), std::vector<double>(K, 0.0));
  for (auto& [lk, col] : fvar) sol.f[lk.first][lk.second - 1] = lp.x[col];
  sol.combos = combos;
  sol.beta.assign(N + 1, {});
  for (NodeId n = 1; n <= N; ++n) {
    sol.beta[n].resize(combos[n].size());
    for (size_t i = 0; i < combos[n].size(); ++i)
      sol.beta[n][i] = lp.x[beta0[n] + static_cast<int>(i)];
  }
  sol.slack = eps;
  if (certificate_violation(inst, sol, eps) > 1e-9) {
    res.outcome = FeasibilityOutcome::SolverFailure;
    return res;
  }
  res.outcome = FeasibilityOutcome::Feasible;
  res.solution = std::move(sol);
  return res;
}

// Boundary of the region along the ray rho*lambda, to tolerance tol.
inline double max_load_scaling(const StabilityInstance& inst,
                               double tol = 1e-4,
                               std::uint64_t enum_cap = 1000000) {
  double mass = 0;
  for (const auto& row : inst.lambda)
    for (double x : row) mass += std::abs(x);
  if (mass == 0) throw StabilityError("max_load_scaling requires lambda != 0");

  auto feasible_at = [&](double rho) {
    StabilityInstance scaled = inst;
    for (auto& row : scaled.lambda)
      for (double& x : row) x *= rho;
    auto r = check_feasibility(scaled, 0.0, enum_cap);
    if (r.outcome == FeasibilityOutcome::SolverFailure)
      throw StabilityError("solver failure during load scaling");
    return r.outcome == FeasibilityOutcome::Feasible;
  };

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (feasible_at(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 60) throw StabilityError("load ray appears unbounded");
  }
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (feasible_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

// Stationary randomized policy built from a Theorem-1 certificate: each
// link independently serves a single object drawn with probability
// f_ab^k / sum_k f_ab^k at total rate sum_k f_ab^k; each node caches a
// single combination drawn by the beta weights.
class RandomizedPolicy {
 public:
  RandomizedPolicy(const NetworkGraph& graph, const FlowSolution& sol,
                   std::uint64_t seed)
      : graph_(&graph), sol_(&sol), rng_(seed) {
    const int L = graph.link_count();
    link_rate_.assign(L, 0.0);
    link_dist_.resize(L);
    for (int li = 0; li < L; ++li) {
      const auto& f = sol.f[li];
      double total = 0;
      for (double x : f) total += x;
      link_rate_[li] = total;
      if (total > 0)
        link_dist_[li] = std::discrete_distribution<int>(f.begin(), f.end());
    }
    node_dist_.resize(graph.node_count() + 1);
    for (NodeId n = 1; n <= graph.node_count(); ++n)
      node_dist_[n] = std::discrete_distribution<int>(sol.beta[n].begin(),
                                                      sol.beta[n].end());
  }

  // Samples one slot of decisions; mu_hat is left equal to mu until
  // resolve_transmissions clips it against actual backlogs.
  VipDecision sample() {
    VipDecision dec;
    dec.links.assign(graph_->link_count(), {});
    for (int li = 0; li < graph_->link_count(); ++li) {
      if (link_rate_[li] <= 0) continue;
      ObjId k = link_dist_[li](rng_) + 1;
      dec.links[li].object = k;
      dec.links[li].mu = link_rate_[li];
      dec.links[li].mu_hat = link_rate_[li];
    }
    dec.cached.assign(graph_->node_count() + 1, {});
    for (NodeId n = 1; n <= graph_->node_count(); ++n) {
      int ci = node_dist_[n](rng_);
      dec.cached[n] = sol_->combos[n][ci].objects;
    }
    return dec;
  }

  double expected_mu(int link_index, ObjId k) const {
    return sol_->f[link_index][k - 1];
  }
  double expected_cache(NodeId n, ObjId k) const {
    return sol_->cache_share(n, k);
  }

 private:
  const NetworkGraph* graph_;
  const FlowSolution* sol_;
  std::mt19937_64 rng_;
  std::vector<double> link_rate_;
  std::vector<std::discrete_distribution<int>> link_dist_;
  std::vector<std::discrete_distribution<int>> node_dist_;
};

// Theorem-2 bound components.  The adopted grouping of B is
//   (mu_out)^2 + ((A_max + mu_in)/theta_min + r_max)^2 + 2 mu_out r_max
// per node, matching the three drift terms (the printed formula has
// mismatched parentheses).
struct BoundReport {
  struct PerNode {
    double mu_out_max = 0;
    double mu_in_max = 0;
    double arrival_max = 0;   // A_n,max
    double r_max = 0;         // K * r_n
    double theta_min = 0;
  };
  std::vector<PerNode> nodes;  // [1..N]
  double B = 0;
  double epsilon = 0;
  double bound = 0;  // N*B/epsilon
};

inline BoundReport lyapunov_bound(const NetworkGraph& g,
                                  const ObjectCatalog& cat,
                                  const std::vector<double>& arrival_max,
                                  const std::vector<std::vector<double>>& theta,
                                  double eps) {
  if (eps <= 0) throw StabilityError("lyapunov_bound requires eps > 0");
  const int N = g.node_count();
  const int K = cat.object_count;
  BoundReport rep;
  rep.nodes.assign(N + 1, {});
  double sum = 0;
  for (NodeId n = 1; n <= N; ++n) {
    auto& pn = rep.nodes[n];
    for (int li : g.out_links(n))
      pn.mu_out_max += static_cast<double>(g.link(li).cap_bits) /
                       static_cast<double>(cat.object_size_bits);
    for (int li : g.in_links(n))
      pn.mu_in_max += static_cast<double>(g.link(li).cap_bits) /
                      static_cast<double>(cat.object_size_bits);
    pn.arrival_max = arrival_max[n];
    pn.r_max = K * g.read_rate(n);
    pn.theta_min = *std::min_element(theta[n].begin() + 1, theta[n].end());
    double t2 = (pn.arrival_max + pn.mu_in_max) / pn.theta_min + pn.r_max;
    sum += pn.mu_out_max * pn.mu_out_max + t2 * t2 +
           2.0 * pn.mu_out_max * pn.r_max;
  }
  rep.B = sum / (2.0 * N);
  rep.epsilon = eps;
  rep.bound = N * rep.B / eps;
  return rep;
}

}  // namespace vipnet
