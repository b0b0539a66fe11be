#pragma once

#include <cmath>
#include <cstdlib>
#include <vector>

namespace vipnet {

// Dense phase-1 simplex for small feasibility programs.
//   rows:  sum_j A[i][j] x_j  (rel[i])  b[i],   rel in {'<','=','>'}
//   vars:  x_j >= 0
// Bland's rule, so no cycling; Failure is reported distinctly from
// Infeasible (iteration cap or numerical breakdown).
class FeasibilityLp {
 public:
  enum class Status { Feasible, Infeasible, Failure };

  struct Result {
    Status status = Status::Failure;
    std::vector<double> x;  // structural variables only, on Feasible
  };

  // objective, when given, holds one coefficient per structural variable;
  // after feasibility is established a second phase minimizes it, so the
  // returned point is canonical rather than an arbitrary vertex.
  static Result solve(const std::vector<std::vector<double>>& A,
                      const std::vector<double>& b,
                      const std::vector<char>& rel, double tol = 1e-9,
                      const std::vector<double>* objective = nullptr) {
    const int m = static_cast<int>(A.size());
    const int n = m ? static_cast<int>(A[0].size()) : 0;

    // structural + one slack/surplus per inequality + one artificial per row
    int n_slack = 0;
    for (char r : rel)
      if (r != '=') ++n_slack;
    const int n_total = n + n_slack + m;
    const int art0 = n + n_slack;

    // T is m rows of [coeffs | rhs], rhs made nonnegative.
    std::vector<std::vector<double>> T(m, std::vector<double>(n_total + 1, 0.0));
    int slack = n;
    for (int i = 0; i < m; ++i) {
      double sgn = b[i] < 0 ? -1.0 : 1.0;
      for (int j = 0; j < n; ++j) T[i][j] = sgn * A[i][j];
      T[i][n_total] = sgn * b[i];
      if (rel[i] == '<')
        T[i][slack++] = sgn * 1.0;
      else if (rel[i] == '>')
        T[i][slack++] = sgn * -1.0;
      T[i][art0 + i] = 1.0;
    }

    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) basis[i] = art0 + i;

    // phase-1 objective: minimize sum of artificials.
    std::vector<double> cost(n_total + 1, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= n_total; ++j) cost[j] += T[i][j];
    for (int i = 0; i < m; ++i) cost[art0 + i] = 0.0;

    long max_iter = 20000L + 200L * (m + n_total);
    for (long it = 0;; ++it) {
      if (it > max_iter) return {Status::Failure, {}};
      int enter = -1;
      for (int j = 0; j < n_total; ++j) {
        if (cost[j] > tol) {  // maximizing reduction of artificial sum
          enter = j;
          break;  // Bland: smallest index
        }
      }
      if (enter < 0) break;
      int leave = -1;
      double best_ratio = 0;
      for (int i = 0; i < m; ++i) {
        if (T[i][enter] > tol) {
          double ratio = T[i][n_total] / T[i][enter];
          if (leave < 0 || ratio < best_ratio - tol ||
              (std::abs(ratio - best_ratio) <= tol &&
               basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return {Status::Failure, {}};  // phase-1 is bounded
      pivot(T, cost, basis, leave, enter, n_total);
    }

    double z = cost[n_total];  // remaining artificial mass
    if (std::abs(z) > 1e-7 * (1.0 + norm1(b))) {
      if (z > 0) return {Status::Infeasible, {}};
      return {Status::Failure, {}};
    }

    if (objective) {
      // phase 2: minimize objective^T x; artificials stay blocked.
      std::vector<double> red(n_total + 1, 0.0);
      for (int j = 0; j < n; ++j) red[j] = (*objective)[j];
      for (int i = 0; i < m; ++i) {
        if (basis[i] >= n) continue;
        double c = (*objective)[basis[i]];
        if (c == 0.0) continue;
        for (int j = 0; j <= n_total; ++j) red[j] -= c * T[i][j];
      }
      for (long it = 0;; ++it) {
        if (it > max_iter) return {Status::Failure, {}};
        int enter = -1;
        for (int j = 0; j < art0; ++j) {
          if (red[j] < -tol) {
            enter = j;
            break;  // Bland: smallest index
          }
        }
        if (enter < 0) break;
        int leave = -1;
        double best_ratio = 0;
        for (int i = 0; i < m; ++i) {
          if (T[i][enter] > tol) {
            double ratio = T[i][n_total] / T[i][enter];
            if (leave < 0 || ratio < best_ratio - tol ||
                (std::abs(ratio - best_ratio) <= tol &&
                 basis[i] < basis[leave])) {
              leave = i;
              best_ratio = ratio;
            }
          }
        }
        if (leave < 0) break;  // unbounded below: keep the current point
        pivot(T, red, basis, leave, enter, n_total);
      }
    }

    Result res;
    res.status = Status::Feasible;
    res.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) res.x[basis[i]] = T[i][n_total];
    return res;
  }

 private:
  static double norm1(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += std::abs(x);
    return s;
  }

  static void pivot(std::vector<std::vector<double>>& T,
                    std::vector<double>& cost, std::vector<int>& basis,
                    int row, int col, int n_total) {
    double p = T[row][col];
    for (int j = 0; j <= n_total; ++j) T[row][j] /= p;
    for (size_t i = 0; i < T.size(); ++i) {
      if (static_cast<int>(i) == row) continue;
      double f = T[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= n_total; ++j) T[i][j] -= f * T[row][j];
    }
    double f = cost[col];
    if (f != 0.0)
      for (int j = 0; j <= n_total; ++j) cost[j] -= f * T[row][j];
    basis[row] = col;
  }
};

}  // namespace vipnet
