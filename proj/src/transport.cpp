#include "kflow/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kflow/errors.hpp"

namespace kflow {

namespace {

// Basis cells form a spanning tree on rows 0..m-1 and columns m..m+n-1.
struct Basis {
  int m, n;
  std::vector<std::vector<int>> adj;

  Basis(int rows, int cols) : m(rows), n(cols), adj(static_cast<std::size_t>(rows + cols)) {}
  void add(int i, int j) {
    adj[i].push_back(m + j);
    adj[m + j].push_back(i);
  }
  void remove(int i, int j) {
    auto& a = adj[i];
    a.erase(std::find(a.begin(), a.end(), m + j));
    auto& b = adj[m + j];
    b.erase(std::find(b.begin(), b.end(), i));
  }
  // Tree path from node `from` to node `to` (inclusive).
  std::vector<int> path(int from, int to) const {
    std::vector<int> parent(adj.size(), -2);
    std::vector<int> queue{from};
    parent[from] = -1;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      const int x = queue[h];
      if (x == to) break;
      for (int y : adj[x])
        if (parent[y] == -2) {
          parent[y] = x;
          queue.push_back(y);
        }
    }
    std::vector<int> out;
    for (int x = to; x != -1; x = parent[x]) out.push_back(x);
    std::reverse(out.begin(), out.end());
    return out;
  }
};

}  // namespace

TransportSolution solve_transport(const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
                                  const Eigen::MatrixXd& cost) {
  const int m = static_cast<int>(supply.size());
  const int n = static_cast<int>(demand.size());
  if (m == 0 || n == 0 || cost.rows() != m || cost.cols() != n)
    throw ArgumentError("solve_transport: shape mismatch");
  if (supply.minCoeff() < 0.0 || demand.minCoeff() < 0.0)
    throw ArgumentError("solve_transport: negative supply or demand");
  const double total = supply.sum();
  if (std::abs(total - demand.sum()) > 1e-12 * std::max(1.0, total))
    throw ArgumentError("solve_transport: unbalanced problem");

  TransportSolution sol;
  sol.plan = Eigen::MatrixXd::Zero(m, n);
  Basis basis(m, n);
  {
    Eigen::VectorXd a = supply, b = demand;
    b *= total / demand.sum();
    int i = 0, j = 0;
    while (i < m && j < n) {
      const double x = std::min(a(i), b(j));
      sol.plan(i, j) = x;
      basis.add(i, j);
      a(i) -= x;
      b(j) -= x;
      if (i == m - 1) ++j;
      else if (j == n - 1) ++i;
      else if (a(i) <= b(j)) ++i;
      else ++j;
    }
  }

  const double tol = 1e-13 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  const long cap = 50L * m * n + 1000;
  sol.u.resize(m);
  sol.v.resize(n);
  for (;;) {
    // Potentials along the tree from u_0 = 0.
    std::vector<char> seen(static_cast<std::size_t>(m + n), 0);
    std::vector<int> stack{0};
    sol.u(0) = 0.0;
    seen[0] = 1;
    while (!stack.empty()) {
      const int x = stack.back();
      stack.pop_back();
      for (int y : basis.adj[x]) {
        if (seen[y]) continue;
        seen[y] = 1;
        if (x < m) sol.v(y - m) = cost(x, y - m) - sol.u(x);
        else sol.u(y) = cost(y, x - m) - sol.v(x - m);
        stack.push_back(y);
      }
    }

    int ei = -1, ej = -1;
    double best = -tol;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const double rc = cost(i, j) - sol.u(i) - sol.v(j);
        if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
        }
      }
    if (ei < 0) break;
    if (++sol.pivots > cap) throw ConvergenceError("solve_transport: pivot cap reached", -best);

    // Cycle: entering cell (+), then alternating cells along the tree path
    // from column ej back to row ei.
    const std::vector<int> p = basis.path(m + ej, ei);
    double theta = std::numeric_limits<double>::infinity();
    int li = -1, lj = -1;
    for (std::size_t k = 0; k + 1 < p.size(); k += 2) {
      const int j = p[k] - m, i = p[k + 1];
      if (sol.plan(i, j) < theta) {
        theta = sol.plan(i, j);
        li = i;
        lj = j;
      }
    }
    for (std::size_t k = 0; k + 1 < p.size(); ++k) {
      const int a = p[k], b = p[k + 1];
      const int i = a < m ? a : b, j = (a < m ? b : a) - m;
      sol.plan(i, j) += (k % 2 == 0) ? -theta : theta;
    }
    sol.plan(ei, ej) += theta;
    sol.plan(li, lj) = 0.0;
    basis.remove(li, lj);
    basis.add(ei, ej);
  }
  sol.plan = sol.plan.cwiseMax(0.0);
  sol.cost = (sol.plan.array() * cost.array()).sum();
  return sol;
}

double w1_distance(const VelocityNetwork& net, const DensityState& f0, const DensityState& f1) {
  if (f0.size() != net.size() || f1.size() != net.size())
    throw ArgumentError("w1_distance: density size mismatch");
  const int n = net.size();
  Eigen::MatrixXd C(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) C(i, j) = norm(net.node(i) - net.node(j));
  const double w = net.node_weight();
  return solve_transport(w * f0, w * f1, C).cost;
}

}  // namespace kflow
