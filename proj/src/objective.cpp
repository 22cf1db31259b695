#include "lpqp/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lpqp {

namespace {

// Union-find over node ids, used for acyclicity checks.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // Returns false if x and y were already connected.
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    parent[x] = y;
    return true;
  }
};

}  // namespace

void ForestDecomposition::finalize(const Model& model) {
  const int n = model.num_nodes();
  const int m = model.num_edges();
  if (trees.size() != weights.size())
    throw std::invalid_argument("decomposition: weight count does not match tree count");
  if (trees.empty()) throw std::invalid_argument("decomposition: no trees");

  double wsum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("decomposition: weights must be positive");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("decomposition: weights must sum to 1");

  trees_of_node.assign(n, {});
  trees_of_edge.assign(m, {});
  node_weight_sum.assign(n, 0.0);

  for (int a = 0; a < static_cast<int>(trees.size()); ++a) {
    auto& t = trees[a];
    std::sort(t.nodes.begin(), t.nodes.end());
    std::sort(t.edges.begin(), t.edges.end());
    if (std::adjacent_find(t.nodes.begin(), t.nodes.end()) != t.nodes.end() ||
        std::adjacent_find(t.edges.begin(), t.edges.end()) != t.edges.end())
      throw std::invalid_argument("decomposition: duplicate node or edge in tree");

    DisjointSets ds(n);
    for (int node : t.nodes) {
      if (node < 0 || node >= n) throw std::invalid_argument("decomposition: node out of range");
      trees_of_node[node].push_back(a);
      node_weight_sum[node] += weights[a];
    }
    for (int e : t.edges) {
      if (e < 0 || e >= m) throw std::invalid_argument("decomposition: edge out of range");
      const Edge& ed = model.edge(e);
      if (!std::binary_search(t.nodes.begin(), t.nodes.end(), ed.i) ||
          !std::binary_search(t.nodes.begin(), t.nodes.end(), ed.j))
        throw std::invalid_argument("decomposition: edge endpoint missing from tree nodes");
      if (!ds.unite(ed.i, ed.j))
        throw std::invalid_argument("decomposition: cycle in tree " + std::to_string(a));
      trees_of_edge[e].push_back(a);
    }
  }

  for (int i = 0; i < n; ++i)
    if (trees_of_node[i].empty())
      throw std::invalid_argument("decomposition: node " + std::to_string(i) + " uncovered");
  for (int e = 0; e < m; ++e)
    if (trees_of_edge[e].empty())
      throw std::invalid_argument("decomposition: edge " + std::to_string(e) + " uncovered");
}

int ForestDecomposition::tree_degree(const Model& model, int a, int node) const {
  const auto& te = trees[a].edges;
  int d = 0;
  for (int e : te) {
    const Edge& ed = model.edge(e);
    if (ed.i == node || ed.j == node) ++d;
  }
  return d;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("entropy: negative entry");
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

namespace {

double entropy_table(const Table& t) {
  double h = 0.0;
  for (double v : t.data) {
    if (v < 0.0) throw std::invalid_argument("entropy: negative entry");
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// KL between an edge table and the outer product of the node marginals,
// without materializing the product.
double edge_kl(const Table& t, const std::vector<double>& pi, const std::vector<double>& pj) {
  double d = 0.0;
  for (int k = 0; k < t.rows; ++k)
    for (int l = 0; l < t.cols; ++l) {
      const double p = t.at(k, l);
      if (p == 0.0) continue;
      const double q = pi[k] * pj[l];
      if (q == 0.0) return std::numeric_limits<double>::infinity();
      d += p * std::log(p / q);
    }
  return d;
}

}  // namespace

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) return std::numeric_limits<double>::infinity();
    d += p[k] * std::log(p[k] / q[k]);
  }
  return d;
}

double penalty(const Model& model, const Marginals& mu, const PenaltyKind& kind) {
  check_marginal_shapes(model, mu);
  if (!kind.is_tree()) {
    double g = 0.0;
    for (int e = 0; e < model.num_edges(); ++e) {
      const Edge& ed = model.edge(e);
      g += edge_kl(mu.edge[e], mu.node[ed.i], mu.node[ed.j]);
    }
    return g;
  }
  const ForestDecomposition& fd = kind.forest();
  double g = 0.0;
  for (std::size_t a = 0; a < fd.trees.size(); ++a) {
    double tree_sum = 0.0;
    for (int e : fd.trees[a].edges) {
      const Edge& ed = model.edge(e);
      tree_sum += edge_kl(mu.edge[e], mu.node[ed.i], mu.node[ed.j]);
    }
    g += fd.weights[a] * tree_sum;
  }
  return g;
}

double lpqp_objective(const Model& model, const Marginals& mu, double rho,
                      const PenaltyKind& kind) {
  if (rho < 0.0) throw std::invalid_argument("lpqp_objective: rho must be >= 0");
  const double lp = lp_objective(model, mu);
  if (rho == 0.0) return lp;
  return lp + rho * penalty(model, mu, kind);
}

double tree_entropy(const Model& model, const Marginals& mu, const TreeComponent& tree) {
  check_marginal_shapes(model, mu);
  std::vector<int> deg(model.num_nodes(), 0);
  double h = 0.0;
  for (int e : tree.edges) {
    if (e < 0 || e >= model.num_edges())
      throw std::invalid_argument("tree_entropy: edge index out of range");
    const Edge& ed = model.edge(e);
    h += entropy_table(mu.edge[e]);
    ++deg[ed.i];
    ++deg[ed.j];
  }
  for (int i : tree.nodes) {
    if (i < 0 || i >= model.num_nodes())
      throw std::invalid_argument("tree_entropy: node index out of range");
    h -= (deg[i] - 1) * entropy(mu.node[i]);
  }
  return h;
}

std::vector<std::vector<double>> modified_unaries(const Model& model, const Marginals& mu_prev,
                                                  double rho, const PenaltyKind& kind,
                                                  double clamp_floor) {
  check_marginal_shapes(model, mu_prev);
  std::vector<std::vector<double>> out(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    const double coeff =
        kind.is_tree() ? rho * kind.forest().node_weight_sum[i] : rho * model.degree(i);
    const auto& th = model.unary(i);
    out[i].resize(th.size());
    for (std::size_t k = 0; k < th.size(); ++k)
      out[i][k] = th[k] - coeff * std::log(std::max(mu_prev.node[i][k], clamp_floor));
  }
  return out;
}

DcParts dc_parts(const Model& model, const Marginals& mu, double rho, const PenaltyKind& kind) {
  check_marginal_shapes(model, mu);
  const double lp = lp_objective(model, mu);
  DcParts parts;
  if (!kind.is_tree()) {
    double edge_h = 0.0;
    for (int e = 0; e < model.num_edges(); ++e) edge_h += entropy_table(mu.edge[e]);
    double node_h = 0.0;
    for (int i = 0; i < model.num_nodes(); ++i) node_h += model.degree(i) * entropy(mu.node[i]);
    parts.u = lp - rho * edge_h;
    parts.v = -rho * node_h;
  } else {
    const ForestDecomposition& fd = kind.forest();
    double weighted_tree_h = 0.0;
    double weighted_node_h = 0.0;
    for (std::size_t a = 0; a < fd.trees.size(); ++a) {
      weighted_tree_h += fd.weights[a] * tree_entropy(model, mu, fd.trees[a]);
      double node_h = 0.0;
      for (int i : fd.trees[a].nodes) node_h += entropy(mu.node[i]);
      weighted_node_h += fd.weights[a] * node_h;
    }
    parts.u = lp - rho * weighted_tree_h;
    parts.v = -rho * weighted_node_h;
  }
  parts.identity_residual = (parts.u - parts.v) - lpqp_objective(model, mu, rho, kind);
  return parts;
}

}  // namespace lpqp
