#include "lpqp/treedd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "lpqp/numeric.hpp"

namespace lpqp {

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int x, int y) {
    x = find(x);
    y = find(y);
    if (x == y) return false;
    parent[x] = y;
    return true;
  }
};

}  // namespace

ForestDecomposition decompose_forest(const Model& model) {
  const int n = model.num_nodes();
  const int m = model.num_edges();

  std::vector<bool> visited(n, false);
  std::vector<bool> is_tree_edge(m, false);

  // Iterative DFS; neighbors pushed in reverse so the lowest index is
  // explored first.
  std::vector<std::pair<int, int>> stack;  // (node, edge used to reach it)
  for (int start = 0; start < n; ++start) {
    if (visited[start]) continue;
    stack.push_back({start, -1});
    while (!stack.empty()) {
      auto [v, via] = stack.back();
      stack.pop_back();
      if (visited[v]) continue;
      visited[v] = true;
      if (via >= 0) is_tree_edge[via] = true;
      const auto& inc = model.incident(v);
      for (auto it = inc.rbegin(); it != inc.rend(); ++it)
        if (!visited[it->neighbor]) stack.push_back({it->neighbor, it->edge});
    }
  }

  ForestDecomposition fd;
  TreeComponent first;
  first.nodes.resize(n);
  std::iota(first.nodes.begin(), first.nodes.end(), 0);
  for (int e = 0; e < m; ++e)
    if (is_tree_edge[e]) first.edges.push_back(e);
  fd.trees.push_back(std::move(first));

  // Pack the remaining edges greedily into extra forests.
  std::vector<DisjointSets> forests;
  for (int e = 0; e < m; ++e) {
    if (is_tree_edge[e]) continue;
    const Edge& ed = model.edge(e);
    bool placed = false;
    for (std::size_t f = 0; f < forests.size(); ++f) {
      if (forests[f].unite(ed.i, ed.j)) {
        fd.trees[f + 1].edges.push_back(e);
        placed = true;
        break;
      }
    }
    if (!placed) {
      forests.emplace_back(n);
      forests.back().unite(ed.i, ed.j);
      fd.trees.push_back({});
      fd.trees.back().edges.push_back(e);
    }
  }
  for (std::size_t a = 1; a < fd.trees.size(); ++a) {
    auto& t = fd.trees[a];
    for (int e : t.edges) {
      t.nodes.push_back(model.edge(e).i);
      t.nodes.push_back(model.edge(e).j);
    }
    std::sort(t.nodes.begin(), t.nodes.end());
    t.nodes.erase(std::unique(t.nodes.begin(), t.nodes.end()), t.nodes.end());
  }

  fd.weights.assign(fd.trees.size(), 1.0 / static_cast<double>(fd.trees.size()));
  fd.finalize(model);
  return fd;
}

ForestDecomposition grid_split(const Model& model, int rows, int cols) {
  if (rows < 1 || cols < 1 || model.num_nodes() != rows * cols)
    throw std::invalid_argument("grid_split: node count does not match grid shape");

  ForestDecomposition fd;
  fd.trees.resize(2);
  for (auto& t : fd.trees) {
    t.nodes.resize(model.num_nodes());
    std::iota(t.nodes.begin(), t.nodes.end(), 0);
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    if (ed.j == ed.i + 1 && ed.i % cols != cols - 1)
      fd.trees[0].edges.push_back(e);  // horizontal
    else if (ed.j == ed.i + cols)
      fd.trees[1].edges.push_back(e);  // vertical
    else
      throw std::invalid_argument("grid_split: edge (" + std::to_string(ed.i) + "," +
                                  std::to_string(ed.j) + ") is not a grid edge");
  }
  fd.weights = {0.5, 0.5};
  fd.finalize(model);
  return fd;
}

std::vector<SlaveProblem> build_slaves(const Model& model,
                                       const std::vector<std::vector<double>>& theta_tilde,
                                       const ForestDecomposition& fd, double rho) {
  if (!(rho > 0.0)) throw std::invalid_argument("build_slaves: rho must be > 0");
  std::vector<SlaveProblem> slaves(fd.trees.size());
  for (std::size_t a = 0; a < fd.trees.size(); ++a) {
    const TreeComponent& tree = fd.trees[a];
    SlaveProblem& s = slaves[a];
    s.nodes = tree.nodes;
    s.edges = tree.edges;
    s.temperature = rho * fd.weights[a];

    s.node_local_of_global.assign(model.num_nodes(), -1);
    for (std::size_t p = 0; p < s.nodes.size(); ++p)
      s.node_local_of_global[s.nodes[p]] = static_cast<int>(p);
    s.edge_local_of_global.assign(model.num_edges(), -1);
    for (std::size_t q = 0; q < s.edges.size(); ++q)
      s.edge_local_of_global[s.edges[q]] = static_cast<int>(q);

    s.adjusted_unaries.resize(s.nodes.size());
    for (std::size_t p = 0; p < s.nodes.size(); ++p) {
      const int i = s.nodes[p];
      const double share = static_cast<double>(fd.trees_of_node[i].size());
      s.adjusted_unaries[p] = theta_tilde[i];
      for (double& v : s.adjusted_unaries[p]) v /= share;
    }
    s.adjusted_pairwise.resize(s.edges.size());
    for (std::size_t q = 0; q < s.edges.size(); ++q) {
      const int e = s.edges[q];
      const double share = static_cast<double>(fd.trees_of_edge[e].size());
      s.adjusted_pairwise[q] = model.edge(e).table;
      for (double& v : s.adjusted_pairwise[q].data) v /= share;
    }

    s.adjacency.assign(s.nodes.size(), {});
    for (std::size_t q = 0; q < s.edges.size(); ++q) {
      const Edge& ed = model.edge(s.edges[q]);
      const int li = s.node_local_of_global[ed.i];
      const int lj = s.node_local_of_global[ed.j];
      s.adjacency[li].push_back({static_cast<int>(q), lj});
      s.adjacency[lj].push_back({static_cast<int>(q), li});
    }
    for (auto& adj : s.adjacency)
      std::sort(adj.begin(), adj.end(),
                [](const auto& x, const auto& y) { return x.second < y.second; });
  }
  return slaves;
}

TreeMarginals slave_solve(const Model& model, const SlaveProblem& slave) {
  return slave_solve_shifted(model, slave, nullptr, nullptr);
}

TreeMarginals slave_solve_shifted(const Model& model, const SlaveProblem& slave,
                                  const std::vector<std::vector<double>>* node_shift,
                                  const std::vector<Table>* edge_shift) {
  if (!(slave.temperature > 0.0))
    throw std::invalid_argument("slave_solve: temperature must be > 0");
  const double T = slave.temperature;
  const int nl = static_cast<int>(slave.nodes.size());
  const int ml = static_cast<int>(slave.edges.size());

  // Log-potentials at the slave temperature.
  std::vector<std::vector<double>> phi(nl);
  for (int p = 0; p < nl; ++p) {
    phi[p] = slave.adjusted_unaries[p];
    if (node_shift)
      for (std::size_t k = 0; k < phi[p].size(); ++k) phi[p][k] += (*node_shift)[p][k];
    for (double& v : phi[p]) v = -v / T;
  }
  std::vector<Table> phi_e(ml);
  for (int q = 0; q < ml; ++q) {
    phi_e[q] = slave.adjusted_pairwise[q];
    if (edge_shift)
      for (std::size_t c = 0; c < phi_e[q].data.size(); ++c)
        phi_e[q].data[c] += (*edge_shift)[q].data[c];
    for (double& v : phi_e[q].data) v = -v / T;
  }

  // Per local edge, messages into each endpoint (log domain, unnormalized).
  std::vector<std::vector<double>> msg_to_lo(ml), msg_to_hi(ml);
  for (int q = 0; q < ml; ++q) {
    const Edge& ed = model.edge(slave.edges[q]);
    msg_to_lo[q].assign(model.cardinality(ed.i), 0.0);
    msg_to_hi[q].assign(model.cardinality(ed.j), 0.0);
  }

  // up_sum[v] = phi_v + messages from v's children (filled on the upward
  // pass); full_sum[v] additionally includes the parent message.
  std::vector<std::vector<double>> up_sum = phi;
  std::vector<std::vector<double>> full_sum(nl);

  std::vector<int> parent(nl, -1), parent_edge(nl, -1), order;
  std::vector<bool> seen(nl, false);
  order.reserve(nl);
  double log_partition = 0.0;
  std::vector<double> vals;

  auto send = [&](int from, int q, const std::vector<double>& pre) {
    const Edge& ed = model.edge(slave.edges[q]);
    const Table& ph = phi_e[q];
    const bool from_lo = slave.node_local_of_global[ed.i] == from;
    auto& out = from_lo ? msg_to_hi[q] : msg_to_lo[q];
    const int kout = static_cast<int>(out.size());
    const int kin = static_cast<int>(pre.size());
    for (int o = 0; o < kout; ++o) {
      vals.resize(kin);
      for (int c = 0; c < kin; ++c) vals[c] = (from_lo ? ph.at(c, o) : ph.at(o, c)) + pre[c];
      out[o] = log_sum_exp(vals);
    }
  };

  for (int root = 0; root < nl; ++root) {
    if (seen[root]) continue;
    // BFS component order
    const std::size_t comp_begin = order.size();
    seen[root] = true;
    order.push_back(root);
    for (std::size_t head = comp_begin; head < order.size(); ++head) {
      const int v = order[head];
      for (const auto& [q, w] : slave.adjacency[v]) {
        if (seen[w]) continue;
        seen[w] = true;
        parent[w] = v;
        parent_edge[w] = q;
        order.push_back(w);
      }
    }
    // Upward: leaves toward the root.
    for (std::size_t idx = order.size(); idx-- > comp_begin + 1;) {
      const int v = order[idx];
      send(v, parent_edge[v], up_sum[v]);
      const Edge& ed = model.edge(slave.edges[parent_edge[v]]);
      const bool v_is_lo = slave.node_local_of_global[ed.i] == v;
      const auto& m = v_is_lo ? msg_to_hi[parent_edge[v]] : msg_to_lo[parent_edge[v]];
      auto& tgt = up_sum[parent[v]];
      for (std::size_t k = 0; k < tgt.size(); ++k) tgt[k] += m[k];
    }
    log_partition += log_sum_exp(up_sum[root]);
    // Downward: root toward the leaves.
    full_sum[root] = up_sum[root];
    for (std::size_t idx = comp_begin + 1; idx < order.size(); ++idx) {
      const int v = order[idx];
      const int p = parent[v];
      const int q = parent_edge[v];
      const Edge& ed = model.edge(slave.edges[q]);
      const bool v_is_lo = slave.node_local_of_global[ed.i] == v;
      // Remove v's own message from p's sum before sending down.
      const auto& up_msg = v_is_lo ? msg_to_hi[q] : msg_to_lo[q];
      std::vector<double> pre = full_sum[p];
      for (std::size_t k = 0; k < pre.size(); ++k) pre[k] -= up_msg[k];
      send(p, q, pre);
      const auto& down_msg = v_is_lo ? msg_to_lo[q] : msg_to_hi[q];
      full_sum[v] = up_sum[v];
      for (std::size_t k = 0; k < full_sum[v].size(); ++k) full_sum[v][k] += down_msg[k];
    }
  }

  TreeMarginals out;
  out.log_partition = log_partition;
  out.node.resize(nl);
  for (int p = 0; p < nl; ++p) {
    out.node[p] = full_sum[p];
    exp_normalize(out.node[p]);
  }
  out.edge.resize(ml);
  for (int q = 0; q < ml; ++q) {
    const Edge& ed = model.edge(slave.edges[q]);
    const int li = slave.node_local_of_global[ed.i];
    const int lj = slave.node_local_of_global[ed.j];
    Table b(static_cast<int>(msg_to_lo[q].size()), static_cast<int>(msg_to_hi[q].size()));
    for (int k = 0; k < b.rows; ++k)
      for (int l = 0; l < b.cols; ++l)
        b.at(k, l) = phi_e[q].at(k, l) + (full_sum[li][k] - msg_to_lo[q][k]) +
                     (full_sum[lj][l] - msg_to_hi[q][l]);
    exp_normalize(b.data);
    out.edge[q] = std::move(b);
  }
  return out;
}

DualState DualState::zero(const std::vector<SlaveProblem>& slaves) {
  DualState d;
  d.node_mult.resize(slaves.size());
  d.edge_mult.resize(slaves.size());
  for (std::size_t a = 0; a < slaves.size(); ++a) {
    d.node_mult[a].resize(slaves[a].nodes.size());
    for (std::size_t p = 0; p < slaves[a].nodes.size(); ++p)
      d.node_mult[a][p].assign(slaves[a].adjusted_unaries[p].size(), 0.0);
    d.edge_mult[a].resize(slaves[a].edges.size());
    for (std::size_t q = 0; q < slaves[a].edges.size(); ++q) {
      const Table& t = slaves[a].adjusted_pairwise[q];
      d.edge_mult[a][q] = Table(t.rows, t.cols, 0.0);
    }
  }
  d.node_mult_prev = d.node_mult;
  d.edge_mult_prev = d.edge_mult;
  d.initialized = true;
  return d;
}

double DualState::zero_sum_violation(const ForestDecomposition& fd, const Model& model) const {
  double worst = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const auto& owners = fd.trees_of_node[i];
    if (owners.size() < 2) continue;
    for (int k = 0; k < model.cardinality(i); ++k) {
      double s = 0.0;
      for (int a : owners) {
        // position of i inside tree a
        const auto& nodes = fd.trees[a].nodes;
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), i);
        s += node_mult[a][static_cast<std::size_t>(it - nodes.begin())][k];
      }
      worst = std::max(worst, std::abs(s));
    }
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& owners = fd.trees_of_edge[e];
    if (owners.size() < 2) continue;
    const auto& any_tree = fd.trees[owners.front()].edges;
    const auto it0 = std::lower_bound(any_tree.begin(), any_tree.end(), e);
    const std::size_t cells = edge_mult[owners.front()][it0 - any_tree.begin()].size();
    for (std::size_t c = 0; c < cells; ++c) {
      double s = 0.0;
      for (int a : owners) {
        const auto& edges = fd.trees[a].edges;
        const auto it = std::lower_bound(edges.begin(), edges.end(), e);
        s += edge_mult[a][static_cast<std::size_t>(it - edges.begin())].data[c];
      }
      worst = std::max(worst, std::abs(s));
    }
  }
  return worst;
}

namespace {

struct DualEval {
  std::vector<TreeMarginals> nu;
  double value = 0.0;
};

DualEval evaluate_dual(const Model& model, const std::vector<SlaveProblem>& slaves,
                       const std::vector<std::vector<std::vector<double>>>& node_mult,
                       const std::vector<std::vector<Table>>& edge_mult, bool any_shared_edges) {
  DualEval ev;
  ev.nu.resize(slaves.size());
  for (std::size_t a = 0; a < slaves.size(); ++a) {
    ev.nu[a] = slave_solve_shifted(model, slaves[a], &node_mult[a],
                                   any_shared_edges ? &edge_mult[a] : nullptr);
    ev.value += -slaves[a].temperature * ev.nu[a].log_partition;
  }
  return ev;
}

// Projected dual gradient: slave marginals minus their across-tree mean,
// which is the Euclidean projection onto the zero-sum subspace. Returns the
// max absolute disagreement alongside.
struct ProjectedGradient {
  std::vector<std::vector<std::vector<double>>> node;
  std::vector<std::vector<Table>> edge;
  double disagreement = 0.0;
};

ProjectedGradient project_disagreement(const Model& model, const ForestDecomposition& fd,
                                       const std::vector<SlaveProblem>& slaves,
                                       const std::vector<TreeMarginals>& nu) {
  ProjectedGradient g;
  g.node.resize(slaves.size());
  g.edge.resize(slaves.size());
  for (std::size_t a = 0; a < slaves.size(); ++a) {
    g.node[a].resize(slaves[a].nodes.size());
    for (std::size_t p = 0; p < slaves[a].nodes.size(); ++p)
      g.node[a][p].assign(nu[a].node[p].size(), 0.0);
    g.edge[a].resize(slaves[a].edges.size());
    for (std::size_t q = 0; q < slaves[a].edges.size(); ++q)
      g.edge[a][q] = Table(nu[a].edge[q].rows, nu[a].edge[q].cols, 0.0);
  }

  std::vector<double> mean;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const auto& owners = fd.trees_of_node[i];
    if (owners.size() < 2) continue;
    mean.assign(model.cardinality(i), 0.0);
    for (int a : owners) {
      const int p = slaves[a].node_local_of_global[i];
      for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += nu[a].node[p][k];
    }
    for (double& v : mean) v /= static_cast<double>(owners.size());
    for (int a : owners) {
      const int p = slaves[a].node_local_of_global[i];
      for (std::size_t k = 0; k < mean.size(); ++k) {
        const double d = nu[a].node[p][k] - mean[k];
        g.node[a][p][k] = d;
        g.disagreement = std::max(g.disagreement, std::abs(d));
      }
    }
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& owners = fd.trees_of_edge[e];
    if (owners.size() < 2) continue;
    const int q0 = slaves[owners.front()].edge_local_of_global[e];
    mean.assign(nu[owners.front()].edge[q0].size(), 0.0);
    for (int a : owners) {
      const int q = slaves[a].edge_local_of_global[e];
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += nu[a].edge[q].data[c];
    }
    for (double& v : mean) v /= static_cast<double>(owners.size());
    for (int a : owners) {
      const int q = slaves[a].edge_local_of_global[e];
      for (std::size_t c = 0; c < mean.size(); ++c) {
        const double d = nu[a].edge[q].data[c] - mean[c];
        g.edge[a][q].data[c] = d;
        g.disagreement = std::max(g.disagreement, std::abs(d));
      }
    }
  }
  return g;
}

// out = base + scale * dir, over all multiplier blocks.
void axpy_multipliers(const std::vector<std::vector<std::vector<double>>>& base_n,
                      const std::vector<std::vector<Table>>& base_e,
                      const std::vector<std::vector<std::vector<double>>>& dir_n,
                      const std::vector<std::vector<Table>>& dir_e, double scale,
                      std::vector<std::vector<std::vector<double>>>& out_n,
                      std::vector<std::vector<Table>>& out_e) {
  out_n = base_n;
  out_e = base_e;
  for (std::size_t a = 0; a < out_n.size(); ++a) {
    for (std::size_t p = 0; p < out_n[a].size(); ++p)
      for (std::size_t k = 0; k < out_n[a][p].size(); ++k)
        out_n[a][p][k] += scale * dir_n[a][p][k];
    for (std::size_t q = 0; q < out_e[a].size(); ++q)
      for (std::size_t c = 0; c < out_e[a][q].data.size(); ++c)
        out_e[a][q].data[c] += scale * dir_e[a][q].data[c];
  }
}

Marginals extract_primal(const Model& model, const ForestDecomposition& fd,
                         const std::vector<SlaveProblem>& slaves,
                         const std::vector<TreeMarginals>& nu, double clamp_floor) {
  Marginals mu;
  mu.node.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    auto& v = mu.node[i];
    v.assign(model.cardinality(i), 0.0);
    for (int a : fd.trees_of_node[i]) {
      const int p = slaves[a].node_local_of_global[i];
      const double w = fd.weights[a] / fd.node_weight_sum[i];
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += w * nu[a].node[p][k];
    }
    double s = 0.0;
    for (double& x : v) {
      x = std::max(x, clamp_floor);
      s += x;
    }
    for (double& x : v) x /= s;
  }
  mu.edge.resize(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& owners = fd.trees_of_edge[e];
    double wsum = 0.0;
    for (int a : owners) wsum += fd.weights[a];
    const Edge& ed = model.edge(e);
    Table t(model.cardinality(ed.i), model.cardinality(ed.j), 0.0);
    for (int a : owners) {
      const int q = slaves[a].edge_local_of_global[e];
      const double w = fd.weights[a] / wsum;
      for (std::size_t c = 0; c < t.data.size(); ++c) t.data[c] += w * nu[a].edge[q].data[c];
    }
    double s = 0.0;
    for (double& x : t.data) {
      x = std::max(x, clamp_floor);
      s += x;
    }
    for (double& x : t.data) x /= s;
    mu.edge[e] = std::move(t);
  }
  return mu;
}

}  // namespace

double tree_subproblem_value(const Model& model,
                             const std::vector<std::vector<double>>& theta_tilde,
                             const ForestDecomposition& fd, double rho, const Marginals& mu) {
  double v = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    for (std::size_t k = 0; k < theta_tilde[i].size(); ++k) v += theta_tilde[i][k] * mu.node[i][k];
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& t = model.edge(e).table.data;
    for (std::size_t c = 0; c < t.size(); ++c) v += t[c] * mu.edge[e].data[c];
  }
  for (std::size_t a = 0; a < fd.trees.size(); ++a)
    v -= rho * fd.weights[a] * tree_entropy(model, mu, fd.trees[a]);
  return v;
}

double uniform_subproblem_value(const Model& model,
                                const std::vector<std::vector<double>>& theta_tilde, double rho,
                                const Marginals& mu) {
  double v = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i)
    for (std::size_t k = 0; k < theta_tilde[i].size(); ++k) v += theta_tilde[i][k] * mu.node[i][k];
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& t = model.edge(e).table.data;
    const auto& m = mu.edge[e].data;
    double h = 0.0;
    for (std::size_t c = 0; c < t.size(); ++c) {
      v += t[c] * m[c];
      if (m[c] > 0.0) h -= m[c] * std::log(m[c]);
    }
    v -= rho * h;
  }
  return v;
}

DdReport dd_solve(const Model& model, const std::vector<std::vector<double>>& theta_tilde,
                  const ForestDecomposition& fd, double rho, double tol, int max_iters,
                  DualState warm, double clamp_floor) {
  if (!(rho > 0.0)) throw std::invalid_argument("dd_solve: rho must be > 0");
  const auto slaves = build_slaves(model, theta_tilde, fd, rho);

  bool any_shared_edges = false;
  for (const auto& owners : fd.trees_of_edge)
    if (owners.size() > 1) any_shared_edges = true;

  DualState state = warm.initialized ? std::move(warm) : DualState::zero(slaves);
  if (!state.initialized || state.node_mult.size() != slaves.size())
    state = DualState::zero(slaves);
  double min_eta = *std::min_element(fd.weights.begin(), fd.weights.end());
  if (!(state.step > 0.0)) state.step = rho * min_eta / static_cast<double>(fd.trees.size());

  // Fresh FISTA sequence each call; the objective changed between calls.
  state.node_mult_prev = state.node_mult;
  state.edge_mult_prev = state.edge_mult;
  double t_mom = 1.0;

  DualEval cur = evaluate_dual(model, slaves, state.node_mult, state.edge_mult, any_shared_edges);

  DdReport report;
  std::vector<std::vector<std::vector<double>>> y_n, cand_n;
  std::vector<std::vector<Table>> y_e, cand_e;

  auto ascent_ok = [](double q_new, double q_old) {
    return q_new >= q_old - 1e-12 * (1.0 + std::abs(q_old));
  };

  for (int iter = 1; iter <= max_iters; ++iter) {
    ProjectedGradient g_cur = project_disagreement(model, fd, slaves, cur.nu);
    report.final_disagreement = g_cur.disagreement;
    if (g_cur.disagreement <= tol) {
      report.converged = true;
      break;
    }
    report.iterations = iter;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    const double beta = (t_mom - 1.0) / t_next;

    // y = lambda + beta (lambda - lambda_prev)
    y_n = state.node_mult;
    y_e = state.edge_mult;
    if (beta != 0.0) {
      for (std::size_t a = 0; a < y_n.size(); ++a) {
        for (std::size_t p = 0; p < y_n[a].size(); ++p)
          for (std::size_t k = 0; k < y_n[a][p].size(); ++k)
            y_n[a][p][k] += beta * (y_n[a][p][k] - state.node_mult_prev[a][p][k]);
        for (std::size_t q = 0; q < y_e[a].size(); ++q)
          for (std::size_t c = 0; c < y_e[a][q].data.size(); ++c)
            y_e[a][q].data[c] += beta * (y_e[a][q].data[c] - state.edge_mult_prev[a][q].data[c]);
      }
    }

    DualEval at_y = (beta == 0.0)
                        ? cur
                        : evaluate_dual(model, slaves, y_n, y_e, any_shared_edges);
    ProjectedGradient g_y = project_disagreement(model, fd, slaves, at_y.nu);

    axpy_multipliers(y_n, y_e, g_y.node, g_y.edge, state.step, cand_n, cand_e);
    DualEval at_cand = evaluate_dual(model, slaves, cand_n, cand_e, any_shared_edges);

    if (ascent_ok(at_cand.value, cur.value)) {
      state.node_mult_prev = std::move(state.node_mult);
      state.edge_mult_prev = std::move(state.edge_mult);
      state.node_mult = std::move(cand_n);
      state.edge_mult = std::move(cand_e);
      cur = std::move(at_cand);
      t_mom = t_next;
      continue;
    }

    // The accelerated step decreased the dual: restart the momentum and fall
    // back to a plain projected step from the current iterate, halving the
    // step until it ascends.
    t_mom = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h) {
      axpy_multipliers(state.node_mult, state.edge_mult, g_cur.node, g_cur.edge, state.step,
                       cand_n, cand_e);
      DualEval at_plain = evaluate_dual(model, slaves, cand_n, cand_e, any_shared_edges);
      if (ascent_ok(at_plain.value, cur.value)) {
        state.node_mult_prev = state.node_mult;
        state.node_mult = std::move(cand_n);
        state.edge_mult_prev = state.edge_mult;
        state.edge_mult = std::move(cand_e);
        cur = std::move(at_plain);
        accepted = true;
        break;
      }
      state.step *= 0.5;
    }
    if (!accepted) break;  // numerical floor; keep the best iterate
  }

  report.mu = extract_primal(model, fd, slaves, cur.nu, clamp_floor);
  report.dual_value = cur.value;
  report.primal_value = tree_subproblem_value(model, theta_tilde, fd, rho, report.mu);
  report.duals = std::move(state);
  return report;
}

CccpTreeResult cccp_tree(const Model& model, double rho, const Marginals& mu_init,
                         const ForestDecomposition& fd, const CccpOptions& opts, DualState* warm,
                         const CccpObserver& observer) {
  if (!(rho > 0.0)) throw std::invalid_argument("cccp_tree: rho must be > 0");
  check_marginal_shapes(model, mu_init);

  CccpTreeResult result;
  result.mu = mu_init;
  if (warm) result.duals = std::move(*warm);
  const PenaltyKind kind = PenaltyKind::tree(fd);

  for (int t = 1; t <= opts.max_dc_iters; ++t) {
    const auto theta_tilde = modified_unaries(model, result.mu, rho, kind, opts.clamp_floor);
    DdReport inner = dd_solve(model, theta_tilde, fd, rho, opts.inner_tol, opts.inner_max_iters,
                              std::move(result.duals), opts.clamp_floor);
    const double delta = marginal_distance(inner.mu, result.mu);
    result.mu = std::move(inner.mu);
    result.duals = std::move(inner.duals);
    result.iterations = t;
    if (observer) observer(result.mu, inner.iterations, inner.final_disagreement, delta);
    if (delta <= opts.eps_dc) {
      if (warm) *warm = result.duals;
      return result;
    }
  }
  result.hit_iter_cap = true;
  if (warm) *warm = result.duals;
  return result;
}

}  // namespace lpqp
