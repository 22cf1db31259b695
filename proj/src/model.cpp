#include "lpqp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

namespace lpqp {

Table Table::transposed() const {
  Table t(cols, rows);
  for (int k = 0; k < rows; ++k)
    for (int l = 0; l < cols; ++l) t.at(l, k) = at(k, l);
  return t;
}

double Table::sum() const {
  double s = 0.0;
  for (double v : data) s += v;
  return s;
}

Model::Model(std::vector<int> cardinalities,
             std::vector<std::vector<double>> unaries,
             std::vector<Edge> edges)
    : cards_(std::move(cardinalities)), unaries_(std::move(unaries)), edges_(std::move(edges)) {
  const int n = num_nodes();
  if (unaries_.size() != cards_.size())
    throw std::invalid_argument("model: unary count does not match node count");
  for (int i = 0; i < n; ++i) {
    if (cards_[i] < 1) throw std::invalid_argument("model: cardinality must be >= 1");
    if (static_cast<int>(unaries_[i].size()) != cards_[i])
      throw std::invalid_argument("model: unary length mismatch at node " + std::to_string(i));
    for (double v : unaries_[i])
      if (!std::isfinite(v)) throw std::invalid_argument("model: non-finite unary entry");
  }

  std::set<std::pair<int, int>> seen;
  for (auto& e : edges_) {
    if (e.i == e.j) throw std::invalid_argument("model: self-loop edge");
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n)
      throw std::invalid_argument("model: edge endpoint out of range");
    if (e.i > e.j) {
      e.table = e.table.transposed();
      std::swap(e.i, e.j);
    }
    if (!seen.insert({e.i, e.j}).second)
      throw std::invalid_argument("model: duplicate edge (" + std::to_string(e.i) + "," +
                                  std::to_string(e.j) + ")");
    if (e.table.rows != cards_[e.i] || e.table.cols != cards_[e.j])
      throw std::invalid_argument("model: pairwise table shape mismatch on edge (" +
                                  std::to_string(e.i) + "," + std::to_string(e.j) + ")");
    for (double v : e.table.data)
      if (!std::isfinite(v)) throw std::invalid_argument("model: non-finite pairwise entry");
  }

  incident_.assign(n, {});
  for (int e = 0; e < num_edges(); ++e) {
    incident_[edges_[e].i].push_back({e, edges_[e].j});
    incident_[edges_[e].j].push_back({e, edges_[e].i});
  }
  for (auto& inc : incident_)
    std::sort(inc.begin(), inc.end(),
              [](const IncidentEdge& a, const IncidentEdge& b) { return a.neighbor < b.neighbor; });
}

void check_assignment(const Model& model, const Assignment& x) {
  if (static_cast<int>(x.labels.size()) != model.num_nodes())
    throw std::invalid_argument("assignment: length does not match node count");
  for (int i = 0; i < model.num_nodes(); ++i)
    if (x.labels[i] < 0 || x.labels[i] >= model.cardinality(i))
      throw std::invalid_argument("assignment: label out of range at node " + std::to_string(i));
}

double energy(const Model& model, const Assignment& x) {
  check_assignment(model, x);
  double e = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) e += model.unary(i)[x.labels[i]];
  for (int k = 0; k < model.num_edges(); ++k) {
    const Edge& ed = model.edge(k);
    e += ed.table.at(x.labels[ed.i], x.labels[ed.j]);
  }
  return e;
}

void check_marginal_shapes(const Model& model, const Marginals& mu) {
  if (static_cast<int>(mu.node.size()) != model.num_nodes() ||
      static_cast<int>(mu.edge.size()) != model.num_edges())
    throw std::invalid_argument("marginals: block count does not match model");
  for (int i = 0; i < model.num_nodes(); ++i)
    if (static_cast<int>(mu.node[i].size()) != model.cardinality(i))
      throw std::invalid_argument("marginals: node vector length mismatch at node " +
                                  std::to_string(i));
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    if (mu.edge[e].rows != model.cardinality(ed.i) || mu.edge[e].cols != model.cardinality(ed.j))
      throw std::invalid_argument("marginals: edge table shape mismatch at edge " +
                                  std::to_string(e));
  }
}

double lp_objective(const Model& model, const Marginals& mu) {
  check_marginal_shapes(model, mu);
  double v = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const auto& th = model.unary(i);
    for (std::size_t k = 0; k < th.size(); ++k) v += th[k] * mu.node[i][k];
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const auto& t = model.edge(e).table.data;
    const auto& m = mu.edge[e].data;
    for (std::size_t c = 0; c < t.size(); ++c) v += t[c] * m[c];
  }
  return v;
}

double qp_objective(const Model& model, const std::vector<std::vector<double>>& node_marginals) {
  if (static_cast<int>(node_marginals.size()) != model.num_nodes())
    throw std::invalid_argument("qp_objective: node marginal count mismatch");
  double v = 0.0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    const auto& th = model.unary(i);
    if (node_marginals[i].size() != th.size())
      throw std::invalid_argument("qp_objective: node marginal length mismatch at node " +
                                  std::to_string(i));
    for (std::size_t k = 0; k < th.size(); ++k) v += th[k] * node_marginals[i][k];
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    const auto& mi = node_marginals[ed.i];
    const auto& mj = node_marginals[ed.j];
    for (int k = 0; k < ed.table.rows; ++k) {
      double row = 0.0;
      for (int l = 0; l < ed.table.cols; ++l) row += ed.table.at(k, l) * mj[l];
      v += mi[k] * row;
    }
  }
  return v;
}

double consistency_gap(const Model& model, const Marginals& mu) {
  check_marginal_shapes(model, mu);
  double gap = 0.0;
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    const Table& t = mu.edge[e];
    for (int k = 0; k < t.rows; ++k) {
      double row = 0.0;
      for (int l = 0; l < t.cols; ++l) row += t.at(k, l);
      gap = std::max(gap, std::abs(row - mu.node[ed.i][k]));
    }
    for (int l = 0; l < t.cols; ++l) {
      double col = 0.0;
      for (int k = 0; k < t.rows; ++k) col += t.at(k, l);
      gap = std::max(gap, std::abs(col - mu.node[ed.j][l]));
    }
  }
  return gap;
}

Marginals uniform_marginals(const Model& model) {
  Marginals mu;
  mu.node.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i)
    mu.node[i].assign(model.cardinality(i), 1.0 / model.cardinality(i));
  mu.edge.resize(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    const int ki = model.cardinality(ed.i), kj = model.cardinality(ed.j);
    mu.edge[e] = Table(ki, kj, 1.0 / (static_cast<double>(ki) * kj));
  }
  return mu;
}

Marginals integral_marginals(const Model& model, const Assignment& x) {
  check_assignment(model, x);
  Marginals mu;
  mu.node.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    mu.node[i].assign(model.cardinality(i), 0.0);
    mu.node[i][x.labels[i]] = 1.0;
  }
  mu.edge.resize(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    Table t(model.cardinality(ed.i), model.cardinality(ed.j), 0.0);
    t.at(x.labels[ed.i], x.labels[ed.j]) = 1.0;
    mu.edge[e] = std::move(t);
  }
  return mu;
}

double marginal_sum_violation(const Marginals& mu) {
  double worst = 0.0;
  for (const auto& v : mu.node) {
    double s = 0.0;
    for (double p : v) s += p;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  for (const auto& t : mu.edge) worst = std::max(worst, std::abs(t.sum() - 1.0));
  return worst;
}

double marginal_distance(const Marginals& a, const Marginals& b) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.node.size(); ++i)
    for (std::size_t k = 0; k < a.node[i].size(); ++k) {
      const double d = a.node[i][k] - b.node[i][k];
      sq += d * d;
    }
  for (std::size_t e = 0; e < a.edge.size(); ++e)
    for (std::size_t c = 0; c < a.edge[e].data.size(); ++c) {
      const double d = a.edge[e].data[c] - b.edge[e].data[c];
      sq += d * d;
    }
  return std::sqrt(sq);
}

}  // namespace lpqp
