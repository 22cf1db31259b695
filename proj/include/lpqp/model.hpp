#pragma once

#include <cstddef>
#include <vector>

namespace lpqp {

/// Dense row-major matrix. Used for pairwise potential tables (K_i x K_j)
/// and edge marginals.
struct Table {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Table() = default;
  Table(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

  double& at(int k, int l) { return data[static_cast<std::size_t>(k) * cols + l]; }
  double at(int k, int l) const { return data[static_cast<std::size_t>(k) * cols + l]; }
  std::size_t size() const { return data.size(); }

  Table transposed() const;
  double sum() const;
};

/// Undirected edge stored with canonical orientation i < j. The (j, i)
/// direction is represented by the transposed table.
struct Edge {
  int i = 0;
  int j = 0;
  Table table;
};

struct IncidentEdge {
  int edge;      // index into Model::edge()
  int neighbor;  // other endpoint
};

/// Pairwise discrete graphical model: per-node unary potentials and
/// per-edge pairwise potential tables, all in energy units.
class Model {
 public:
  Model() = default;

  /// Validates and canonicalizes. Edges may be given in either orientation;
  /// they are stored with i < j (table transposed if needed). Throws
  /// std::invalid_argument on self-loops, duplicate edges, shape mismatches
  /// or non-finite entries.
  Model(std::vector<int> cardinalities,
        std::vector<std::vector<double>> unaries,
        std::vector<Edge> edges);

  int num_nodes() const { return static_cast<int>(cards_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int cardinality(int i) const { return cards_[i]; }
  const std::vector<int>& cardinalities() const { return cards_; }
  const std::vector<double>& unary(int i) const { return unaries_[i]; }
  const std::vector<std::vector<double>>& unaries() const { return unaries_; }
  const Edge& edge(int e) const { return edges_[e]; }
  int degree(int i) const { return static_cast<int>(incident_[i].size()); }

  /// Incident edges of node i, sorted by neighbor index. Fixed iteration
  /// order keeps all accumulations deterministic.
  const std::vector<IncidentEdge>& incident(int i) const { return incident_[i]; }

 private:
  std::vector<int> cards_;
  std::vector<std::vector<double>> unaries_;
  std::vector<Edge> edges_;
  std::vector<std::vector<IncidentEdge>> incident_;
};

/// Joint labeling, one label per node.
struct Assignment {
  std::vector<int> labels;
};

/// Pseudo-marginals: one simplex vector per node, one joint table per edge.
/// Tables follow the model's canonical edge orientation (rows = endpoint i).
/// Marginalization consistency is not a construction invariant; it is
/// measured by consistency_gap.
struct Marginals {
  std::vector<std::vector<double>> node;
  std::vector<Table> edge;
};

/// Exact energy of an assignment, accumulated in fixed (node, edge) order.
double energy(const Model& model, const Assignment& x);

/// Linear relaxation objective: sum_i theta_i . mu_i + sum_e <theta_ij, mu_ij>.
double lp_objective(const Model& model, const Marginals& mu);

/// Quadratic relaxation objective over node marginals only:
/// sum_i theta_i . mu_i + sum_e mu_i^T Theta_ij mu_j.
double qp_objective(const Model& model, const std::vector<std::vector<double>>& node_marginals);

/// Max violation of the row/column marginalization constraints over all edges.
double consistency_gap(const Model& model, const Marginals& mu);

/// Uniform node marginals and uniform edge tables (product form, consistent).
Marginals uniform_marginals(const Model& model);

/// Indicator marginals for an assignment (edge tables are outer products).
Marginals integral_marginals(const Model& model, const Assignment& x);

/// Throws std::invalid_argument if shapes disagree with the model.
void check_marginal_shapes(const Model& model, const Marginals& mu);

/// Max |sum - 1| over all node vectors and edge tables.
double marginal_sum_violation(const Marginals& mu);

/// Euclidean distance between two marginal vectors (concatenated node + edge
/// blocks), the norm used by the CCCP and outer-loop stopping rules.
double marginal_distance(const Marginals& a, const Marginals& b);

/// Throws std::invalid_argument if the assignment does not fit the model.
void check_assignment(const Model& model, const Assignment& x);

}  // namespace lpqp
