#pragma once

#include <vector>

#include "lpqp/model.hpp"

namespace lpqp {

/// One acyclic subgraph of a decomposition: node set V_a and edge set E_a
/// (model edge indices). May itself be a forest; endpoints of every edge in
/// `edges` must appear in `nodes`.
struct TreeComponent {
  std::vector<int> nodes;  // ascending
  std::vector<int> edges;  // ascending model edge indices
};

/// Acyclic subgraphs covering all nodes and edges of a model, with positive
/// per-tree weights eta_a summing to one. Lookup tables (trees containing a
/// node/edge, per-node weight sums) are filled by finalize().
struct ForestDecomposition {
  std::vector<TreeComponent> trees;
  std::vector<double> weights;

  // derived, valid after finalize()
  std::vector<std::vector<int>> trees_of_node;  // A(i)
  std::vector<std::vector<int>> trees_of_edge;  // A(i,j)
  std::vector<double> node_weight_sum;          // sum_{a in A(i)} eta_a

  /// Builds the lookup tables and checks all invariants: acyclicity of each
  /// component (union-find), full node and edge coverage, endpoint
  /// containment, positive weights summing to 1 within 1e-12. Throws
  /// std::invalid_argument on violation.
  void finalize(const Model& model);

  /// Degree of node i inside tree a (d_i^a).
  int tree_degree(const Model& model, int a, int node) const;
};

/// Penalty weighting selector: uniform over edges, or weighted by a forest
/// decomposition. Holds a non-owning reference for the tree variant; the
/// decomposition must outlive the PenaltyKind.
class PenaltyKind {
 public:
  static PenaltyKind uniform() { return PenaltyKind(nullptr); }
  static PenaltyKind tree(const ForestDecomposition& f) { return PenaltyKind(&f); }

  bool is_tree() const { return forest_ != nullptr; }
  const ForestDecomposition& forest() const { return *forest_; }

 private:
  explicit PenaltyKind(const ForestDecomposition* f) : forest_(f) {}
  const ForestDecomposition* forest_;
};

/// Shannon entropy -sum p log p in nats, with the 0 log 0 = 0 convention.
/// Throws std::invalid_argument on negative entries.
double entropy(const std::vector<double>& p);

/// KL divergence sum_k p_k log(p_k / q_k), nats. Returns +infinity when some
/// q_k = 0 with p_k > 0. Throws on length mismatch.
double kl(const std::vector<double>& p, const std::vector<double>& q);

/// KL penalty coupling edge marginals to products of node marginals:
/// uniform: sum over edges; tree: eta-weighted sums over each subgraph.
double penalty(const Model& model, const Marginals& mu, const PenaltyKind& kind);

/// Combined objective: lp_objective + rho * penalty.
double lpqp_objective(const Model& model, const Marginals& mu, double rho,
                      const PenaltyKind& kind);

/// Entropy of an acyclic subgraph:
/// sum_{(i,j) in E_a} H(mu_ij) - sum_{i in V_a} (d_i^a - 1) H(mu_i).
double tree_entropy(const Model& model, const Marginals& mu, const TreeComponent& tree);

/// CCCP-modified unary potentials. Uniform: theta_i - rho * d_i * log(mu_i^t);
/// tree: theta_i - rho * (sum_{a in A(i)} eta_a) * log(mu_i^t). Marginals are
/// clamped below at clamp_floor before the log (no renormalization).
std::vector<std::vector<double>> modified_unaries(const Model& model, const Marginals& mu_prev,
                                                  double rho, const PenaltyKind& kind,
                                                  double clamp_floor = 1e-12);

/// Convex/concave split of the combined objective. u - v equals
/// lpqp_objective when the marginals are consistent; identity_residual
/// reports (u - v) - lpqp_objective for inconsistent inputs.
struct DcParts {
  double u = 0.0;
  double v = 0.0;
  double identity_residual = 0.0;
};

DcParts dc_parts(const Model& model, const Marginals& mu, double rho, const PenaltyKind& kind);

}  // namespace lpqp
