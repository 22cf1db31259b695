#pragma once

// Independent reference minimizer for the entropy-smoothed LP subproblems,
// used only by tests. It shares no code with the production solvers: the
// iterates are entropic proximal (mirror-descent) steps whose prox
// subproblems are weighted-KL projections onto the local polytope, computed
// by cyclic Bregman (IPF-style) projections; optimality is certified through
// an exact Lagrangian dual bound evaluated at multipliers recovered from the
// iterate, so the reported duality gap is valid no matter how the iterate
// was produced.

#include <vector>

#include "lpqp/model.hpp"
#include "lpqp/objective.hpp"

namespace lpqp::testing {

/// min over the local polytope of
///   sum_i theta_tilde_i . mu_i + sum_e theta_e . mu_e
///   + sum_e edge_weight_e * sum(mu_e log mu_e)
///   - sum_i node_weight_i * sum(mu_i log mu_i)
/// with edge_weight > 0 and node_weight >= 0.
struct SmoothedObjective {
  std::vector<std::vector<double>> theta_tilde;
  std::vector<double> edge_weight;
  std::vector<double> node_weight;

  /// One acyclic block of the consensus reformulation, used to certify the
  /// tree-weighted objective (whose per-node entropy terms make the plain
  /// edge-wise dual loose). Blocks carry their share of the potentials and
  /// are evaluated by brute-force enumeration.
  struct Block {
    std::vector<int> nodes;                          // global ids
    std::vector<int> edges;                          // model edge ids
    double temperature = 0.0;
    std::vector<std::vector<double>> unary_share;    // parallel to nodes
    std::vector<Table> pairwise_share;               // parallel to edges
  };
  std::vector<Block> blocks;  // empty for the uniform objective
};

/// The uniform-weighting CCCP subproblem.
SmoothedObjective uniform_smoothed(const Model& model,
                                   const std::vector<std::vector<double>>& theta_tilde,
                                   double rho);

/// The tree-weighting CCCP subproblem.
SmoothedObjective tree_smoothed(const Model& model,
                                const std::vector<std::vector<double>>& theta_tilde,
                                const ForestDecomposition& fd, double rho);

double smoothed_value(const Model& model, const SmoothedObjective& obj, const Marginals& mu);

/// Exact dual lower bound at multipliers recovered from mu (valid for any mu).
double dual_certificate(const Model& model, const SmoothedObjective& obj, const Marginals& mu);

struct ReferenceResult {
  Marginals mu;       // feasible up to the IPF tolerance
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;   // primal - dual, certified
  int prox_steps = 0;
  bool certified = false;
};

ReferenceResult reference_minimize(const Model& model, const SmoothedObjective& obj,
                                   double gap_tol, int max_prox_steps = 5000);

}  // namespace lpqp::testing
