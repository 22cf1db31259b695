#pragma once

#include <utility>
#include <vector>

#include "lpqp/model.hpp"
#include "lpqp/normprod.hpp"
#include "lpqp/objective.hpp"

namespace lpqp {

/// Greedy forest cover: depth-first traversal from the lowest-index
/// unvisited node makes the first tree (all nodes, all DFS tree edges);
/// remaining back edges are packed, in ascending edge order, into the first
/// extra forest where they close no cycle, opening new forests as needed.
/// Every edge lands in exactly one tree; weights are 1/|A|.
ForestDecomposition decompose_forest(const Model& model);

/// Two-tree split of a rows x cols grid: one tree with all horizontal
/// edges, one with all vertical edges, both containing every node. Throws
/// if the model's edges are not exactly the 4-neighbor grid lattice.
ForestDecomposition grid_split(const Model& model, int rows, int cols);

/// One tree-structured subproblem of the dual decomposition: potentials
/// rescaled by the sharing counts (theta_tilde_i / |A(i)|, theta_ij /
/// |A(i,j)|) so that summing over slaves recovers the originals, solved at
/// temperature rho * eta_a.
struct SlaveProblem {
  std::vector<int> nodes;  // global node ids, ascending (V_a)
  std::vector<int> edges;  // model edge ids, ascending (E_a)
  std::vector<std::vector<double>> adjusted_unaries;  // parallel to nodes
  std::vector<Table> adjusted_pairwise;               // parallel to edges, canonical orientation
  double temperature = 0.0;

  // local structure built by build_slaves
  std::vector<std::vector<std::pair<int, int>>> adjacency;  // per local node: (local edge, local nbr)
  std::vector<int> node_local_of_global;  // -1 when absent
  std::vector<int> edge_local_of_global;
};

std::vector<SlaveProblem> build_slaves(const Model& model,
                                       const std::vector<std::vector<double>>& theta_tilde,
                                       const ForestDecomposition& fd, double rho);

/// Marginals over one slave's nodes and edges (local indexing), plus the
/// log-partition of the slave's Gibbs distribution at its temperature.
struct TreeMarginals {
  std::vector<std::vector<double>> node;
  std::vector<Table> edge;
  double log_partition = 0.0;
};

/// Exact marginals of p(x) proportional to exp(-(sum adjusted potentials)/T)
/// on the acyclic subgraph, by two-pass sum-product in the log domain.
TreeMarginals slave_solve(const Model& model, const SlaveProblem& slave);

/// Same, with the potentials shifted by Lagrange multipliers (either pointer
/// may be null). Shapes parallel the slave's local indexing.
TreeMarginals slave_solve_shifted(const Model& model, const SlaveProblem& slave,
                                  const std::vector<std::vector<double>>* node_shift,
                                  const std::vector<Table>* edge_shift);

/// Lagrange multipliers of the agreement constraints, one block per (tree,
/// node) and (tree, edge), kept on the zero-sum subspace (summing to zero
/// across the trees sharing a node or edge). Blocks of unshared nodes/edges
/// stay identically zero.
struct DualState {
  std::vector<std::vector<std::vector<double>>> node_mult;
  std::vector<std::vector<Table>> edge_mult;
  std::vector<std::vector<std::vector<double>>> node_mult_prev;  // FISTA companion iterate
  std::vector<std::vector<Table>> edge_mult_prev;
  double step = 0.0;
  bool initialized = false;

  static DualState zero(const std::vector<SlaveProblem>& slaves);

  /// Max |sum over trees| of any multiplier coordinate (invariant check).
  double zero_sum_violation(const ForestDecomposition& fd, const Model& model) const;
};

struct DdReport {
  Marginals mu;         // eta-weighted average of slave copies, renormalized
  DualState duals;
  int iterations = 0;
  double final_disagreement = 0.0;
  double dual_value = 0.0;    // certified lower bound on the subproblem optimum
  double primal_value = 0.0;  // subproblem objective at mu
  bool converged = false;
};

/// Maximizes the consensus dual of the tree-decomposed subproblem by
/// accelerated projected gradient (FISTA) with function-value restarts and
/// step halving whenever an accepted step would decrease the dual. Each
/// gradient evaluation is one exact slave solve per tree; the projected
/// gradient is the disagreement of the slave marginals from their
/// across-tree mean. Terminates when the max disagreement drops to tol.
DdReport dd_solve(const Model& model, const std::vector<std::vector<double>>& theta_tilde,
                  const ForestDecomposition& fd, double rho, double tol, int max_iters,
                  DualState warm = {}, double clamp_floor = 1e-12);

/// Objective of the tree-weighted CCCP subproblem:
/// sum theta_tilde_i . mu_i + sum theta_ij . mu_ij - rho sum_a eta_a H_tree^a(mu).
double tree_subproblem_value(const Model& model,
                             const std::vector<std::vector<double>>& theta_tilde,
                             const ForestDecomposition& fd, double rho, const Marginals& mu);

/// Objective of the uniform CCCP subproblem:
/// sum theta_tilde_i . mu_i + sum theta_ij . mu_ij - rho sum_e H(mu_ij).
double uniform_subproblem_value(const Model& model,
                                const std::vector<std::vector<double>>& theta_tilde, double rho,
                                const Marginals& mu);

struct CccpTreeResult {
  Marginals mu;
  DualState duals;
  int iterations = 0;
  bool hit_iter_cap = false;
};

/// Inner CCCP loop for the tree weighting: alternates the tree unary
/// modification with dual-decomposition solves until ||mu^{t+1} - mu^t||_2
/// <= eps_dc. The dual state is warm-started across iterations.
CccpTreeResult cccp_tree(const Model& model, double rho, const Marginals& mu_init,
                         const ForestDecomposition& fd, const CccpOptions& opts,
                         DualState* warm = nullptr, const CccpObserver& observer = {});

}  // namespace lpqp
