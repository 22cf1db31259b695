#pragma once

#include <functional>
#include <vector>

#include "lpqp/model.hpp"
#include "lpqp/objective.hpp"

namespace lpqp {

/// Log-domain messages of the norm-product solver, two per model edge:
/// to_hi[e] flows from edge.i to edge.j (length K_j), to_lo[e] flows from
/// edge.j to edge.i (length K_i). Normalized so the max entry is zero.
struct MessageState {
  std::vector<std::vector<double>> to_hi;
  std::vector<std::vector<double>> to_lo;

  static MessageState zero(const Model& model);

  /// Max absolute entry difference; states must share a model.
  double max_abs_diff(const MessageState& other) const;
};

struct InnerSolveReport {
  Marginals marginals;
  MessageState messages;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

/// One synchronous (Jacobi) norm-product pass: every directed message is
/// recomputed from the previous state, in fixed (source, target) order.
/// theta_tilde are the CCCP-modified unaries; pairwise potentials come from
/// the model. Optional log-domain damping: new = damping*old +
/// (1-damping)*update. Throws if rho <= 0.
MessageState normprod_step(const Model& model,
                           const std::vector<std::vector<double>>& theta_tilde, double rho,
                           const MessageState& msgs, double damping = 0.0);

/// Node and edge beliefs induced by a message state. Node marginals follow
/// the norm-product formula; edge marginals combine the pairwise potential
/// at temperature rho with the cavity beliefs of both endpoints (the node
/// belief with the partner's message removed), which satisfies the
/// marginalization constraints at the fixed point. Degree-0 nodes get the
/// indicator of their unary argmin (the subproblem is linear in them).
Marginals beliefs(const Model& model, const std::vector<std::vector<double>>& theta_tilde,
                  double rho, const MessageState& msgs);

/// Runs synchronous passes until the max log-message change drops to tol or
/// max_iters is hit. Warm-startable through init_msgs. Never throws on
/// non-convergence; the report carries a flag.
InnerSolveReport solve_inner_uniform(const Model& model,
                                     const std::vector<std::vector<double>>& theta_tilde,
                                     double rho, const MessageState& init_msgs, double tol,
                                     int max_iters, double damping = 0.0);

struct CccpOptions {
  double eps_dc = 1e-4;
  double inner_tol = 1e-8;
  int max_dc_iters = 200;
  int inner_max_iters = 2000;
  double clamp_floor = 1e-12;
  double damping = 0.0;
};

/// Called once per CCCP iterate with the fresh marginals, the inner solver's
/// iteration count and residual, and ||mu_new - mu_old||_2.
using CccpObserver =
    std::function<void(const Marginals& mu, int inner_iters, double inner_residual,
                       double mu_delta)>;

struct CccpUniformResult {
  Marginals mu;
  MessageState messages;
  int iterations = 0;
  bool hit_iter_cap = false;
};

/// Inner CCCP loop for the uniform weighting: alternates the unary
/// modification with norm-product solves until ||mu^{t+1} - mu^t||_2 <=
/// eps_dc. Messages are warm-started across iterations (and from warm_msgs
/// when given).
CccpUniformResult cccp_uniform(const Model& model, double rho, const Marginals& mu_init,
                               const CccpOptions& opts, const MessageState* warm_msgs = nullptr,
                               const CccpObserver& observer = {});

}  // namespace lpqp
