#include "lpqp/normprod.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lpqp/numeric.hpp"

namespace lpqp {

MessageState MessageState::zero(const Model& model) {
  MessageState s;
  s.to_hi.resize(model.num_edges());
  s.to_lo.resize(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    s.to_hi[e].assign(model.cardinality(ed.j), 0.0);
    s.to_lo[e].assign(model.cardinality(ed.i), 0.0);
  }
  return s;
}

double MessageState::max_abs_diff(const MessageState& other) const {
  double worst = 0.0;
  for (std::size_t e = 0; e < to_hi.size(); ++e) {
    for (std::size_t k = 0; k < to_hi[e].size(); ++k)
      worst = std::max(worst, std::abs(to_hi[e][k] - other.to_hi[e][k]));
    for (std::size_t k = 0; k < to_lo[e].size(); ++k)
      worst = std::max(worst, std::abs(to_lo[e][k] - other.to_lo[e][k]));
  }
  return worst;
}

namespace {

// S_i(x_i) = -theta_tilde_i(x_i) + sum over incoming log-messages, the
// shared factor of both the message update and the belief formulas.
// Accumulation follows the incident list (sorted by neighbor).
std::vector<std::vector<double>> incoming_sums(const Model& model,
                                               const std::vector<std::vector<double>>& theta_tilde,
                                               const MessageState& msgs) {
  std::vector<std::vector<double>> sums(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    const auto& th = theta_tilde[i];
    auto& s = sums[i];
    s.resize(th.size());
    for (std::size_t k = 0; k < th.size(); ++k) s[k] = -th[k];
    for (const IncidentEdge& inc : model.incident(i)) {
      const auto& m = (model.edge(inc.edge).i == i) ? msgs.to_lo[inc.edge] : msgs.to_hi[inc.edge];
      for (std::size_t k = 0; k < s.size(); ++k) s[k] += m[k];
    }
  }
  return sums;
}

void check_theta_tilde(const Model& model, const std::vector<std::vector<double>>& theta_tilde) {
  if (static_cast<int>(theta_tilde.size()) != model.num_nodes())
    throw std::invalid_argument("normprod: theta_tilde node count mismatch");
  for (int i = 0; i < model.num_nodes(); ++i)
    if (static_cast<int>(theta_tilde[i].size()) != model.cardinality(i))
      throw std::invalid_argument("normprod: theta_tilde length mismatch");
}

}  // namespace

MessageState normprod_step(const Model& model,
                           const std::vector<std::vector<double>>& theta_tilde, double rho,
                           const MessageState& msgs, double damping) {
  if (!(rho > 0.0)) throw std::invalid_argument("normprod_step: rho must be > 0");
  check_theta_tilde(model, theta_tilde);

  const auto sums = incoming_sums(model, theta_tilde, msgs);
  MessageState next = MessageState::zero(model);
  std::vector<double> vals;

  // Jacobi pass: all updates read the previous state. The sum over the
  // sender's incoming messages includes the reverse message, which then
  // enters again with exponent -1/rho, matching the norm-product rule.
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    const Table& th = ed.table;
    const int ki = model.cardinality(ed.i);
    const int kj = model.cardinality(ed.j);
    const double di = model.degree(ed.i);
    const double dj = model.degree(ed.j);

    // j -> i (sender hi endpoint)
    auto& mlo = next.to_lo[e];
    for (int k = 0; k < ki; ++k) {
      vals.resize(kj);
      for (int l = 0; l < kj; ++l)
        vals[l] = (-th.at(k, l) - msgs.to_hi[e][l]) / rho + sums[ed.j][l] / (dj * rho);
      mlo[k] = rho * log_sum_exp(vals);
    }
    // i -> j
    auto& mhi = next.to_hi[e];
    for (int l = 0; l < kj; ++l) {
      vals.resize(ki);
      for (int k = 0; k < ki; ++k)
        vals[k] = (-th.at(k, l) - msgs.to_lo[e][k]) / rho + sums[ed.i][k] / (di * rho);
      mhi[l] = rho * log_sum_exp(vals);
    }

    if (damping > 0.0) {
      for (int k = 0; k < ki; ++k) mlo[k] = damping * msgs.to_lo[e][k] + (1.0 - damping) * mlo[k];
      for (int l = 0; l < kj; ++l) mhi[l] = damping * msgs.to_hi[e][l] + (1.0 - damping) * mhi[l];
    }
    normalize_max_zero(mlo);
    normalize_max_zero(mhi);
  }
  return next;
}

Marginals beliefs(const Model& model, const std::vector<std::vector<double>>& theta_tilde,
                  double rho, const MessageState& msgs) {
  if (!(rho > 0.0)) throw std::invalid_argument("beliefs: rho must be > 0");
  check_theta_tilde(model, theta_tilde);

  const auto sums = incoming_sums(model, theta_tilde, msgs);
  Marginals mu;
  mu.node.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) {
    const int d = model.degree(i);
    auto& b = mu.node[i];
    if (d == 0) {
      // No entropy acts on isolated nodes; the subproblem is linear, so the
      // minimizer is the unary argmin (ties to the smallest label).
      const auto& th = theta_tilde[i];
      int best = 0;
      for (std::size_t k = 1; k < th.size(); ++k)
        if (th[k] < th[best]) best = static_cast<int>(k);
      b.assign(th.size(), 0.0);
      b[best] = 1.0;
      continue;
    }
    b = sums[i];
    for (double& x : b) x /= d * rho;
    exp_normalize(b);
  }

  mu.edge.resize(model.num_edges());
  std::vector<double> cav_lo, cav_hi;
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    const int ki = model.cardinality(ed.i);
    const int kj = model.cardinality(ed.j);
    cav_lo.resize(ki);
    cav_hi.resize(kj);
    for (int k = 0; k < ki; ++k) cav_lo[k] = sums[ed.i][k] / model.degree(ed.i) - msgs.to_lo[e][k];
    for (int l = 0; l < kj; ++l) cav_hi[l] = sums[ed.j][l] / model.degree(ed.j) - msgs.to_hi[e][l];

    Table t(ki, kj);
    for (int k = 0; k < ki; ++k)
      for (int l = 0; l < kj; ++l)
        t.at(k, l) = (-ed.table.at(k, l) + cav_lo[k] + cav_hi[l]) / rho;
    exp_normalize(t.data);
    mu.edge[e] = std::move(t);
  }
  return mu;
}

InnerSolveReport solve_inner_uniform(const Model& model,
                                     const std::vector<std::vector<double>>& theta_tilde,
                                     double rho, const MessageState& init_msgs, double tol,
                                     int max_iters, double damping) {
  InnerSolveReport report;
  MessageState cur = init_msgs;
  for (int it = 1; it <= max_iters; ++it) {
    MessageState next = normprod_step(model, theta_tilde, rho, cur, damping);
    report.final_residual = next.max_abs_diff(cur);
    report.iterations = it;
    cur = std::move(next);
    if (report.final_residual <= tol) {
      report.converged = true;
      break;
    }
  }
  report.marginals = beliefs(model, theta_tilde, rho, cur);
  report.messages = std::move(cur);
  return report;
}

CccpUniformResult cccp_uniform(const Model& model, double rho, const Marginals& mu_init,
                               const CccpOptions& opts, const MessageState* warm_msgs,
                               const CccpObserver& observer) {
  if (!(rho > 0.0)) throw std::invalid_argument("cccp_uniform: rho must be > 0");
  check_marginal_shapes(model, mu_init);

  CccpUniformResult result;
  result.mu = mu_init;
  result.messages = warm_msgs ? *warm_msgs : MessageState::zero(model);
  const PenaltyKind kind = PenaltyKind::uniform();

  for (int t = 1; t <= opts.max_dc_iters; ++t) {
    const auto theta_tilde = modified_unaries(model, result.mu, rho, kind, opts.clamp_floor);
    InnerSolveReport inner = solve_inner_uniform(model, theta_tilde, rho, result.messages,
                                                 opts.inner_tol, opts.inner_max_iters,
                                                 opts.damping);
    const double delta = marginal_distance(inner.marginals, result.mu);
    result.mu = std::move(inner.marginals);
    result.messages = std::move(inner.messages);
    result.iterations = t;
    if (observer) observer(result.mu, inner.iterations, inner.final_residual, delta);
    if (delta <= opts.eps_dc) return result;
  }
  result.hit_iter_cap = true;
  return result;
}

}  // namespace lpqp
