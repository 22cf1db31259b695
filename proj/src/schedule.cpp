#include "lpqp/schedule.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "lpqp/normprod.hpp"

namespace lpqp {

std::string to_string(Method m) { return m == Method::uniform ? "uniform" : "tree"; }

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::rho_capped: return "rho_capped";
    default: return "iter_capped";
  }
}

double default_rho0(const Model& model) {
  double abs_sum = 0.0;
  std::size_t count = 0;
  for (int i = 0; i < model.num_nodes(); ++i) {
    for (double v : model.unary(i)) abs_sum += std::abs(v);
    count += model.unary(i).size();
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    for (double v : model.edge(e).table.data) abs_sum += std::abs(v);
    count += model.edge(e).table.size();
  }
  const double mean = count > 0 ? abs_sum / static_cast<double>(count) : 0.0;
  return std::max(0.1 * mean, 1e-3);
}

Assignment decode_argmax(const Marginals& mu) {
  Assignment x;
  x.labels.resize(mu.node.size());
  for (std::size_t i = 0; i < mu.node.size(); ++i) {
    const auto& v = mu.node[i];
    int best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k] > v[best]) best = static_cast<int>(k);
    x.labels[i] = best;
  }
  return x;
}

Assignment round_solution(const Model& model, const Marginals& mu) {
  check_marginal_shapes(model, mu);
  std::vector<std::vector<double>> work = mu.node;
  Assignment x;
  x.labels.resize(model.num_nodes());
  std::vector<double> cost;
  for (int i = 0; i < model.num_nodes(); ++i) {
    cost = model.unary(i);
    for (const IncidentEdge& inc : model.incident(i)) {
      const Edge& ed = model.edge(inc.edge);
      const auto& partner = work[inc.neighbor];
      if (ed.i == i) {
        for (int k = 0; k < ed.table.rows; ++k) {
          double s = 0.0;
          for (int l = 0; l < ed.table.cols; ++l) s += ed.table.at(k, l) * partner[l];
          cost[k] += s;
        }
      } else {
        for (int l = 0; l < ed.table.cols; ++l) {
          double s = 0.0;
          for (int k = 0; k < ed.table.rows; ++k) s += ed.table.at(k, l) * partner[k];
          cost[l] += s;
        }
      }
    }
    int best = 0;
    for (std::size_t k = 1; k < cost.size(); ++k)
      if (cost[k] < cost[best]) best = static_cast<int>(k);
    x.labels[i] = best;
    work[i].assign(work[i].size(), 0.0);
    work[i][best] = 1.0;
  }
  return x;
}

namespace {

void validate_config(const LpqpConfig& c) {
  if (c.rho0 && !(*c.rho0 > 0.0)) throw std::invalid_argument("config: rho0 must be > 0");
  if (!(c.rho_factor > 1.0)) throw std::invalid_argument("config: rho_factor must be > 1");
  if (!(c.eps_dc > 0.0) || !(c.eps_rho > 0.0) || !(c.inner_tol > 0.0) ||
      !(c.inner_tol_initial > 0.0) || !(c.clamp_floor > 0.0))
    throw std::invalid_argument("config: tolerances must be > 0");
  if (c.rho_max && c.rho0 && *c.rho_max < *c.rho0)
    throw std::invalid_argument("config: rho0 must not exceed rho_max");
  if (c.max_outer < 1 || c.max_dc_iters < 1 || c.inner_max_iters < 1)
    throw std::invalid_argument("config: iteration caps must be >= 1");
  if (c.damping < 0.0 || c.damping >= 1.0)
    throw std::invalid_argument("config: damping must be in [0, 1)");
}

}  // namespace

LpqpResult lpqp_run(const Model& model, const LpqpConfig& config,
                    const ForestDecomposition* decomposition) {
  validate_config(config);
  const auto t_start = std::chrono::steady_clock::now();

  LpqpResult result;
  result.resolved_rho0 = config.rho0 ? *config.rho0 : default_rho0(model);
  result.resolved_rho_max = config.rho_max ? *config.rho_max : 1e4 * result.resolved_rho0;
  if (result.resolved_rho0 > result.resolved_rho_max)
    throw std::invalid_argument("config: rho0 must not exceed rho_max");

  ForestDecomposition greedy;
  const ForestDecomposition* fd = decomposition;
  if (config.method == Method::tree && fd == nullptr) {
    greedy = decompose_forest(model);
    fd = &greedy;
  }
  const PenaltyKind kind =
      config.method == Method::tree ? PenaltyKind::tree(*fd) : PenaltyKind::uniform();

  Marginals mu = uniform_marginals(model);
  MessageState msgs = MessageState::zero(model);
  DualState duals;

  double rho = result.resolved_rho0;
  result.status = RunStatus::iter_capped;

  auto elapsed = [&]() {
    if (!config.record_timing) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  };

  for (int outer = 0; outer < config.max_outer; ++outer) {
    const Marginals mu_snapshot = mu;
    result.final_rho = rho;

    CccpOptions opts;
    opts.eps_dc = config.eps_dc;
    opts.inner_tol = outer == 0 ? std::max(config.inner_tol, config.inner_tol_initial)
                                : config.inner_tol;
    opts.max_dc_iters = config.max_dc_iters;
    opts.inner_max_iters = config.inner_max_iters;
    opts.clamp_floor = config.clamp_floor;
    opts.damping = config.damping;

    int dc_iter = 0;
    CccpObserver observer = [&](const Marginals& m, int inner_iters, double residual,
                                double /*delta*/) {
      TraceRow row;
      row.outer = outer;
      row.dc_iter = dc_iter++;
      row.rho = rho;
      row.lp_obj = lp_objective(model, m);
      row.penalty = penalty(model, m, kind);
      row.lpqp_obj = row.lp_obj + rho * row.penalty;
      row.decoded_energy = energy(model, decode_argmax(m));
      row.inner_iters = inner_iters;
      row.residual = residual;
      row.seconds = elapsed();
      result.trace.rows.push_back(row);
    };

    if (config.method == Method::uniform) {
      CccpUniformResult r = cccp_uniform(model, rho, mu, opts, &msgs, observer);
      mu = std::move(r.mu);
      msgs = std::move(r.messages);
    } else {
      CccpTreeResult r = cccp_tree(model, rho, mu, *fd, opts, &duals, observer);
      mu = std::move(r.mu);
      duals = std::move(r.duals);
    }

    // At least two outer iterations must run before the change test can
    // fire; a uniform start can otherwise exit spuriously at rho_0.
    if (outer >= 1 && marginal_distance(mu, mu_snapshot) <= config.eps_rho) {
      result.status = RunStatus::converged;
      break;
    }
    rho *= config.rho_factor;
    if (rho > result.resolved_rho_max) {
      result.status = RunStatus::rho_capped;
      break;
    }
  }

  result.final_marginals = std::move(mu);
  result.rounded = round_solution(model, result.final_marginals);
  result.rounded_energy = energy(model, result.rounded);
  result.wall_seconds = elapsed();
  return result;
}

}  // namespace lpqp
