#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lpqp/model.hpp"
#include "lpqp/objective.hpp"
#include "lpqp/treedd.hpp"

namespace lpqp {

enum class Method { uniform, tree };
enum class RunStatus { converged, rho_capped, iter_capped };

std::string to_string(Method m);
std::string to_string(RunStatus s);

struct LpqpConfig {
  Method method = Method::uniform;
  std::optional<double> rho0;     // unset: 0.1 * mean |potential entry|, floored
  double rho_factor = 1.5;
  double eps_dc = 1e-4;
  double eps_rho = 1e-4;
  std::optional<double> rho_max;  // unset: 1e4 * resolved rho0
  int max_outer = 60;
  int max_dc_iters = 200;
  double inner_tol = 1e-8;
  double inner_tol_initial = 1e-6;  // looser tolerance at the first (small-rho) outer iteration
  int inner_max_iters = 2000;
  double damping = 0.0;
  std::uint64_t seed = 0;
  double clamp_floor = 1e-12;
  bool record_timing = true;
};

/// One row per CCCP iteration: the objectives of the current marginals, the
/// energy of their per-node argmax decoding, and inner-solver counters.
struct TraceRow {
  int outer = 0;
  int dc_iter = 0;
  double rho = 0.0;
  double lp_obj = 0.0;
  double penalty = 0.0;
  double lpqp_obj = 0.0;
  double decoded_energy = 0.0;
  int inner_iters = 0;
  double residual = 0.0;
  double seconds = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;
};

struct LpqpResult {
  Marginals final_marginals;
  Assignment rounded;
  double rounded_energy = 0.0;
  RunTrace trace;
  RunStatus status = RunStatus::iter_capped;
  double wall_seconds = 0.0;
  double resolved_rho0 = 0.0;
  double resolved_rho_max = 0.0;
  double final_rho = 0.0;
};

/// Full LPQP driver: uniform initialization, CCCP inner loop per rho, and a
/// multiplicative rho schedule; stops when the marginals stop changing
/// across an outer iteration (after at least two of them), the rho cap is
/// reached, or max_outer iterations ran. Inner solvers are warm-started
/// across the schedule. The tree method uses `decomposition` when given,
/// otherwise the greedy forest cover.
LpqpResult lpqp_run(const Model& model, const LpqpConfig& config,
                    const ForestDecomposition* decomposition = nullptr);

/// Sequential conditioning rounding: in ascending node order, pick the label
/// minimizing the unary plus the pairwise expectation against the current
/// (partially rounded) neighbor marginals, then fix that node to its
/// indicator. The result's energy never exceeds qp_objective of the input
/// node marginals. Ties break toward the smaller label.
Assignment round_solution(const Model& model, const Marginals& mu);

/// Independent per-node argmax decoding (ties toward the smaller label).
Assignment decode_argmax(const Marginals& mu);

/// Default initial penalty weight: 0.1 times the mean absolute potential
/// entry, floored at 1e-3.
double default_rho0(const Model& model);

}  // namespace lpqp
