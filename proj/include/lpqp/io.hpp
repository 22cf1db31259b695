#pragma once

#include <string>

#include "lpqp/model.hpp"
#include "lpqp/schedule.hpp"

namespace lpqp {

/// Parses the pairwise subset of the UAI MARKOV text format. Factor values
/// v become energies -log(max(v, 1e-300)); arity-2 tables are read row-major
/// with the first scope variable as the row and transposed into canonical
/// orientation as needed; duplicate edges merge by summing energies;
/// repeated unary factors accumulate. Factors of arity other than 1 or 2 are
/// rejected with the factor index in the message.
Model parse_uai(const std::string& text);

/// Serializes a model as UAI MARKOV with one unary factor per node and one
/// pairwise factor per edge, table values exp(-theta). Energies above 700 in
/// magnitude would overflow the exponential and are rejected.
std::string emit_uai(const Model& model);

/// Native JSON model format; stores energies directly.
Model parse_model_json(const std::string& text);
std::string emit_model_json(const Model& model);

enum class ModelFormat { uai, native };

/// Reads a model from disk; the format is inferred from the extension
/// (.json -> native, anything else -> UAI) unless forced.
Model load_model(const std::string& path, std::optional<ModelFormat> format = {});
void save_model(const Model& model, const std::string& path,
                std::optional<ModelFormat> format = {});

/// Fixed-column CSV: outer,dc_iter,rho,lp_obj,penalty,lpqp_obj,
/// decoded_energy,inner_iters,residual,seconds. Floats with 17 significant
/// digits.
std::string trace_to_csv(const RunTrace& trace);

/// Result document: assignment, energy, status, config echo, wall time.
/// Floats with 17 significant digits; key order fixed, so identical runs
/// serialize to identical bytes.
std::string result_to_json(const LpqpResult& result, const LpqpConfig& config);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// Marginals as JSON (used by the oracle-gibbs subcommand).
std::string marginals_to_json(const Model& model, const Marginals& mu);

}  // namespace lpqp
