#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "lpqp/model.hpp"

namespace lpqp {

/// Synthetic Potts instance on an M x M 4-neighbor grid (row-major node
/// ids, right and down edges). Unaries drawn Uniform(-sigma, sigma); each
/// edge gets a single coefficient alpha ~ Uniform(-1, 1) on its diagonal and
/// zeros elsewhere. A pure function of (side, states, sigma, seed): draws
/// come from two mt19937_64 streams (seed for unaries, seed xor
/// 0x9e3779b97f4a7c15 for edge coefficients) mapped through the top 53 bits,
/// so instances are reproducible across platforms.
Model generate_potts(int side, int states, double sigma, std::uint64_t seed);

/// Exhaustive MAP: lexicographically smallest argmin and its energy.
/// Throws std::invalid_argument when the state space exceeds 2^24.
std::pair<Assignment, double> brute_force_map(const Model& model);

/// Exact marginals of p(x) proportional to exp(-energy(x)/temperature) by
/// enumeration. Same state-space guard as brute_force_map.
Marginals brute_force_gibbs(const Model& model, double temperature);

struct ScoreReport {
  std::vector<double> energies;
  std::vector<double> scores;  // 1 best, 0 worst
};

/// Relative scores (max - e_i) / (max - min); all 1 when max == min. When a
/// known optimum is supplied it replaces the min in the denominator; it must
/// not exceed the smallest energy.
ScoreReport score(const std::vector<double>& energies, std::optional<double> optimum = {});

}  // namespace lpqp
