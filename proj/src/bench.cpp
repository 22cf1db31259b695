#include "lpqp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lpqp {

namespace {

constexpr std::uint64_t kEdgeStreamSalt = 0x9e3779b97f4a7c15ull;

// Top 53 bits of the generator output, mapped to [0, 1). Not routed through
// std::uniform_real_distribution, whose output is implementation-defined.
double uniform_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_symmetric(std::mt19937_64& rng, double half_width) {
  return half_width * (2.0 * uniform_unit(rng) - 1.0);
}

// Product of cardinalities with the 2^24 enumeration guard.
std::uint64_t guarded_state_count(const Model& model) {
  std::uint64_t count = 1;
  for (int i = 0; i < model.num_nodes(); ++i) {
    count *= static_cast<std::uint64_t>(model.cardinality(i));
    if (count > (1ull << 24))
      throw std::invalid_argument("brute force: state space exceeds 2^24");
  }
  return count;
}

// Calls fn(labels, energy) for every assignment in lexicographic order.
template <typename Fn>
void enumerate(const Model& model, Fn&& fn) {
  const int n = model.num_nodes();
  std::vector<int> labels(n, 0);
  Assignment x;
  while (true) {
    x.labels = labels;
    fn(labels, energy(model, x));
    int pos = n - 1;
    while (pos >= 0) {
      if (++labels[pos] < model.cardinality(pos)) break;
      labels[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

}  // namespace

Model generate_potts(int side, int states, double sigma, std::uint64_t seed) {
  if (side < 2) throw std::invalid_argument("generate_potts: side must be >= 2");
  if (states < 2) throw std::invalid_argument("generate_potts: states must be >= 2");
  if (!(sigma > 0.0)) throw std::invalid_argument("generate_potts: sigma must be > 0");

  const int n = side * side;
  std::mt19937_64 unary_rng(seed);
  std::mt19937_64 edge_rng(seed ^ kEdgeStreamSalt);

  std::vector<int> cards(n, states);
  std::vector<std::vector<double>> unaries(n);
  for (int i = 0; i < n; ++i) {
    unaries[i].resize(states);
    for (int k = 0; k < states; ++k) unaries[i][k] = uniform_symmetric(unary_rng, sigma);
  }

  std::vector<Edge> edges;
  edges.reserve(2 * side * (side - 1));
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const int i = r * side + c;
      for (const int j : {c + 1 < side ? i + 1 : -1, r + 1 < side ? i + side : -1}) {
        if (j < 0) continue;
        const double alpha = uniform_symmetric(edge_rng, 1.0);
        Table t(states, states, 0.0);
        for (int k = 0; k < states; ++k) t.at(k, k) = alpha;
        edges.push_back({i, j, std::move(t)});
      }
    }
  }
  return Model(std::move(cards), std::move(unaries), std::move(edges));
}

std::pair<Assignment, double> brute_force_map(const Model& model) {
  guarded_state_count(model);
  Assignment best;
  double best_energy = 0.0;
  bool first = true;
  enumerate(model, [&](const std::vector<int>& labels, double e) {
    if (first || e < best_energy) {
      best.labels = labels;
      best_energy = e;
      first = false;
    }
  });
  return {best, best_energy};
}

Marginals brute_force_gibbs(const Model& model, double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("brute_force_gibbs: temperature must be > 0");
  guarded_state_count(model);

  double min_energy = 0.0;
  bool first = true;
  enumerate(model, [&](const std::vector<int>&, double e) {
    if (first || e < min_energy) {
      min_energy = e;
      first = false;
    }
  });

  Marginals mu;
  mu.node.resize(model.num_nodes());
  for (int i = 0; i < model.num_nodes(); ++i) mu.node[i].assign(model.cardinality(i), 0.0);
  mu.edge.resize(model.num_edges());
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    mu.edge[e] = Table(model.cardinality(ed.i), model.cardinality(ed.j), 0.0);
  }

  double z = 0.0;
  enumerate(model, [&](const std::vector<int>& labels, double e) {
    const double w = std::exp(-(e - min_energy) / temperature);
    z += w;
    for (int i = 0; i < model.num_nodes(); ++i) mu.node[i][labels[i]] += w;
    for (int k = 0; k < model.num_edges(); ++k) {
      const Edge& ed = model.edge(k);
      mu.edge[k].at(labels[ed.i], labels[ed.j]) += w;
    }
  });

  for (auto& v : mu.node)
    for (double& x : v) x /= z;
  for (auto& t : mu.edge)
    for (double& x : t.data) x /= z;
  return mu;
}

ScoreReport score(const std::vector<double>& energies, std::optional<double> optimum) {
  if (energies.size() < 2) throw std::invalid_argument("score: need at least two energies");
  const double worst = *std::max_element(energies.begin(), energies.end());
  const double best = *std::min_element(energies.begin(), energies.end());
  if (optimum && *optimum > best + 1e-12 * (1.0 + std::abs(best)))
    throw std::invalid_argument("score: known optimum exceeds the best energy");
  const double denom = worst - (optimum ? *optimum : best);

  ScoreReport report;
  report.energies = energies;
  report.scores.resize(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i)
    report.scores[i] = denom > 0.0 ? (worst - energies[i]) / denom : 1.0;
  return report;
}

}  // namespace lpqp
