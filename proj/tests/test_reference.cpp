#include <doctest.h>

#include <cmath>

#include "lpqp/bench.hpp"
#include "lpqp/treedd.hpp"
#include "reference_minimizer.hpp"
#include "test_util.hpp"

using namespace lpqp;
using lpqp::testing::Rng;

// The reference minimizer is itself an oracle, so it gets validated against
// closed forms that do not involve any solver code.

TEST_CASE("reference: single-edge uniform subproblem equals the Gibbs table") {
  Rng rng(149);
  for (double rho : {0.5, 1.0, 2.0}) {
    Table t = lpqp::testing::random_table(rng, 2, 2, 1.0);
    const Model m({2, 2},
                  {lpqp::testing::random_unary(rng, 2, 1.0), lpqp::testing::random_unary(rng, 2, 1.0)},
                  {{0, 1, std::move(t)}});
    const auto obj = lpqp::testing::uniform_smoothed(m, m.unaries(), rho);
    const auto res = lpqp::testing::reference_minimize(m, obj, 1e-8);
    REQUIRE(res.certified);
    const Marginals gibbs = brute_force_gibbs(m, rho);
    for (int c = 0; c < 4; ++c)
      CHECK(res.mu.edge[0].data[c] == doctest::Approx(gibbs.edge[0].data[c]).epsilon(1e-5));
  }
}

TEST_CASE("reference: single-tree tree subproblem equals Gibbs at temperature rho") {
  // With one tree covering everything (eta = 1), the tree entropy is the
  // exact entropy, so the minimizer is the Gibbs distribution's marginals.
  Rng rng(151);
  const Model m = lpqp::testing::random_tree_model(rng, 5, 2, 3, 1.0);
  const ForestDecomposition fd = decompose_forest(m);
  REQUIRE(fd.trees.size() == 1);
  const double rho = 0.9;
  const auto obj = lpqp::testing::tree_smoothed(m, m.unaries(), fd, rho);
  const auto res = lpqp::testing::reference_minimize(m, obj, 1e-9);
  REQUIRE(res.certified);
  // a duality gap of g bounds the marginal distance by ~sqrt(2 g / strong
  // convexity), so a 1e-9 certificate pins entries to roughly 1e-4
  const Marginals gibbs = brute_force_gibbs(m, rho);
  for (int i = 0; i < m.num_nodes(); ++i)
    for (int k = 0; k < m.cardinality(i); ++k)
      CHECK(res.mu.node[i][k] == doctest::Approx(gibbs.node[i][k]).epsilon(1e-4).scale(1.0));
}

TEST_CASE("reference: certificates are valid lower bounds") {
  Rng rng(157);
  for (int rep = 0; rep < 5; ++rep) {
    const Model m = lpqp::testing::random_chain_model(rng, 4, 2, 3, 1.0);
    const auto obj = lpqp::testing::uniform_smoothed(m, m.unaries(), rng.uniform(0.3, 2.0));
    const auto res = lpqp::testing::reference_minimize(m, obj, 1e-7);
    CHECK(res.gap >= -1e-10);
    CHECK(res.certified);
    // any feasible point evaluates above the bound
    const Marginals probe = lpqp::testing::random_consistent_marginals(m, rng);
    CHECK(lpqp::testing::smoothed_value(m, obj, probe) >= res.dual - 1e-9);
  }
}

TEST_CASE("reference: iterates end up feasible") {
  Rng rng(163);
  const Model m = lpqp::testing::random_cycle_model(rng, 4, 2, 3, 1.0);
  const auto obj = lpqp::testing::uniform_smoothed(m, m.unaries(), 1.0);
  const auto res = lpqp::testing::reference_minimize(m, obj, 1e-7);
  REQUIRE(res.certified);
  CHECK(consistency_gap(m, res.mu) <= 1e-10);
  CHECK(marginal_sum_violation(res.mu) <= 1e-12);
}
