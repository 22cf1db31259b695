#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "lpqp/model.hpp"
#include "test_util.hpp"

using namespace lpqp;
using lpqp::testing::Rng;

namespace {

Model two_node_model(std::vector<double> u1, std::vector<double> u2, Table t) {
  return Model({2, 2}, {std::move(u1), std::move(u2)}, {{0, 1, std::move(t)}});
}

Table table2(double a, double b, double c, double d) {
  Table t(2, 2);
  t.at(0, 0) = a;
  t.at(0, 1) = b;
  t.at(1, 0) = c;
  t.at(1, 1) = d;
  return t;
}

Model attractive_model() { return two_node_model({0, 0.1}, {0, 0.1}, table2(-1, 0, 0, -1)); }

}  // namespace

TEST_CASE("energy: direct sums") {
  const Model m = two_node_model({0, 1}, {0, 1}, table2(0, 1, 1, 0));
  CHECK(energy(m, {{0, 0}}) == doctest::Approx(0.0));
  CHECK(energy(m, {{1, 0}}) == doctest::Approx(2.0));

  const Model att = attractive_model();
  CHECK(energy(att, {{0, 0}}) == doctest::Approx(-1.0));
  // enumeration confirms (0,0) is also the MAP
  double best = 1e30;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) best = std::min(best, energy(att, {{a, b}}));
  CHECK(best == doctest::Approx(-1.0));
}

TEST_CASE("energy: errors on invalid assignments") {
  const Model m = attractive_model();
  CHECK_THROWS_AS(energy(m, {{0}}), std::invalid_argument);
  CHECK_THROWS_AS(energy(m, {{0, 2}}), std::invalid_argument);
}

TEST_CASE("energy: invariant under edge relabeling with transposed table") {
  Rng rng(11);
  Table t = lpqp::testing::random_table(rng, 2, 3, 1.0);
  const Model a({2, 3}, {{0.3, -0.2}, {0.1, 0.0, 0.6}}, {{0, 1, t}});
  const Model b({2, 3}, {{0.3, -0.2}, {0.1, 0.0, 0.6}}, {{1, 0, t.transposed()}});
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 3; ++y) CHECK(energy(a, {{x, y}}) == energy(b, {{x, y}}));
}

TEST_CASE("model: construction errors") {
  CHECK_THROWS_AS(Model({2}, {{0, 0}}, {{0, 0, Table(2, 2)}}), std::invalid_argument);
  CHECK_THROWS_AS(
      Model({2, 2}, {{0, 0}, {0, 0}}, {{0, 1, Table(2, 2)}, {1, 0, Table(2, 2)}}),
      std::invalid_argument);  // duplicate undirected edge
  CHECK_THROWS_AS(Model({2, 2}, {{0, 0}, {0, 0}}, {{0, 1, Table(3, 2)}}), std::invalid_argument);
  CHECK_THROWS_AS(Model({2, 2}, {{0, 0, 0}, {0, 0}}, {}), std::invalid_argument);
  Table bad(2, 2);
  bad.at(0, 0) = std::nan("");
  CHECK_THROWS_AS(Model({2, 2}, {{0, 0}, {0, 0}}, {{0, 1, bad}}), std::invalid_argument);
}

TEST_CASE("lp_objective: vertices and uniform tables") {
  const Model att = attractive_model();
  const Marginals vertex = integral_marginals(att, {{0, 0}});
  CHECK(lp_objective(att, vertex) == doctest::Approx(-1.0));
  CHECK(lp_objective(att, vertex) == doctest::Approx(energy(att, {{0, 0}})));

  const Model m = two_node_model({0, 1}, {0, 1}, table2(0, 1, 1, 0));
  CHECK(lp_objective(m, uniform_marginals(m)) == doctest::Approx(1.5));
}

TEST_CASE("lp_objective: all-uniform equals sum of table means") {
  Rng rng(5);
  const Model m = lpqp::testing::random_model(rng, 6, 0.5, 2, 4, 1.0);
  double expect = 0.0;
  for (int i = 0; i < m.num_nodes(); ++i) {
    double s = 0.0;
    for (double v : m.unary(i)) s += v;
    expect += s / m.cardinality(i);
  }
  for (int e = 0; e < m.num_edges(); ++e)
    expect += m.edge(e).table.sum() / static_cast<double>(m.edge(e).table.size());
  CHECK(lp_objective(m, uniform_marginals(m)) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("qp_objective: direct evaluations") {
  const Model att = attractive_model();
  CHECK(qp_objective(att, {{1, 0}, {1, 0}}) == doctest::Approx(energy(att, {{0, 0}})));
  CHECK(qp_objective(att, {{0.5, 0.5}, {0.5, 0.5}}) == doctest::Approx(-0.4));

  const Model single({3}, {{3, 1, 2}}, {});
  CHECK(qp_objective(single, {{0.2, 0.5, 0.3}}) ==
        doctest::Approx(3 * 0.2 + 1 * 0.5 + 2 * 0.3));
}

TEST_CASE("integral vertices: lp == qp == energy (random)") {
  Rng rng(17);
  for (int rep = 0; rep < 25; ++rep) {
    const Model m = lpqp::testing::random_model(rng, 5, 0.6, 2, 3, 2.0);
    Assignment x;
    for (int i = 0; i < m.num_nodes(); ++i)
      x.labels.push_back(rng.uniform_int(0, m.cardinality(i) - 1));
    const Marginals mu = integral_marginals(m, x);
    const double e = energy(m, x);
    CHECK(lp_objective(m, mu) == doctest::Approx(e).epsilon(1e-12));
    CHECK(qp_objective(m, mu.node) == doctest::Approx(e).epsilon(1e-12));
  }
}

TEST_CASE("consistency_gap: examples") {
  const Model m = two_node_model({0, 0}, {0, 0}, table2(0, 0, 0, 0));

  Marginals product = uniform_marginals(m);
  CHECK(consistency_gap(m, product) == doctest::Approx(0.0));

  Marginals correlated = product;
  correlated.edge[0] = table2(0.5, 0, 0, 0.5);
  CHECK(consistency_gap(m, correlated) == doctest::Approx(0.0));

  Marginals off = correlated;
  off.node[0] = {1, 0};
  CHECK(consistency_gap(m, off) == doctest::Approx(0.5));
}

TEST_CASE("consistency_gap: zero for product-form marginals (random)") {
  Rng rng(23);
  for (int rep = 0; rep < 25; ++rep) {
    const Model m = lpqp::testing::random_model(rng, 6, 0.5, 2, 4, 1.0);
    Marginals mu;
    mu.node.resize(m.num_nodes());
    for (int i = 0; i < m.num_nodes(); ++i)
      mu.node[i] = lpqp::testing::random_simplex(rng, m.cardinality(i));
    mu.edge.resize(m.num_edges());
    for (int e = 0; e < m.num_edges(); ++e) {
      const Edge& ed = m.edge(e);
      Table t(m.cardinality(ed.i), m.cardinality(ed.j));
      for (int k = 0; k < t.rows; ++k)
        for (int l = 0; l < t.cols; ++l) t.at(k, l) = mu.node[ed.i][k] * mu.node[ed.j][l];
      mu.edge[e] = std::move(t);
    }
    CHECK(consistency_gap(m, mu) <= 1e-12);
  }
}

TEST_CASE("marginal helpers") {
  const Model m = attractive_model();
  CHECK(marginal_sum_violation(uniform_marginals(m)) <= 1e-15);
  Marginals bad = uniform_marginals(m);
  bad.node[0] = {0.7, 0.7};
  CHECK(marginal_sum_violation(bad) == doctest::Approx(0.4));
  CHECK_THROWS_AS(lp_objective(m, Marginals{}), std::invalid_argument);
}
