#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "lpqp/bench.hpp"
#include "lpqp/io.hpp"
#include "test_util.hpp"

using namespace lpqp;
using lpqp::testing::Rng;

TEST_CASE("parse_uai: minimal unary instance") {
  const Model m = parse_uai("MARKOV\n1\n2\n1\n1 0\n\n2\n1 0.5\n");
  CHECK(m.num_nodes() == 1);
  CHECK(m.unary(0)[0] == doctest::Approx(0.0));
  CHECK(m.unary(0)[1] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("parse_uai: all-ones pairwise factor gives a zero-energy edge") {
  const Model m = parse_uai("MARKOV 2 2 2 1 2 0 1 4 1 1 1 1");
  REQUIRE(m.num_edges() == 1);
  for (double v : m.edge(0).table.data) CHECK(v == doctest::Approx(0.0));
  for (int i = 0; i < 2; ++i)
    for (double v : m.unary(i)) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("parse_uai: rejections carry context") {
  CHECK_THROWS_WITH_AS(parse_uai("BAYES 1 2 0"), doctest::Contains("MARKOV"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_uai("MARKOV 3 2 2 2 1 3 0 1 2 8 1 1 1 1 1 1 1 1"),
                       doctest::Contains("factor 0"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_uai("MARKOV 1 2 1 1 0 2 1 abc"), doctest::Contains("number"),
                       std::invalid_argument);
  CHECK_THROWS_AS(parse_uai("MARKOV 1 2 1 1 0 2 1"), std::invalid_argument);  // truncated
}

TEST_CASE("parse_uai: scope order fixes the table orientation") {
  // cards (2, 3); factor over scope (1, 0): rows follow variable 1
  const std::string text = "MARKOV 2 2 3 1 2 1 0 6 1 2 3 4 5 6";
  const Model m = parse_uai(text);
  REQUIRE(m.num_edges() == 1);
  CHECK(m.edge(0).i == 0);
  CHECK(m.edge(0).j == 1);
  REQUIRE(m.edge(0).table.rows == 2);
  REQUIRE(m.edge(0).table.cols == 3);
  // canonical table(x0, x1) = -log(v(x1, x0))
  CHECK(m.edge(0).table.at(0, 0) == doctest::Approx(-std::log(1.0)));
  CHECK(m.edge(0).table.at(1, 0) == doctest::Approx(-std::log(2.0)));
  CHECK(m.edge(0).table.at(0, 1) == doctest::Approx(-std::log(3.0)));
  CHECK(m.edge(0).table.at(1, 1) == doctest::Approx(-std::log(4.0)));
  CHECK(m.edge(0).table.at(0, 2) == doctest::Approx(-std::log(5.0)));
  CHECK(m.edge(0).table.at(1, 2) == doctest::Approx(-std::log(6.0)));
}

TEST_CASE("parse_uai: duplicate edges merge by summing energies") {
  const std::string text =
      "MARKOV 2 2 2 2 "
      "2 0 1 "
      "2 1 0 "
      "4 0.5 1 1 1 "
      "4 0.25 1 1 1 ";
  const Model m = parse_uai(text);
  REQUIRE(m.num_edges() == 1);
  CHECK(m.edge(0).table.at(0, 0) == doctest::Approx(std::log(2.0) + std::log(4.0)));
  CHECK(m.edge(0).table.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("uai round trip preserves energies") {
  Rng rng(191);
  for (int rep = 0; rep < 10; ++rep) {
    const Model m = lpqp::testing::random_model(rng, 6, 0.5, 2, 4, 2.0);
    const Model back = parse_uai(emit_uai(m));
    REQUIRE(back.num_nodes() == m.num_nodes());
    REQUIRE(back.num_edges() == m.num_edges());
    for (int i = 0; i < m.num_nodes(); ++i)
      for (int k = 0; k < m.cardinality(i); ++k)
        CHECK(back.unary(i)[k] == doctest::Approx(m.unary(i)[k]).epsilon(1e-9).scale(1.0));
    for (int e = 0; e < m.num_edges(); ++e)
      for (std::size_t c = 0; c < m.edge(e).table.data.size(); ++c)
        CHECK(back.edge(e).table.data[c] ==
              doctest::Approx(m.edge(e).table.data[c]).epsilon(1e-9).scale(1.0));
  }
}

TEST_CASE("emit_uai: range guard") {
  const Model m({2}, {{0.0, 800.0}}, {});
  CHECK_THROWS_AS(emit_uai(m), std::domain_error);
}

TEST_CASE("native json round trip is exact") {
  Rng rng(193);
  const Model m = lpqp::testing::random_model(rng, 5, 0.6, 2, 4, 3.0);
  const Model back = parse_model_json(emit_model_json(m));
  REQUIRE(back.num_nodes() == m.num_nodes());
  REQUIRE(back.num_edges() == m.num_edges());
  for (int i = 0; i < m.num_nodes(); ++i)
    for (int k = 0; k < m.cardinality(i); ++k) CHECK(back.unary(i)[k] == m.unary(i)[k]);
  for (int e = 0; e < m.num_edges(); ++e) {
    CHECK(back.edge(e).i == m.edge(e).i);
    CHECK(back.edge(e).j == m.edge(e).j);
    for (std::size_t c = 0; c < m.edge(e).table.data.size(); ++c)
      CHECK(back.edge(e).table.data[c] == m.edge(e).table.data[c]);
  }
}

TEST_CASE("trace csv: fixed header and one row per iteration") {
  RunTrace trace;
  TraceRow row;
  row.outer = 1;
  row.dc_iter = 2;
  row.rho = 0.5;
  row.lp_obj = -1.25;
  trace.rows.push_back(row);
  const std::string csv = trace_to_csv(trace);
  CHECK(csv.substr(0, csv.find('\n')) ==
        "outer,dc_iter,rho,lp_obj,penalty,lpqp_obj,decoded_energy,inner_iters,residual,seconds");
  CHECK(csv.find("\n1,2,0.5,-1.25,") != std::string::npos);
}

TEST_CASE("model json: num_nodes cross-check") {
  CHECK_THROWS_AS(parse_model_json("{\"num_nodes\": 3, \"cardinalities\": [2], "
                                   "\"unaries\": [[0,0]], \"edges\": []}"),
                  std::invalid_argument);
}
