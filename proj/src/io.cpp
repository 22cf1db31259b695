#include "lpqp/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

namespace lpqp {

namespace {

// Whitespace tokenizer with position-aware error messages.
class TokenReader {
 public:
  explicit TokenReader(const std::string& text) : in_(text) {}

  std::string next(const char* what) {
    std::string tok;
    if (!(in_ >> tok))
      throw std::invalid_argument(std::string("uai: unexpected end of input, expected ") + what);
    return tok;
  }

  long next_int(const char* what) {
    const std::string tok = next(what);
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("uai: expected integer for ") + what + ", got '" +
                                  tok + "'");
    }
  }

  double next_double(const char* what) {
    const std::string tok = next(what);
    try {
      std::size_t pos = 0;
      const double v = std::stod(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("uai: expected number for ") + what + ", got '" +
                                  tok + "'");
    }
  }

 private:
  std::istringstream in_;
};

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double value_to_energy(double v) { return -std::log(std::max(v, 1e-300)); }

}  // namespace

Model parse_uai(const std::string& text) {
  TokenReader tok(text);
  const std::string preamble = tok.next("MARKOV preamble");
  if (preamble != "MARKOV")
    throw std::invalid_argument("uai: malformed header, expected MARKOV, got '" + preamble + "'");

  const long n = tok.next_int("variable count");
  if (n < 1) throw std::invalid_argument("uai: variable count must be >= 1");
  std::vector<int> cards(n);
  for (long i = 0; i < n; ++i) {
    const long k = tok.next_int("cardinality");
    if (k < 1) throw std::invalid_argument("uai: cardinality must be >= 1");
    cards[i] = static_cast<int>(k);
  }

  const long nf = tok.next_int("factor count");
  if (nf < 0) throw std::invalid_argument("uai: negative factor count");
  std::vector<std::vector<int>> scopes(nf);
  for (long f = 0; f < nf; ++f) {
    const long arity = tok.next_int("factor arity");
    if (arity != 1 && arity != 2)
      throw std::invalid_argument("uai: factor " + std::to_string(f) + " has arity " +
                                  std::to_string(arity) + "; only arity 1 or 2 supported");
    scopes[f].resize(arity);
    for (long s = 0; s < arity; ++s) {
      const long v = tok.next_int("scope variable");
      if (v < 0 || v >= n) throw std::invalid_argument("uai: scope variable out of range");
      scopes[f][s] = static_cast<int>(v);
    }
    if (arity == 2 && scopes[f][0] == scopes[f][1])
      throw std::invalid_argument("uai: factor " + std::to_string(f) +
                                  " repeats a variable in its scope");
  }

  std::vector<std::vector<double>> unaries(n);
  for (long i = 0; i < n; ++i) unaries[i].assign(cards[i], 0.0);
  std::map<std::pair<int, int>, Table> edge_tables;

  for (long f = 0; f < nf; ++f) {
    const long count = tok.next_int("table size");
    const auto& scope = scopes[f];
    long expected = cards[scope[0]];
    if (scope.size() == 2) expected *= cards[scope[1]];
    if (count != expected)
      throw std::invalid_argument("uai: factor " + std::to_string(f) + " table size " +
                                  std::to_string(count) + ", expected " +
                                  std::to_string(expected));
    if (scope.size() == 1) {
      for (int k = 0; k < cards[scope[0]]; ++k)
        unaries[scope[0]][k] += value_to_energy(tok.next_double("table value"));
      continue;
    }
    // Row-major with the first scope variable as the row.
    int a = scope[0], b = scope[1];
    Table t(cards[a], cards[b]);
    for (int k = 0; k < t.rows; ++k)
      for (int l = 0; l < t.cols; ++l)
        t.at(k, l) = value_to_energy(tok.next_double("table value"));
    if (a > b) {
      t = t.transposed();
      std::swap(a, b);
    }
    auto [it, inserted] = edge_tables.try_emplace({a, b}, t);
    if (!inserted)
      for (std::size_t c = 0; c < t.data.size(); ++c) it->second.data[c] += t.data[c];
  }

  std::vector<Edge> edges;
  edges.reserve(edge_tables.size());
  for (auto& [key, table] : edge_tables) edges.push_back({key.first, key.second, std::move(table)});
  return Model(std::move(cards), std::move(unaries), std::move(edges));
}

std::string emit_uai(const Model& model) {
  for (int i = 0; i < model.num_nodes(); ++i)
    for (double v : model.unary(i))
      if (std::abs(v) > 700.0)
        throw std::domain_error("emit_uai: energy magnitude above 700 cannot round-trip");
  for (int e = 0; e < model.num_edges(); ++e)
    for (double v : model.edge(e).table.data)
      if (std::abs(v) > 700.0)
        throw std::domain_error("emit_uai: energy magnitude above 700 cannot round-trip");

  std::ostringstream out;
  out << "MARKOV\n" << model.num_nodes() << "\n";
  for (int i = 0; i < model.num_nodes(); ++i) out << (i ? " " : "") << model.cardinality(i);
  out << "\n" << model.num_nodes() + model.num_edges() << "\n";
  for (int i = 0; i < model.num_nodes(); ++i) out << "1 " << i << "\n";
  for (int e = 0; e < model.num_edges(); ++e)
    out << "2 " << model.edge(e).i << " " << model.edge(e).j << "\n";
  for (int i = 0; i < model.num_nodes(); ++i) {
    out << "\n" << model.cardinality(i) << "\n";
    for (int k = 0; k < model.cardinality(i); ++k)
      out << (k ? " " : "") << fmt_double(std::exp(-model.unary(i)[k]));
    out << "\n";
  }
  for (int e = 0; e < model.num_edges(); ++e) {
    const Table& t = model.edge(e).table;
    out << "\n" << t.size() << "\n";
    for (int k = 0; k < t.rows; ++k) {
      for (int l = 0; l < t.cols; ++l) out << (l ? " " : "") << fmt_double(std::exp(-t.at(k, l)));
      out << "\n";
    }
  }
  return out.str();
}

Model parse_model_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  std::vector<int> cards = j.at("cardinalities").get<std::vector<int>>();
  if (j.contains("num_nodes") && j.at("num_nodes").get<std::size_t>() != cards.size())
    throw std::invalid_argument("model json: num_nodes does not match cardinalities");
  auto unaries = j.at("unaries").get<std::vector<std::vector<double>>>();
  std::vector<Edge> edges;
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.i = je.at("i").get<int>();
    e.j = je.at("j").get<int>();
    const auto rows = je.at("table").get<std::vector<std::vector<double>>>();
    e.table.rows = static_cast<int>(rows.size());
    e.table.cols = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != e.table.cols)
        throw std::invalid_argument("model json: ragged edge table");
      e.table.data.insert(e.table.data.end(), row.begin(), row.end());
    }
    edges.push_back(std::move(e));
  }
  return Model(std::move(cards), std::move(unaries), std::move(edges));
}

std::string emit_model_json(const Model& model) {
  nlohmann::ordered_json j;
  j["num_nodes"] = model.num_nodes();
  j["cardinalities"] = model.cardinalities();
  j["unaries"] = model.unaries();
  j["edges"] = nlohmann::ordered_json::array();
  for (int e = 0; e < model.num_edges(); ++e) {
    const Edge& ed = model.edge(e);
    nlohmann::ordered_json je;
    je["i"] = ed.i;
    je["j"] = ed.j;
    std::vector<std::vector<double>> rows(ed.table.rows);
    for (int k = 0; k < ed.table.rows; ++k) {
      rows[k].resize(ed.table.cols);
      for (int l = 0; l < ed.table.cols; ++l) rows[k][l] = ed.table.at(k, l);
    }
    je["table"] = rows;
    j["edges"].push_back(std::move(je));
  }
  return j.dump(2) + "\n";
}

Model load_model(const std::string& path, std::optional<ModelFormat> format) {
  const std::string text = read_file(path);
  const bool json = format ? *format == ModelFormat::native
                           : path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? parse_model_json(text) : parse_uai(text);
}

void save_model(const Model& model, const std::string& path, std::optional<ModelFormat> format) {
  const bool json = format ? *format == ModelFormat::native
                           : path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  write_file(path, json ? emit_model_json(model) : emit_uai(model));
}

std::string trace_to_csv(const RunTrace& trace) {
  std::ostringstream out;
  out << "outer,dc_iter,rho,lp_obj,penalty,lpqp_obj,decoded_energy,inner_iters,residual,seconds\n";
  for (const TraceRow& r : trace.rows) {
    out << r.outer << ',' << r.dc_iter << ',' << fmt_double(r.rho) << ',' << fmt_double(r.lp_obj)
        << ',' << fmt_double(r.penalty) << ',' << fmt_double(r.lpqp_obj) << ','
        << fmt_double(r.decoded_energy) << ',' << r.inner_iters << ',' << fmt_double(r.residual)
        << ',' << fmt_double(r.seconds) << '\n';
  }
  return out.str();
}

std::string result_to_json(const LpqpResult& result, const LpqpConfig& config) {
  std::ostringstream out;
  out << "{\n  \"assignment\": [";
  for (std::size_t i = 0; i < result.rounded.labels.size(); ++i)
    out << (i ? ", " : "") << result.rounded.labels[i];
  out << "],\n";
  out << "  \"energy\": " << fmt_double(result.rounded_energy) << ",\n";
  out << "  \"status\": \"" << to_string(result.status) << "\",\n";
  out << "  \"config\": {\n";
  out << "    \"method\": \"" << to_string(config.method) << "\",\n";
  out << "    \"rho0\": " << fmt_double(result.resolved_rho0) << ",\n";
  out << "    \"rho_factor\": " << fmt_double(config.rho_factor) << ",\n";
  out << "    \"eps_dc\": " << fmt_double(config.eps_dc) << ",\n";
  out << "    \"eps_rho\": " << fmt_double(config.eps_rho) << ",\n";
  out << "    \"rho_max\": " << fmt_double(result.resolved_rho_max) << ",\n";
  out << "    \"max_outer\": " << config.max_outer << ",\n";
  out << "    \"max_dc_iters\": " << config.max_dc_iters << ",\n";
  out << "    \"inner_tol\": " << fmt_double(config.inner_tol) << ",\n";
  out << "    \"seed\": " << config.seed << ",\n";
  out << "    \"clamp_floor\": " << fmt_double(config.clamp_floor) << "\n";
  out << "  },\n";
  out << "  \"final_rho\": " << fmt_double(result.final_rho) << ",\n";
  out << "  \"outer_iterations\": "
      << (result.trace.rows.empty() ? 0 : result.trace.rows.back().outer + 1) << ",\n";
  out << "  \"wall_time\": " << fmt_double(result.wall_seconds) << "\n";
  out << "}\n";
  return out.str();
}

std::string marginals_to_json(const Model& model, const Marginals& mu) {
  std::ostringstream out;
  out << "{\n  \"node_marginals\": [\n";
  for (std::size_t i = 0; i < mu.node.size(); ++i) {
    out << "    [";
    for (std::size_t k = 0; k < mu.node[i].size(); ++k)
      out << (k ? ", " : "") << fmt_double(mu.node[i][k]);
    out << (i + 1 < mu.node.size() ? "],\n" : "]\n");
  }
  out << "  ],\n  \"edge_marginals\": [\n";
  for (std::size_t e = 0; e < mu.edge.size(); ++e) {
    const Edge& ed = model.edge(static_cast<int>(e));
    out << "    {\"i\": " << ed.i << ", \"j\": " << ed.j << ", \"table\": [";
    const Table& t = mu.edge[e];
    for (int k = 0; k < t.rows; ++k) {
      out << (k ? ", [" : "[");
      for (int l = 0; l < t.cols; ++l) out << (l ? ", " : "") << fmt_double(t.at(k, l));
      out << "]";
    }
    out << (e + 1 < mu.edge.size() ? "]},\n" : "]}\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

}  // namespace lpqp
