#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lpqp/bench.hpp"
#include "lpqp/io.hpp"
#include "lpqp/schedule.hpp"
#include "lpqp/treedd.hpp"

namespace fs = std::filesystem;

namespace {

struct SolveArgs {
  std::string model_path;
  std::string format;
  std::string method = "uniform";
  std::string rho0 = "auto";
  double rho_factor = 1.5;
  double eps_dc = 1e-4;
  double eps_rho = 1e-4;
  double rho_max = 0.0;  // 0: derived from rho0
  std::uint64_t seed = 0;
  double inner_tol = 1e-8;
  int max_outer = 60;
  int max_dc_iters = 200;
  double damping = 0.0;
  std::string grid;  // "RxC" to use the horizontal/vertical split
  std::string trace_path;
  std::string out_path;
  bool no_timing = false;
};

std::optional<lpqp::ModelFormat> parse_format(const std::string& s) {
  if (s.empty()) return {};
  if (s == "uai") return lpqp::ModelFormat::uai;
  if (s == "native") return lpqp::ModelFormat::native;
  throw CLI::ValidationError("--format", "expected 'uai' or 'native'");
}

lpqp::LpqpConfig make_config(const SolveArgs& a) {
  lpqp::LpqpConfig cfg;
  if (a.method == "uniform")
    cfg.method = lpqp::Method::uniform;
  else if (a.method == "tree")
    cfg.method = lpqp::Method::tree;
  else
    throw CLI::ValidationError("--method", "expected 'uniform' or 'tree'");
  if (a.rho0 != "auto") cfg.rho0 = std::stod(a.rho0);
  cfg.rho_factor = a.rho_factor;
  cfg.eps_dc = a.eps_dc;
  cfg.eps_rho = a.eps_rho;
  if (a.rho_max > 0.0) cfg.rho_max = a.rho_max;
  cfg.seed = a.seed;
  cfg.inner_tol = a.inner_tol;
  cfg.max_outer = a.max_outer;
  cfg.max_dc_iters = a.max_dc_iters;
  cfg.damping = a.damping;
  cfg.record_timing = !a.no_timing;
  return cfg;
}

// Runs one instance; returns the result status.
lpqp::RunStatus solve_one(const SolveArgs& args, const std::string& model_path,
                          const std::string& out_path, const std::string& trace_path,
                          bool quiet) {
  const lpqp::Model model = lpqp::load_model(model_path, parse_format(args.format));
  const lpqp::LpqpConfig cfg = make_config(args);

  lpqp::ForestDecomposition grid_fd;
  const lpqp::ForestDecomposition* fd = nullptr;
  if (cfg.method == lpqp::Method::tree && !args.grid.empty()) {
    const auto x = args.grid.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--grid", "expected ROWSxCOLS");
    grid_fd = lpqp::grid_split(model, std::stoi(args.grid.substr(0, x)),
                               std::stoi(args.grid.substr(x + 1)));
    fd = &grid_fd;
  }

  const lpqp::LpqpResult result = lpqp::lpqp_run(model, cfg, fd);
  if (!out_path.empty()) lpqp::write_file(out_path, lpqp::result_to_json(result, cfg));
  if (!trace_path.empty()) lpqp::write_file(trace_path, lpqp::trace_to_csv(result.trace));
  if (!quiet) {
    std::cout << model_path << ": status " << lpqp::to_string(result.status) << ", energy "
              << result.rounded_energy << ", final rho " << result.final_rho << ", "
              << result.trace.rows.size() << " cccp iterations";
    if (cfg.record_timing) std::cout << ", " << result.wall_seconds << " s";
    std::cout << "\n";
  }
  return result.status;
}

int run_solve(const SolveArgs& args) {
  if (!fs::is_directory(args.model_path)) {
    const auto status = solve_one(args, args.model_path, args.out_path, args.trace_path, false);
    return status == lpqp::RunStatus::converged ? 0 : 2;
  }

  // Batch mode: every .uai/.json in the directory, results into --out (a
  // directory). LPQP_THREADS bounds the parallelism.
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(args.model_path)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension();
    if (ext == ".uai" || ext == ".json") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty()) {
    std::cerr << "no .uai or .json instances in " << args.model_path << "\n";
    return 1;
  }
  if (args.out_path.empty()) {
    std::cerr << "batch mode requires --out DIRECTORY\n";
    return 1;
  }
  fs::create_directories(args.out_path);
  if (!args.trace_path.empty()) fs::create_directories(args.trace_path);

  unsigned threads = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("LPQP_THREADS")) threads = std::stoul(env);
  threads = std::max(1u, std::min<unsigned>(threads, inputs.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<int> exit_code{0};
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < inputs.size(); i = next.fetch_add(1)) {
      const std::string stem = inputs[i].stem().string();
      const std::string out = (fs::path(args.out_path) / (stem + ".json")).string();
      const std::string trace =
          args.trace_path.empty() ? std::string()
                                  : (fs::path(args.trace_path) / (stem + ".csv")).string();
      try {
        const auto status = solve_one(args, inputs[i].string(), out, trace, true);
        if (status != lpqp::RunStatus::converged) {
          int expected = 0;
          exit_code.compare_exchange_strong(expected, 2);
        }
      } catch (const std::exception& ex) {
        std::cerr << inputs[i].string() << ": " << ex.what() << "\n";
        exit_code.store(1);
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  std::cout << "solved " << inputs.size() << " instances into " << args.out_path << "\n";
  return exit_code.load();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LPQP MAP solver for pairwise discrete graphical models"};
  app.require_subcommand(1);

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "run the LPQP solver on an instance");
  solve->add_option("--model", sa.model_path, "model file (or directory for batch mode)")
      ->required();
  solve->add_option("--format", sa.format, "uai|native (default: by extension)");
  solve->add_option("--method", sa.method, "uniform|tree");
  solve->add_option("--rho0", sa.rho0, "initial penalty weight, or 'auto'");
  solve->add_option("--rho-factor", sa.rho_factor, "multiplicative rho increase");
  solve->add_option("--eps-dc", sa.eps_dc, "CCCP convergence tolerance");
  solve->add_option("--eps-rho", sa.eps_rho, "outer-loop convergence tolerance");
  solve->add_option("--rho-max", sa.rho_max, "rho cap (default 1e4 * rho0)");
  solve->add_option("--seed", sa.seed, "seed echoed into the result");
  solve->add_option("--inner-tol", sa.inner_tol, "inner solver tolerance");
  solve->add_option("--max-outer", sa.max_outer, "outer iteration cap");
  solve->add_option("--max-dc-iters", sa.max_dc_iters, "CCCP iteration cap");
  solve->add_option("--damping", sa.damping, "message damping in [0,1)");
  solve->add_option("--grid", sa.grid, "ROWSxCOLS: use the horizontal/vertical grid split (tree)");
  solve->add_option("--trace", sa.trace_path, "write per-iteration CSV here");
  solve->add_option("--out", sa.out_path, "write result JSON here");
  solve->add_flag("--no-timing", sa.no_timing, "zero out timing fields for byte-stable output");

  struct {
    int size = 0, states = 0;
    double sigma = 0.5;
    std::uint64_t seed = 0;
    std::string out;
  } gp;
  CLI::App* gen = app.add_subcommand("gen-potts", "generate a synthetic Potts grid instance");
  gen->add_option("--size", gp.size, "grid side length")->required();
  gen->add_option("--states", gp.states, "labels per node")->required();
  gen->add_option("--sigma", gp.sigma, "unary noise half-width");
  gen->add_option("--seed", gp.seed, "generator seed");
  gen->add_option("--out", gp.out, "output path (.uai or .json)")->required();

  struct {
    std::string model, format;
  } bf;
  CLI::App* brute = app.add_subcommand("brute-force", "exhaustive MAP baseline");
  brute->add_option("--model", bf.model, "model file")->required();
  brute->add_option("--format", bf.format, "uai|native");

  struct {
    std::vector<double> energies;
    double optimum = 0.0;
    bool has_optimum = false;
  } sc;
  CLI::App* scorecmd = app.add_subcommand("score", "relative scores for a set of energies");
  scorecmd->add_option("--energies", sc.energies, "energies to score")->required()->expected(-2);
  scorecmd->add_option("--optimum", sc.optimum, "known optimal energy")
      ->each([&](const std::string&) { sc.has_optimum = true; });

  struct {
    std::string model, format, out;
    double temperature = 1.0;
  } og;
  CLI::App* gibbs = app.add_subcommand("oracle-gibbs", "exact Gibbs marginals by enumeration");
  gibbs->add_option("--model", og.model, "model file")->required();
  gibbs->add_option("--temperature", og.temperature, "Gibbs temperature")->required();
  gibbs->add_option("--format", og.format, "uai|native");
  gibbs->add_option("--out", og.out, "write marginals JSON here (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (solve->parsed()) return run_solve(sa);
    if (gen->parsed()) {
      lpqp::save_model(lpqp::generate_potts(gp.size, gp.states, gp.sigma, gp.seed), gp.out);
      std::cout << "wrote " << gp.out << "\n";
      return 0;
    }
    if (brute->parsed()) {
      const lpqp::Model model = lpqp::load_model(bf.model, parse_format(bf.format));
      const auto [assignment, e] = lpqp::brute_force_map(model);
      std::cout << "energy " << std::setprecision(17) << e << "\nassignment";
      for (int label : assignment.labels) std::cout << ' ' << label;
      std::cout << "\n";
      return 0;
    }
    if (scorecmd->parsed()) {
      const auto report =
          lpqp::score(sc.energies, sc.has_optimum ? std::optional<double>(sc.optimum)
                                                  : std::nullopt);
      for (std::size_t i = 0; i < report.scores.size(); ++i)
        std::cout << (i ? " " : "") << report.scores[i];
      std::cout << "\n";
      return 0;
    }
    if (gibbs->parsed()) {
      const lpqp::Model model = lpqp::load_model(og.model, parse_format(og.format));
      const std::string json =
          lpqp::marginals_to_json(model, lpqp::brute_force_gibbs(model, og.temperature));
      if (og.out.empty())
        std::cout << json;
      else
        lpqp::write_file(og.out, json);
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
