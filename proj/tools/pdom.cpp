#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "pdom/pdom.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string family = "sparse";
  std::vector<pdom::Index> sizes;
  std::vector<double> lambda_scales;
  std::vector<pdom::Index> sparsities;
  std::vector<pdom::Index> ranks;
  std::vector<double> sparse_fracs;
  double noise_std = -1.0;
  int trials = -1;
  std::vector<std::string> solvers;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string output;
  std::string format;
  int threads = -1;
  int max_iter = -1;
  double gamma = -1.0;
  double tol = -2.0;  // -2 = unset, 0 disables the target threshold
  double eps_abs = -1.0;
  double eps_rel = -1.0;
  double threshold = -1.0;
  std::string custom_h;
  double custom_lambda = -1.0;
};

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file mirroring the experiment spec");
  cmd->add_option("--family", o.family, "Problem family: sparse | rpca | custom");
  cmd->add_option("--n,--m,--size", o.sizes, "Problem size(s): n for sparse (even), m for rpca");
  cmd->add_option("--lambda-scale", o.lambda_scales, "lambda = scale * |A^T y|_inf (sparse)");
  cmd->add_option("--sparsity", o.sparsities, "Ground-truth sparsity count(s) (sparse)");
  cmd->add_option("--rank", o.ranks, "Ground-truth rank(s) (rpca)");
  cmd->add_option("--sparse-frac", o.sparse_fracs, "Corruption fraction(s) (rpca)");
  cmd->add_option("--noise-std", o.noise_std, "Observation noise standard deviation (sparse)");
  cmd->add_option("--trials", o.trials, "Trials per grid cell");
  cmd->add_option("--solver", o.solvers, "Solvers: pdom, pg, mapg (repeatable or comma separated)")
      ->delimiter(',');
  cmd->add_option("--seed", o.seed, "Master RNG seed")->each([&](const std::string&) {
    o.seed_set = true;
  });
  cmd->add_option("--output", o.output, "Output file path (default: stdout)");
  cmd->add_option("--format", o.format, "Output format: csv | json");
  cmd->add_option("--threads", o.threads, "Worker threads (results are thread-count invariant)");
  cmd->add_option("--max-iter", o.max_iter, "Iteration cap (default 2000)");
  cmd->add_option("--gamma", o.gamma, "Surrogate scaling gamma in (0,1) (default 0.98)");
  cmd->add_option("--tol", o.tol, "Target residual threshold (default 1e-5; 0 disables)");
  cmd->add_option("--eps-abs", o.eps_abs, "Absolute stopping tolerance (default 1e-12)");
  cmd->add_option("--eps-rel", o.eps_rel, "Relative stopping tolerance (default 1e-12)");
  cmd->add_option("--threshold", o.threshold, "Phase-transition success threshold");
  cmd->add_option("--h", o.custom_h, "Regularizer for custom family: zero | l0 | l1");
  cmd->add_option("--lambda", o.custom_lambda, "Regularizer weight for custom family");
}

pdom::bench::ExperimentSpec build_spec(const CliOptions& o) {
  pdom::bench::ExperimentSpec spec;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw std::invalid_argument("cannot open config file: " + o.config_path);
    nlohmann::json j;
    in >> j;
    pdom::bench::apply_json_config(spec, j);
  }
  // CLI flags override config-file values.
  if (!o.family.empty()) spec.family = pdom::bench::parse_family(o.family);
  if (!o.sizes.empty()) spec.sizes = o.sizes;
  if (!o.lambda_scales.empty()) spec.lambda_scales = o.lambda_scales;
  if (!o.sparsities.empty()) spec.sparsities = o.sparsities;
  if (!o.ranks.empty()) spec.ranks = o.ranks;
  if (!o.sparse_fracs.empty()) spec.sparse_fracs = o.sparse_fracs;
  if (o.noise_std >= 0.0) spec.noise_std = o.noise_std;
  if (o.trials > 0) spec.trials = o.trials;
  if (!o.solvers.empty()) {
    spec.solvers.clear();
    for (const auto& s : o.solvers) spec.solvers.push_back(pdom::bench::parse_solver(s));
  }
  if (o.seed_set) spec.seed = o.seed;
  if (!o.output.empty()) spec.output = o.output;
  if (!o.format.empty()) spec.format = pdom::bench::parse_format(o.format);
  if (o.threads > 0) spec.threads = o.threads;
  if (o.max_iter > 0) spec.config.max_iter = o.max_iter;
  if (o.gamma > 0.0) spec.config.gamma = o.gamma;
  if (o.tol >= 0.0) {
    if (o.tol > 0.0) {
      spec.config.target_residual = o.tol;
    } else {
      spec.config.target_residual.reset();
    }
  }
  if (o.eps_abs >= 0.0) spec.config.eps_abs = o.eps_abs;
  if (o.eps_rel >= 0.0) spec.config.eps_rel = o.eps_rel;
  if (o.threshold > 0.0) spec.phase_threshold = o.threshold;
  if (!o.custom_h.empty()) spec.custom.h = o.custom_h;
  if (o.custom_lambda > 0.0) spec.custom.lambda = o.custom_lambda;
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PDOM composite-minimization benchmark harness"};
  app.require_subcommand(1);

  CliOptions solve_opts, bench_opts, phase_opts;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Run one instance, emit per-iteration trace");
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run a trial grid, emit per-cell summaries");
  CLI::App* phase_cmd = app.add_subcommand("phase", "Sweep sparsity/rank, emit success fractions");
  add_common_flags(solve_cmd, solve_opts);
  add_common_flags(bench_cmd, bench_opts);
  add_common_flags(phase_cmd, phase_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      return pdom::bench::run_solve(build_spec(solve_opts), std::cerr);
    }
    if (bench_cmd->parsed()) {
      return pdom::bench::run_bench(build_spec(bench_opts), std::cerr);
    }
    return pdom::bench::run_phase(build_spec(phase_opts), std::cerr);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: bad config: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
