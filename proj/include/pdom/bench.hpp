#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pdom/diagnostics.hpp"
#include "pdom/problems.hpp"
#include "pdom/solver.hpp"

namespace pdom::bench {

enum class Family { sparse_recovery, rpca, custom_quadratic };
enum class SolverKind { pdom, pg, mapg };
enum class OutputFormat { csv, json };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::sparse_recovery: return "sparse_recovery";
    case Family::rpca: return "rpca";
    case Family::custom_quadratic: return "custom_quadratic";
  }
  return "unknown";
}

inline const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::pdom: return "pdom";
    case SolverKind::pg: return "pg";
    case SolverKind::mapg: return "mapg";
  }
  return "unknown";
}

inline Family parse_family(const std::string& s) {
  if (s == "sparse" || s == "sparse_recovery") return Family::sparse_recovery;
  if (s == "rpca") return Family::rpca;
  if (s == "custom" || s == "custom_quadratic") return Family::custom_quadratic;
  throw std::invalid_argument("unknown family: " + s);
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "pdom") return SolverKind::pdom;
  if (s == "pg") return SolverKind::pg;
  if (s == "mapg") return SolverKind::mapg;
  throw std::invalid_argument("unknown solver: " + s);
}

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw std::invalid_argument("unknown format: " + s);
}

/// Custom quadratic problem for the `custom` family. Defaults to the
/// diag(4,1) toy with b = (−4,−1) and x0 = 0.
struct CustomProblem {
  Matrix q = (Matrix(2, 2) << 4.0, 0.0, 0.0, 1.0).finished();
  Vector b = (Vector(2) << -4.0, -1.0).finished();
  Vector x0 = Vector::Zero(2);
  std::string h = "zero";  // zero | l0 | l1
  double lambda = 1.0;
};

struct ExperimentSpec {
  Family family = Family::sparse_recovery;
  std::vector<Index> sizes = {200};          // n (sparse, even) or m (rpca)
  std::vector<double> lambda_scales = {0.01};
  std::vector<Index> sparsities = {1};
  std::vector<Index> ranks = {5};
  std::vector<double> sparse_fracs = {0.1};
  double noise_std = 0.0;
  int trials = 1;
  std::vector<SolverKind> solvers = {SolverKind::pdom};
  SolverConfig config = default_config();
  std::uint64_t seed = 0;
  std::string output;  // empty writes to stdout
  OutputFormat format = OutputFormat::csv;
  int threads = 1;
  std::optional<double> phase_threshold;
  CustomProblem custom;

  static SolverConfig default_config() {
    SolverConfig c;
    c.target_residual = 1e-5;
    return c;
  }
};

// ---------------------------------------------------------------------------
// Row model: one ordered set of typed cells, rendered as CSV or JSON.

struct Cell {
  std::string key;
  std::variant<std::int64_t, double, bool, std::string> value;
};

using Row = std::vector<Cell>;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string cell_to_csv(const Cell& c) {
  if (std::holds_alternative<std::int64_t>(c.value)) {
    return std::to_string(std::get<std::int64_t>(c.value));
  }
  if (std::holds_alternative<double>(c.value)) return format_double(std::get<double>(c.value));
  if (std::holds_alternative<bool>(c.value)) return std::get<bool>(c.value) ? "1" : "0";
  return std::get<std::string>(c.value);
}

inline void write_rows(std::ostream& os, const std::vector<Row>& rows, OutputFormat format) {
  if (format == OutputFormat::csv) {
    if (rows.empty()) return;
    for (std::size_t i = 0; i < rows.front().size(); ++i) {
      os << (i ? "," : "") << rows.front()[i].key;
    }
    os << "\n";
    for (const Row& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        os << (i ? "," : "") << cell_to_csv(row[i]);
      }
      os << "\n";
    }
    return;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Row& row : rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (const Cell& c : row) {
      std::visit([&](const auto& v) { obj[c.key] = v; }, c.value);
    }
    arr.push_back(std::move(obj));
  }
  os << arr.dump(2) << "\n";
}

/// Writes rows to spec.output (or stdout). Returns 0, or 2 on I/O failure.
inline int emit(const ExperimentSpec& spec, const std::vector<Row>& rows, std::ostream& err) {
  if (spec.output.empty()) {
    write_rows(std::cout, rows, spec.format);
    return 0;
  }
  std::ofstream os(spec.output, std::ios::binary);
  if (!os) {
    err << "error: cannot open output file '" << spec.output << "'\n";
    return 2;
  }
  write_rows(os, rows, spec.format);
  os.flush();
  if (!os) {
    err << "error: failed writing output file '" << spec.output << "'\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Cells and trials.

struct CellParams {
  Index size = 0;          // n (sparse) or m (rpca)
  double lambda_scale = 0.0;
  Index sparsity = 0;
  Index rank = 0;
  double sparse_frac = 0.0;
};

inline std::vector<CellParams> enumerate_cells(const ExperimentSpec& spec) {
  std::vector<CellParams> cells;
  if (spec.family == Family::sparse_recovery) {
    for (Index n : spec.sizes) {
      for (double ls : spec.lambda_scales) {
        for (Index s : spec.sparsities) {
          CellParams c;
          c.size = n;
          c.lambda_scale = ls;
          c.sparsity = s;
          cells.push_back(c);
        }
      }
    }
  } else if (spec.family == Family::rpca) {
    for (Index m : spec.sizes) {
      for (Index r : spec.ranks) {
        for (double f : spec.sparse_fracs) {
          CellParams c;
          c.size = m;
          c.rank = r;
          c.sparse_frac = f;
          cells.push_back(c);
        }
      }
    }
  } else {
    cells.push_back(CellParams{});
  }
  return cells;
}

inline void append_cell_params(Row& row, const ExperimentSpec& spec, const CellParams& c) {
  if (spec.family == Family::sparse_recovery) {
    row.push_back({"n", static_cast<std::int64_t>(c.size)});
    row.push_back({"lambda_scale", c.lambda_scale});
    row.push_back({"sparsity", static_cast<std::int64_t>(c.sparsity)});
    row.push_back({"noise_std", spec.noise_std});
  } else if (spec.family == Family::rpca) {
    row.push_back({"m", static_cast<std::int64_t>(c.size)});
    row.push_back({"rank", static_cast<std::int64_t>(c.rank)});
    row.push_back({"sparse_frac", c.sparse_frac});
  } else {
    row.push_back({"h", spec.custom.h});
    row.push_back({"lambda", spec.custom.lambda});
  }
}

inline std::shared_ptr<const Regularizer> make_custom_regularizer(const CustomProblem& p) {
  if (p.h == "zero") return std::make_shared<ZeroRegularizer>();
  if (p.h == "l0") return std::make_shared<L0Regularizer>(p.lambda);
  if (p.h == "l1") return std::make_shared<L1Regularizer>(p.lambda);
  throw std::invalid_argument("unknown regularizer for custom family: " + p.h);
}

/// Problem data for one (cell, trial): composite form plus the shared x0.
struct TrialProblem {
  Composite composite;
  Vector x0;
  std::uint64_t seed = 0;
};

inline TrialProblem make_trial_problem(const ExperimentSpec& spec, const CellParams& cell,
                                       std::uint64_t cell_index, std::uint64_t trial) {
  const std::uint64_t s = trial_seed(spec.seed, cell_index, trial);
  if (spec.family == Family::sparse_recovery) {
    auto inst = gen_sparse_recovery(s, cell.size, cell.sparsity, cell.lambda_scale, spec.noise_std);
    Composite comp = to_composite(inst);
    Vector x0 = random_initial_point(splitmix64(s ^ 0x517cc1b727220a95ULL), comp.model.dim());
    return {std::move(comp), std::move(x0), s};
  }
  if (spec.family == Family::rpca) {
    auto inst = gen_rpca(s, cell.size, cell.rank, cell.sparse_frac);
    Composite comp = to_composite(inst);
    Vector x0 = random_initial_point(splitmix64(s ^ 0x517cc1b727220a95ULL), comp.model.dim());
    return {std::move(comp), std::move(x0), s};
  }
  Composite comp{build_dense(spec.custom.q, spec.custom.b), make_custom_regularizer(spec.custom),
                 Embedding{}, nullptr};
  return {std::move(comp), spec.custom.x0, s};
}

inline SolverResult run_solver(SolverKind kind, const Composite& comp, const Vector& x0,
                               SolverConfig config) {
  config.recovery_error = comp.recovery_error;
  switch (kind) {
    case SolverKind::pdom: return pdom_solve(comp.model, *comp.h, x0, config);
    case SolverKind::pg: return pg_solve(comp.model, *comp.h, x0, config);
    case SolverKind::mapg: return mapg_solve(comp.model, *comp.h, x0, config);
  }
  throw std::logic_error("unreachable solver kind");
}

struct TrialOutcome {
  double final_nre = std::numeric_limits<double>::quiet_NaN();
  int iters_to_target = 0;
  bool capped = false;
  long prox_calls = 0;
};

/// Runs fn(cell_index, trial) over the whole grid with `threads` workers.
/// Work assignment is by atomic counter; every output slot is written
/// exactly once, so results are identical for any worker count.
template <typename Fn>
inline void parallel_trials(std::size_t n_cells, std::size_t n_trials, int threads, Fn&& fn) {
  const std::size_t total = n_cells * n_trials;
  const int workers = std::max(1, threads);
  if (workers == 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) fn(i / n_trials, i % n_trials);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
        fn(i / n_trials, i % n_trials);
      }
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Subcommands.

/// `solve`: one instance (first cell, trial 0), per-iteration trace rows.
inline int run_solve(const ExperimentSpec& spec, std::ostream& err) {
  const auto cells = enumerate_cells(spec);
  const CellParams& cell = cells.front();
  TrialProblem problem = make_trial_problem(spec, cell, 0, 0);

  std::vector<Row> rows;
  for (SolverKind kind : spec.solvers) {
    SolverResult res = run_solver(kind, problem.composite, problem.x0, spec.config);
    for (const IterationRecord& rec : res.trace) {
      Row row;
      row.push_back({"family", std::string(to_string(spec.family))});
      append_cell_params(row, spec, cell);
      row.push_back({"solver", std::string(to_string(kind))});
      row.push_back({"trial", std::int64_t{0}});
      row.push_back({"seed", static_cast<std::int64_t>(problem.seed)});
      row.push_back({"k", static_cast<std::int64_t>(rec.k)});
      row.push_back({"f", rec.f_value});
      row.push_back({"residual_norm", rec.residual_norm});
      row.push_back({"alpha", rec.alpha});
      row.push_back({"tau_alpha", rec.tau_alpha});
      row.push_back({"backtracks", static_cast<std::int64_t>(rec.backtracks)});
      row.push_back({"safeguard", rec.safeguard_taken});
      row.push_back({"step_norm", rec.step_norm});
      row.push_back({"nre", rec.nre});
      row.push_back({"prox_calls_cumulative", static_cast<std::int64_t>(rec.prox_calls)});
      rows.push_back(std::move(row));
    }
  }
  return emit(spec, rows, err);
}

/// `bench`: per-cell averages of terminal recovery error, iterations to the
/// reporting target, and prox-call counts over `trials` instances.
inline int run_bench(const ExperimentSpec& spec, std::ostream& err) {
  if (spec.family == Family::custom_quadratic) {
    err << "error: bench requires the sparse or rpca family\n";
    return 1;
  }
  const auto cells = enumerate_cells(spec);
  const std::size_t n_trials = static_cast<std::size_t>(spec.trials);
  const double target = spec.config.target_residual.value_or(1e-5);

  std::vector<std::vector<std::vector<TrialOutcome>>> outcomes(cells.size());
  for (auto& per_cell : outcomes) {
    per_cell.assign(n_trials, std::vector<TrialOutcome>(spec.solvers.size()));
  }

  parallel_trials(cells.size(), n_trials, spec.threads, [&](std::size_t ci, std::size_t ti) {
    TrialProblem problem = make_trial_problem(spec, cells[ci], ci, ti);
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
      SolverResult res = run_solver(spec.solvers[si], problem.composite, problem.x0, spec.config);
      TrialOutcome& out = outcomes[ci][ti][si];
      out.final_nre = res.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                        : res.trace.back().nre;
      const auto crossing = res.first_crossing(target);
      out.capped = !crossing.has_value();
      out.iters_to_target = crossing.value_or(spec.config.max_iter);
      out.prox_calls = res.trace.empty() ? 0 : res.trace.back().prox_calls;
    }
  });

  std::vector<Row> rows;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
      double sum_nre = 0.0, sum_iters = 0.0, sum_prox = 0.0;
      std::int64_t capped = 0;
      std::vector<double> iter_values;
      for (std::size_t ti = 0; ti < n_trials; ++ti) {
        const TrialOutcome& out = outcomes[ci][ti][si];
        sum_nre += out.final_nre;
        sum_iters += out.iters_to_target;
        sum_prox += static_cast<double>(out.prox_calls);
        capped += out.capped ? 1 : 0;
        iter_values.push_back(static_cast<double>(out.iters_to_target));
      }
      std::sort(iter_values.begin(), iter_values.end());
      const std::size_t mid = iter_values.size() / 2;
      const double median = iter_values.size() % 2 == 1
                                ? iter_values[mid]
                                : 0.5 * (iter_values[mid - 1] + iter_values[mid]);
      const bool all_capped = capped == static_cast<std::int64_t>(n_trials);
      const std::string cap_label = ">" + std::to_string(spec.config.max_iter);

      Row row;
      row.push_back({"family", std::string(to_string(spec.family))});
      append_cell_params(row, spec, cells[ci]);
      row.push_back({"solver", std::string(to_string(spec.solvers[si]))});
      row.push_back({"trials", static_cast<std::int64_t>(n_trials)});
      row.push_back({"mean_nre", sum_nre / static_cast<double>(n_trials)});
      if (all_capped) {
        row.push_back({"median_iters", cap_label});
        row.push_back({"mean_iters", cap_label});
      } else {
        row.push_back({"median_iters", median});
        row.push_back({"mean_iters", sum_iters / static_cast<double>(n_trials)});
      }
      row.push_back({"capped_count", capped});
      row.push_back({"mean_prox_calls", sum_prox / static_cast<double>(n_trials)});
      row.push_back({"seed", static_cast<std::int64_t>(spec.seed)});
      rows.push_back(std::move(row));
    }
  }
  return emit(spec, rows, err);
}

/// `phase`: success fractions along the family's sweep variable (sparsity
/// for sparse recovery, rank for RPCA) at a fixed recovery threshold.
inline int run_phase(const ExperimentSpec& spec, std::ostream& err) {
  if (spec.family == Family::custom_quadratic) {
    err << "error: phase requires the sparse or rpca family\n";
    return 1;
  }
  const auto cells = enumerate_cells(spec);
  const std::size_t n_trials = static_cast<std::size_t>(spec.trials);
  const double threshold = spec.phase_threshold.value_or(
      spec.family == Family::rpca ? 1e-3 : (spec.noise_std > 0.0 ? 1e-2 : 1e-4));
  const PhaseMetric metric =
      spec.family == Family::rpca ? PhaseMetric::low_rank_relerr : PhaseMetric::nre;

  std::vector<std::vector<std::vector<double>>> errs(cells.size());
  for (auto& per_cell : errs) {
    per_cell.assign(n_trials, std::vector<double>(spec.solvers.size()));
  }
  parallel_trials(cells.size(), n_trials, spec.threads, [&](std::size_t ci, std::size_t ti) {
    TrialProblem problem = make_trial_problem(spec, cells[ci], ci, ti);
    for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
      SolverResult res = run_solver(spec.solvers[si], problem.composite, problem.x0, spec.config);
      errs[ci][ti][si] = res.trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                           : res.trace.back().nre;
    }
  });

  std::vector<Row> rows;
  for (std::size_t si = 0; si < spec.solvers.size(); ++si) {
    std::vector<std::pair<double, double>> observations;
    for (std::size_t ci = 0; ci < cells.size(); ++ci) {
      const double sweep = spec.family == Family::rpca
                               ? static_cast<double>(cells[ci].rank)
                               : static_cast<double>(cells[ci].sparsity);
      for (std::size_t ti = 0; ti < n_trials; ++ti) {
        observations.emplace_back(sweep, errs[ci][ti][si]);
      }
    }
    for (const PhaseCell& cell : aggregate_phase(observations, threshold, metric)) {
      Row row;
      row.push_back({"family", std::string(to_string(spec.family))});
      row.push_back({"sweep_parameter", cell.sweep_parameter});
      row.push_back({"solver", std::string(to_string(spec.solvers[si]))});
      row.push_back({"trials", static_cast<std::int64_t>(cell.trials)});
      row.push_back({"successes", static_cast<std::int64_t>(cell.successes)});
      row.push_back({"fraction", cell.fraction()});
      row.push_back({"threshold", cell.threshold});
      row.push_back({"metric", std::string(to_string(cell.metric))});
      row.push_back({"seed", static_cast<std::int64_t>(spec.seed)});
      rows.push_back(std::move(row));
    }
  }
  return emit(spec, rows, err);
}

// ---------------------------------------------------------------------------
// JSON config file (same field names as the CLI flags).

inline void apply_json_config(ExperimentSpec& spec, const nlohmann::json& j) {
  if (j.contains("family")) spec.family = parse_family(j["family"].get<std::string>());
  if (j.contains("sizes")) spec.sizes = j["sizes"].get<std::vector<Index>>();
  if (j.contains("lambda_scales")) spec.lambda_scales = j["lambda_scales"].get<std::vector<double>>();
  if (j.contains("sparsities")) spec.sparsities = j["sparsities"].get<std::vector<Index>>();
  if (j.contains("ranks")) spec.ranks = j["ranks"].get<std::vector<Index>>();
  if (j.contains("sparse_fracs")) spec.sparse_fracs = j["sparse_fracs"].get<std::vector<double>>();
  if (j.contains("noise_std")) spec.noise_std = j["noise_std"].get<double>();
  if (j.contains("trials")) spec.trials = j["trials"].get<int>();
  if (j.contains("solvers")) {
    spec.solvers.clear();
    for (const auto& s : j["solvers"]) spec.solvers.push_back(parse_solver(s.get<std::string>()));
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output")) spec.output = j["output"].get<std::string>();
  if (j.contains("format")) spec.format = parse_format(j["format"].get<std::string>());
  if (j.contains("threads")) spec.threads = j["threads"].get<int>();
  if (j.contains("threshold")) spec.phase_threshold = j["threshold"].get<double>();
  if (j.contains("max_iter")) spec.config.max_iter = j["max_iter"].get<int>();
  if (j.contains("gamma")) spec.config.gamma = j["gamma"].get<double>();
  if (j.contains("eps_abs")) spec.config.eps_abs = j["eps_abs"].get<double>();
  if (j.contains("eps_rel")) spec.config.eps_rel = j["eps_rel"].get<double>();
  if (j.contains("tol")) {
    const double tol = j["tol"].get<double>();
    if (tol > 0.0) {
      spec.config.target_residual = tol;
    } else {
      spec.config.target_residual.reset();
    }
  }
  if (j.contains("custom")) {
    const auto& c = j["custom"];
    if (c.contains("Q")) {
      const auto qrows = c["Q"].get<std::vector<std::vector<double>>>();
      const Index n = static_cast<Index>(qrows.size());
      spec.custom.q.resize(n, n);
      for (Index i = 0; i < n; ++i) {
        if (static_cast<Index>(qrows[i].size()) != n) {
          throw std::invalid_argument("custom.Q must be square");
        }
        for (Index k = 0; k < n; ++k) spec.custom.q(i, k) = qrows[i][k];
      }
    }
    if (c.contains("b")) {
      const auto bv = c["b"].get<std::vector<double>>();
      spec.custom.b = Eigen::Map<const Vector>(bv.data(), static_cast<Index>(bv.size()));
    }
    if (c.contains("x0")) {
      const auto xv = c["x0"].get<std::vector<double>>();
      spec.custom.x0 = Eigen::Map<const Vector>(xv.data(), static_cast<Index>(xv.size()));
    }
    if (c.contains("h")) spec.custom.h = c["h"].get<std::string>();
    if (c.contains("lambda")) spec.custom.lambda = c["lambda"].get<double>();
  }
}

}  // namespace pdom::bench
