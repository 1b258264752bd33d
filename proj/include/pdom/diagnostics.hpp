#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdom/solver.hpp"

namespace pdom {

/// Łojasiewicz exponent θ = 1 − base^(−υ), kept in log form because υ is
/// typically large enough that θ underflows to exactly 1 in double.
struct KlExponent {
  double theta = 0.0;
  std::int64_t upsilon = 0;
  double base = 4.9;
};

/// θ = 1/2 for ℓ0 composite problems.
inline double kl_exponent_l0() { return 0.5; }

/// RPCA exponent: υ = mn + m(m−r) + n(m−r) − 1, θ = 1 − 4.9^(−υ).
inline KlExponent kl_exponent_rpca(std::int64_t m, std::int64_t n, std::int64_t r) {
  if (r < 1 || r > std::min(m, n)) {
    throw std::invalid_argument("kl_exponent_rpca: r out of range");
  }
  KlExponent out;
  out.upsilon = m * n + m * (m - r) + n * (m - r) - 1;
  out.theta = 1.0 - std::pow(out.base, -static_cast<double>(out.upsilon));
  return out;
}

enum class RateModel { linear, superlinear, sublinear };

inline const char* to_string(RateModel m) {
  switch (m) {
    case RateModel::linear: return "linear";
    case RateModel::superlinear: return "superlinear";
    case RateModel::sublinear: return "sublinear";
  }
  return "unknown";
}

struct RateFit {
  RateModel model = RateModel::linear;
  /// Geometric decay factor; meaningful for the linear classification.
  double rate = 0.0;
};

/// Empirical convergence-rate fit on the tail of a trace's step norms.
/// Classifies by the drift of the log-ratios d_k = log s_{k+1} − log s_k
/// across the fitted window, relative to their mean: near-constant ratios
/// are linear (rate = exp(mean d)), ratios growing in magnitude are
/// superlinear, ratios decaying toward zero are sublinear.
inline RateFit rate_fit(const std::vector<IterationRecord>& trace, double tail_fraction) {
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0) {
    throw std::invalid_argument("rate_fit: tail_fraction must lie in (0, 1]");
  }
  std::vector<double> steps;
  for (const auto& rec : trace) {
    if (rec.k >= 1 && rec.step_norm > 0.0 && std::isfinite(rec.step_norm)) {
      steps.push_back(rec.step_norm);
    }
  }
  if (steps.size() < 10) {
    throw std::invalid_argument("rate_fit: trace too short (need >= 10 positive step norms)");
  }
  const std::size_t tail = std::max<std::size_t>(
      5, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(steps.size()))));
  const std::size_t begin = steps.size() > tail ? steps.size() - tail : 0;

  std::vector<double> d;
  for (std::size_t i = begin; i + 1 < steps.size(); ++i) {
    d.push_back(std::log(steps[i + 1]) - std::log(steps[i]));
  }
  const std::size_t n = d.size();
  double mean_d = 0.0;
  for (double v : d) mean_d += v;
  mean_d /= static_cast<double>(n);

  // Least-squares slope of d over its index.
  double slope = 0.0;
  if (n >= 2) {
    const double mean_i = (static_cast<double>(n) - 1.0) / 2.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double di = static_cast<double>(i) - mean_i;
      num += di * (d[i] - mean_d);
      den += di * di;
    }
    slope = num / den;
  }
  const double drift = slope * (static_cast<double>(n) - 1.0);
  const double scale = std::abs(mean_d) > 0.0 ? std::abs(mean_d) : 1.0;
  const double relative_drift = drift / scale;

  RateFit fit;
  if (relative_drift < -0.05) {
    fit.model = RateModel::superlinear;
  } else if (relative_drift > 0.05) {
    fit.model = RateModel::sublinear;
  } else {
    fit.model = RateModel::linear;
  }
  fit.rate = std::exp(mean_d);
  return fit;
}

enum class PhaseMetric { nre, low_rank_relerr };

inline const char* to_string(PhaseMetric m) {
  return m == PhaseMetric::nre ? "nre" : "low_rank_relerr";
}

struct PhaseCell {
  double sweep_parameter = 0.0;
  int trials = 0;
  int successes = 0;
  double threshold = 0.0;
  PhaseMetric metric = PhaseMetric::nre;

  double fraction() const {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }
};

/// Group (parameter, metric) observations by parameter value; a trial
/// succeeds when its metric is strictly below the threshold. Output is
/// sorted by parameter, so it is invariant to input permutation.
inline std::vector<PhaseCell> aggregate_phase(const std::vector<std::pair<double, double>>& results,
                                              double threshold,
                                              PhaseMetric metric = PhaseMetric::nre) {
  if (results.empty()) throw std::invalid_argument("aggregate_phase: empty input");
  std::map<double, PhaseCell> cells;
  for (const auto& [param, value] : results) {
    PhaseCell& cell = cells[param];
    cell.sweep_parameter = param;
    cell.threshold = threshold;
    cell.metric = metric;
    ++cell.trials;
    if (value < threshold) ++cell.successes;
  }
  std::vector<PhaseCell> out;
  out.reserve(cells.size());
  for (auto& [param, cell] : cells) out.push_back(cell);
  return out;
}

}  // namespace pdom
