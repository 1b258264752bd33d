#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pdom/dogleg.hpp"
#include "pdom/prox.hpp"
#include "pdom/quadratic.hpp"

namespace pdom {

struct SolverConfig {
  /// Gradient step size; unset means 1/L_q of the model being solved.
  std::optional<double> tau;
  double gamma = 0.98;
  double eps_abs = 1e-12;
  double eps_rel = 1e-12;
  int max_iter = 2000;
  /// Largest backtracking index before the α = 1 fallback.
  int max_backtracks = 30;
  /// Reporting threshold: when set, the run also stops at ‖∂f‖ < target.
  std::optional<double> target_residual;
  /// Optional recovery metric (e.g. NRE against ground truth) recorded per iteration.
  std::function<double(const Vector&)> recovery_error;

  double resolve_tau(const QuadraticModel& model) const {
    const double lq = model.lipschitz();
    const double t = tau.value_or(1.0 / lq);
    if (!(t > 0.0) || t > 1.0 / lq * (1.0 + 1e-12)) {
      throw std::invalid_argument("SolverConfig: tau must lie in (0, 1/L_q]");
    }
    return t;
  }
  void validate() const {
    if (!(gamma > 0.0) || !(gamma < 1.0)) {
      throw std::invalid_argument("SolverConfig: gamma must lie in (0, 1)");
    }
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
  }
};

struct IterationRecord {
  int k = 0;
  double f_value = 0.0;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double tau_alpha = std::numeric_limits<double>::quiet_NaN();
  int backtracks = 0;
  bool safeguard_taken = false;
  double step_norm = std::numeric_limits<double>::quiet_NaN();
  double nre = std::numeric_limits<double>::quiet_NaN();
  long prox_calls = 0;
};

enum class SolveStatus { converged, max_iter, stalled };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::stalled: return "stalled";
  }
  return "unknown";
}

struct SolverResult {
  Vector x_final;
  std::vector<IterationRecord> trace;
  SolveStatus status = SolveStatus::max_iter;

  int iterations() const { return trace.empty() ? 0 : trace.back().k; }

  /// First iteration whose residual norm drops below `target`, or nullopt.
  std::optional<int> first_crossing(double target) const {
    for (const auto& rec : trace) {
      if (rec.k >= 1 && rec.residual_norm < target) return rec.k;
    }
    return std::nullopt;
  }
};

/// The displayed element of ∂f(x_next) certified by the accepted prox step:
///   (∇q(x_next) − ḡ) − (x_next − x_k)/s
/// where ḡ = g_α and s = γτ_α for a dogleg step, ḡ = ∇q(x_k) and s = τ for
/// a plain proximal-gradient step.
inline Vector constructed_subgradient(const Vector& grad_next, const Vector& g_bar,
                                      const Vector& x_next, const Vector& x_k,
                                      double effective_step) {
  return (grad_next - g_bar) - (x_next - x_k) / effective_step;
}

/// Stopping rule: ‖r‖ ≤ √n·ε_abs + ε_rel·max{‖∇q(x_next)‖, ‖ḡ‖, ‖x_next‖/s, ‖x_k‖/s},
/// with the additional reporting threshold ‖r‖ < target when configured.
inline bool stop_check(const Vector& residual, const Vector& grad_next, const Vector& g_bar,
                       const Vector& x_next, const Vector& x_k, double effective_step,
                       const SolverConfig& config) {
  const double rn = residual.norm();
  if (config.target_residual && rn < *config.target_residual) return true;
  const double n = static_cast<double>(x_next.size());
  const double scale = std::max(std::max(grad_next.norm(), g_bar.norm()),
                                std::max(x_next.norm(), x_k.norm()) / effective_step);
  return rn <= std::sqrt(n) * config.eps_abs + config.eps_rel * scale;
}

struct BacktrackStep {
  double alpha = 0.0;
  double tau_alpha = 0.0;
  Vector g_alpha;
  Vector x_next;
  int backtracks = 0;
  long prox_calls = 0;
};

/// Backtracking of Algorithm 1 line 3: try α = 1 + (1/2)^i, i = 0, 1, …,
/// candidate x_next = prox_{γτ_α h}(x_k + γ p(α)), accept the first α whose
/// candidate passes the unscaled majorization test m_α(x_next) ≥ q(x_next);
/// fall back to α = 1 (a γ-scaled PG step, which always majorizes for
/// τ ≤ 1/L_q) once i exceeds max_backtracks.
inline BacktrackStep pdom_backtrack(const QuadraticModel& model, const Regularizer& h,
                                    const DoglegFrame& frame, const SolverConfig& config) {
  if (frame.zero_gradient()) {
    throw std::logic_error("pdom_backtrack: frame has zero gradient");
  }
  const Vector& x_k = frame.iterate();
  const Vector& g = frame.gradient();
  const double gamma = config.gamma;
  const double q_xk = model.value_from_gradient(x_k, g);

  BacktrackStep step;
  for (int i = 0; i <= config.max_backtracks; ++i) {
    const double alpha = 1.0 + std::ldexp(1.0, -i);
    const Vector p = frame.path_point(alpha);
    const double tau_alpha = frame.step_size(alpha);
    Vector cand = h.prox(x_k + gamma * p, gamma * tau_alpha);
    ++step.prox_calls;
    const Vector d = cand - x_k;
    // Shifted coordinates: both sides relative to q(x_k).
    const double q_bar = g.dot(d) + 0.5 * d.dot(model.op().apply(d));
    const double tol = 1e-12 * (1.0 + std::abs(q_bar + q_xk));
    const Vector g_alpha = frame.projected_gradient(alpha);
    const double m_bar = g_alpha.dot(d) + d.squaredNorm() / (2.0 * tau_alpha);
    if (m_bar >= q_bar - tol) {
      step.alpha = alpha;
      step.tau_alpha = tau_alpha;
      step.g_alpha = g_alpha;
      step.x_next = std::move(cand);
      step.backtracks = i;
      return step;
    }
  }
  // α = 1 fallback: first-segment quantities, accepted unconditionally.
  step.alpha = 1.0;
  step.tau_alpha = frame.tau();
  step.g_alpha = g;
  step.x_next = h.prox(x_k + gamma * frame.gradient_point(), gamma * frame.tau());
  ++step.prox_calls;
  step.backtracks = config.max_backtracks + 1;
  return step;
}

struct SafeguardResult {
  Vector x;
  double f = 0.0;
  bool substituted = false;
};

/// Algorithm 1 line 4: compute the plain PG point v = prox_{τh}(x_k − τg)
/// and substitute it when f(candidate) > f(v), strictly.
inline SafeguardResult pdom_safeguard(const QuadraticModel& model, const Regularizer& h,
                                      const Vector& x_k, const Vector& g, double tau,
                                      Vector x_cand, double f_cand) {
  Vector v = h.prox(x_k - tau * g, tau);
  const double f_v = model.value(v) + h.value(v);
  if (f_cand > f_v) return {std::move(v), f_v, true};
  return {std::move(x_cand), f_cand, false};
}

namespace detail {

inline void push_initial_record(std::vector<IterationRecord>& trace, double f0,
                                const SolverConfig& config, const Vector& x0) {
  IterationRecord rec;
  rec.k = 0;
  rec.f_value = f0;
  if (config.recovery_error) rec.nre = config.recovery_error(x0);
  trace.push_back(std::move(rec));
}

inline bool bitwise_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

}  // namespace detail

/// PDOM, Algorithm 1: backtracked dogleg step, PG safeguard, constructed
/// subgradient stopping. The f trace is monotone (Theorem 2).
inline SolverResult pdom_solve(const QuadraticModel& model, const Regularizer& h,
                               const Vector& x0, const SolverConfig& config) {
  config.validate();
  const double tau = config.resolve_tau(model);
  const double gamma = config.gamma;

  SolverResult result;
  Vector x = x0;
  double f = model.value(x) + h.value(x);
  long prox_calls = 0;
  detail::push_initial_record(result.trace, f, config, x);

  for (int k = 0; k < config.max_iter; ++k) {
    IterationRecord rec;
    rec.k = k + 1;

    Vector x_next;
    Vector residual;
    Vector g_bar;
    double effective_step = 0.0;

    const Vector g = model.gradient(x);
    if (g.norm() == 0.0) {
      // Eq. (13) is undefined at g = 0: take one pure prox step; if the
      // iterate is unchanged it is a prox fixed point with zero gradient,
      // hence a critical point.
      x_next = h.prox(x, tau);
      ++prox_calls;
      if (detail::bitwise_equal(x_next, x)) {
        rec.f_value = f;
        rec.residual_norm = 0.0;
        rec.tau_alpha = tau;
        rec.step_norm = 0.0;
        if (config.recovery_error) rec.nre = config.recovery_error(x);
        rec.prox_calls = prox_calls;
        result.trace.push_back(std::move(rec));
        result.status = SolveStatus::converged;
        result.x_final = std::move(x);
        return result;
      }
      g_bar = g;
      effective_step = tau;
      rec.tau_alpha = tau;
      f = model.value(x_next) + h.value(x_next);
    } else {
      DoglegFrame frame(model, x, tau);
      BacktrackStep bt = pdom_backtrack(model, h, frame, config);
      prox_calls += bt.prox_calls;
      const double f_cand = model.value(bt.x_next) + h.value(bt.x_next);
      SafeguardResult sg = pdom_safeguard(model, h, x, g, tau, std::move(bt.x_next), f_cand);
      ++prox_calls;
      x_next = std::move(sg.x);
      f = sg.f;
      rec.alpha = bt.alpha;
      rec.tau_alpha = bt.tau_alpha;
      rec.backtracks = bt.backtracks;
      rec.safeguard_taken = sg.substituted;
      if (sg.substituted) {
        g_bar = g;
        effective_step = tau;
      } else {
        g_bar = std::move(bt.g_alpha);
        effective_step = gamma * bt.tau_alpha;
      }
    }

    const Vector grad_next = model.gradient(x_next);
    residual = constructed_subgradient(grad_next, g_bar, x_next, x, effective_step);
    rec.f_value = f;
    rec.residual_norm = residual.norm();
    rec.step_norm = (x_next - x).norm();
    if (config.recovery_error) rec.nre = config.recovery_error(x_next);
    rec.prox_calls = prox_calls;
    result.trace.push_back(rec);

    if (stop_check(residual, grad_next, g_bar, x_next, x, effective_step, config)) {
      result.status = SolveStatus::converged;
      result.x_final = std::move(x_next);
      return result;
    }
    if (detail::bitwise_equal(x_next, x)) {
      // Deterministic iteration map with an unchanged iterate: frozen forever.
      result.status = SolveStatus::stalled;
      result.x_final = std::move(x_next);
      return result;
    }
    x = std::move(x_next);
  }
  result.status = SolveStatus::max_iter;
  result.x_final = std::move(x);
  return result;
}

/// Fixed-step proximal gradient baseline (Eq. (8)).
inline SolverResult pg_solve(const QuadraticModel& model, const Regularizer& h,
                             const Vector& x0, const SolverConfig& config) {
  config.validate();
  const double tau = config.resolve_tau(model);

  SolverResult result;
  Vector x = x0;
  double f = model.value(x) + h.value(x);
  long prox_calls = 0;
  detail::push_initial_record(result.trace, f, config, x);

  for (int k = 0; k < config.max_iter; ++k) {
    const Vector g = model.gradient(x);
    Vector x_next = h.prox(x - tau * g, tau);
    ++prox_calls;
    const Vector grad_next = model.gradient(x_next);
    const Vector residual = constructed_subgradient(grad_next, g, x_next, x, tau);
    f = model.value(x_next) + h.value(x_next);

    IterationRecord rec;
    rec.k = k + 1;
    rec.f_value = f;
    rec.residual_norm = residual.norm();
    rec.tau_alpha = tau;
    rec.step_norm = (x_next - x).norm();
    if (config.recovery_error) rec.nre = config.recovery_error(x_next);
    rec.prox_calls = prox_calls;
    result.trace.push_back(std::move(rec));

    if (stop_check(residual, grad_next, g, x_next, x, tau, config)) {
      result.status = SolveStatus::converged;
      result.x_final = std::move(x_next);
      return result;
    }
    if (detail::bitwise_equal(x_next, x)) {
      result.status = SolveStatus::stalled;
      result.x_final = std::move(x_next);
      return result;
    }
    x = std::move(x_next);
  }
  result.status = SolveStatus::max_iter;
  result.x_final = std::move(x);
  return result;
}

/// Monotone accelerated proximal gradient baseline: per iteration an
/// extrapolated candidate and a plain PG candidate (two prox calls); the one
/// with lower objective is accepted, so f stays monotone.
inline SolverResult mapg_solve(const QuadraticModel& model, const Regularizer& h,
                               const Vector& x0, const SolverConfig& config) {
  config.validate();
  const double tau = config.resolve_tau(model);

  SolverResult result;
  Vector x = x0;
  Vector x_prev = x0;
  Vector z = x0;
  double t_prev = 0.0;
  double t = 1.0;
  long prox_calls = 0;
  detail::push_initial_record(result.trace, model.value(x) + h.value(x), config, x);

  for (int k = 0; k < config.max_iter; ++k) {
    const Vector y = x + (t_prev / t) * (z - x) + ((t_prev - 1.0) / t) * (x - x_prev);
    const Vector g_y = model.gradient(y);
    Vector z_next = h.prox(y - tau * g_y, tau);
    const Vector g_x = model.gradient(x);
    Vector v_next = h.prox(x - tau * g_x, tau);
    prox_calls += 2;
    const double f_z = model.value(z_next) + h.value(z_next);
    const double f_v = model.value(v_next) + h.value(v_next);

    Vector x_next;
    Vector base;
    const Vector* g_base = nullptr;
    double f_next;
    if (f_z <= f_v) {
      x_next = z_next;
      base = y;
      g_base = &g_y;
      f_next = f_z;
    } else {
      x_next = std::move(v_next);
      base = x;
      g_base = &g_x;
      f_next = f_v;
    }
    const Vector grad_next = model.gradient(x_next);
    const Vector residual = constructed_subgradient(grad_next, *g_base, x_next, base, tau);

    IterationRecord rec;
    rec.k = k + 1;
    rec.f_value = f_next;
    rec.residual_norm = residual.norm();
    rec.tau_alpha = tau;
    rec.step_norm = (x_next - x).norm();
    if (config.recovery_error) rec.nre = config.recovery_error(x_next);
    rec.prox_calls = prox_calls;
    result.trace.push_back(std::move(rec));

    const bool done = stop_check(residual, grad_next, *g_base, x_next, base, tau, config);

    t_prev = t;
    t = (std::sqrt(4.0 * t * t + 1.0) + 1.0) * 0.5;
    x_prev = std::move(x);
    x = x_next;
    z = std::move(z_next);

    if (done) {
      result.status = SolveStatus::converged;
      result.x_final = std::move(x);
      return result;
    }
  }
  result.status = SolveStatus::max_iter;
  result.x_final = std::move(x);
  return result;
}

}  // namespace pdom
