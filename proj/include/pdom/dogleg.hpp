#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>

#include "pdom/quadratic.hpp"

namespace pdom {

/// Per-iterate dogleg quantities. The path runs from the gradient point
/// p_tau = −τg (constant on α ∈ (0,1]) to the Newton point p_N = −Q⁻¹g
/// reached at α = 2. Frames are immutable; a frame with g = 0 reports
/// convergence at construction and produces no path.
class DoglegFrame {
 public:
  DoglegFrame(const QuadraticModel& model, Vector x, double tau)
      : x_(std::move(x)), tau_(tau) {
    if (x_.size() != model.dim()) {
      throw std::invalid_argument("DoglegFrame: iterate length does not match model dimension");
    }
    const double lq = model.lipschitz();
    if (!(tau_ > 0.0) || tau_ > 1.0 / lq * (1.0 + 1e-12)) {
      throw std::invalid_argument("DoglegFrame: tau must lie in (0, 1/L_q]");
    }
    g_ = model.gradient(x_);
    zero_gradient_ = (g_.norm() == 0.0);
    if (!zero_gradient_) {
      p_tau_ = -tau_ * g_;
      p_newton_ = -model.op().apply_inverse(g_);
    }
  }

  const Vector& iterate() const { return x_; }
  const Vector& gradient() const { return g_; }
  double tau() const { return tau_; }
  bool zero_gradient() const { return zero_gradient_; }

  const Vector& gradient_point() const {
    require_nonzero_gradient();
    return p_tau_;
  }
  const Vector& newton_point() const {
    require_nonzero_gradient();
    return p_newton_;
  }

  /// p(α): p_tau on the first segment, the line toward p_N on the second.
  Vector path_point(double alpha) const {
    require_nonzero_gradient();
    check_alpha(alpha);
    if (alpha <= 1.0) return p_tau_;
    return p_tau_ + (alpha - 1.0) * (p_newton_ - p_tau_);
  }

  /// τ_α = −‖p(α)‖² / ⟨g, p(α)⟩. Equals τ exactly on the first segment.
  double step_size(double alpha) const {
    require_nonzero_gradient();
    check_alpha(alpha);
    if (alpha <= 1.0) return tau_;
    const Vector p = path_point(alpha);
    return -p.squaredNorm() / g_.dot(p);
  }

  /// g_α = (⟨g, p(α)⟩ / ‖p(α)‖²) p(α); reduces to g on the first segment.
  Vector projected_gradient(double alpha) const {
    require_nonzero_gradient();
    check_alpha(alpha);
    if (alpha <= 1.0) return g_;
    const Vector p = path_point(alpha);
    const double pn = p.squaredNorm();
    if (pn == 0.0) throw std::logic_error("DoglegFrame: zero path vector");
    return (g_.dot(p) / pn) * p;
  }

  /// m_α(x; x_k) = q(x_k) + ⟨g_α, x − x_k⟩ + ‖x − x_k‖²/(2 τ_α).
  double surrogate_value(double alpha, const Vector& x, double q_at_xk) const {
    const Vector d = x - x_;
    return q_at_xk + projected_gradient(alpha).dot(d) + d.squaredNorm() / (2.0 * step_size(alpha));
  }

 private:
  void require_nonzero_gradient() const {
    if (zero_gradient_) {
      throw std::logic_error("DoglegFrame: gradient is zero; iterate is a critical point of q");
    }
  }
  static void check_alpha(double alpha) {
    if (!(alpha > 0.0) || alpha > 2.0) {
      throw std::invalid_argument("DoglegFrame: alpha must lie in (0, 2]");
    }
  }

  Vector x_;
  Vector g_;
  Vector p_tau_;
  Vector p_newton_;
  double tau_;
  bool zero_gradient_ = false;
};

/// Theorem-1 check in the shifted coordinates of the frame: on the line
/// x_k + β p(α), the surrogate m̄_α majorizes q̄ for α ∈ (1,2]. True iff
/// q̄(β) ≤ m̄_α(β) + 1e-10 at every sampled β.
inline bool majorizes_on_line(const QuadraticModel& model, const DoglegFrame& frame,
                              double alpha, std::span<const double> betas) {
  if (!(alpha > 1.0) || alpha > 2.0) {
    throw std::invalid_argument("majorizes_on_line: alpha must lie in (1, 2]");
  }
  const Vector p = frame.path_point(alpha);
  const double gp = frame.gradient().dot(p);
  const double pqp = p.dot(model.op().apply(p));
  const double pp = p.squaredNorm();
  const double tau_alpha = frame.step_size(alpha);
  for (double beta : betas) {
    const double q_bar = beta * gp + 0.5 * beta * beta * pqp;
    const double m_bar = beta * gp + 0.5 * beta * beta * pp / tau_alpha;
    if (q_bar > m_bar + 1e-10) return false;
  }
  return true;
}

}  // namespace pdom
