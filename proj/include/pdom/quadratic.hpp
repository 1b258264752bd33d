#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace pdom {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Symmetric positive definite linear map with exact inverse application and
/// spectral bounds. Implementations precompute whatever they need at
/// construction; apply/apply_inverse never refactor.
class SpdOperator {
 public:
  virtual ~SpdOperator() = default;

  virtual Index dim() const = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_inverse(const Vector& x) const = 0;
  virtual double lambda_max() const = 0;
  virtual double lambda_min() const = 0;

 protected:
  void check_dim(const Vector& x) const {
    if (x.size() != dim()) {
      throw std::invalid_argument("SpdOperator: vector length " +
                                  std::to_string(x.size()) +
                                  " does not match operator dimension " +
                                  std::to_string(dim()));
    }
  }
};

/// Dense SPD matrix. Eigenvalue bounds and a Cholesky factorization are
/// computed once at construction; inverse application is a triangular solve.
class DenseSpdOperator final : public SpdOperator {
 public:
  explicit DenseSpdOperator(Matrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols() || q_.rows() == 0) {
      throw std::invalid_argument("DenseSpdOperator: matrix must be square and nonempty");
    }
    const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
    const double asym = (q_ - q_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
      std::ostringstream msg;
      msg << "DenseSpdOperator: matrix is not symmetric (max asymmetry " << asym << ")";
      throw std::invalid_argument(msg.str());
    }
    q_ = ((q_ + q_.transpose()) * 0.5).eval();

    Eigen::SelfAdjointEigenSolver<Matrix> es(q_, Eigen::EigenvaluesOnly);
    lmin_ = es.eigenvalues().minCoeff();
    lmax_ = es.eigenvalues().maxCoeff();
    if (lmin_ <= 0.0) {
      std::ostringstream msg;
      msg << "DenseSpdOperator: matrix is not positive definite "
          << "(smallest eigenvalue estimate " << lmin_ << ")";
      throw std::invalid_argument(msg.str());
    }
    llt_.compute(q_);
    if (llt_.info() != Eigen::Success) {
      throw std::invalid_argument("DenseSpdOperator: Cholesky factorization failed");
    }
  }

  Index dim() const override { return q_.rows(); }
  Vector apply(const Vector& x) const override {
    check_dim(x);
    return q_ * x;
  }
  Vector apply_inverse(const Vector& x) const override {
    check_dim(x);
    return llt_.solve(x);
  }
  double lambda_max() const override { return lmax_; }
  double lambda_min() const override { return lmin_; }

  const Matrix& matrix() const { return q_; }

 private:
  Matrix q_;
  Eigen::LLT<Matrix> llt_;
  double lmin_ = 0.0;
  double lmax_ = 0.0;
};

/// Block Hessian of the regularized RPCA quadratic
///   ½‖M − L − S‖²_F + (μ/2)(‖L‖²_F + ‖S‖²_F)
/// on the stacked variable (vec L, vec S). Each coordinate pair (l, s) is
/// acted on by [[1+μ, 1], [1, 1+μ]]; the inverse is applied analytically.
class RpcaBlockOperator final : public SpdOperator {
 public:
  RpcaBlockOperator(Index rows, Index cols, double mu)
      : rows_(rows), cols_(cols), mu_(mu) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("RpcaBlockOperator: rows and cols must be >= 1");
    }
    if (!(mu > 0.0)) {
      throw std::invalid_argument("RpcaBlockOperator: mu must be positive");
    }
  }

  Index block_size() const { return rows_ * cols_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  double mu() const { return mu_; }

  Index dim() const override { return 2 * block_size(); }

  Vector apply(const Vector& x) const override {
    check_dim(x);
    const Index n = block_size();
    Vector out(2 * n);
    const auto l = x.head(n);
    const auto s = x.tail(n);
    out.head(n) = (1.0 + mu_) * l + s;
    out.tail(n) = l + (1.0 + mu_) * s;
    return out;
  }

  Vector apply_inverse(const Vector& x) const override {
    check_dim(x);
    const Index n = block_size();
    const double det = mu_ * (mu_ + 2.0);  // (1+μ)² − 1
    Vector out(2 * n);
    const auto l = x.head(n);
    const auto s = x.tail(n);
    out.head(n) = ((1.0 + mu_) * l - s) / det;
    out.tail(n) = (-l + (1.0 + mu_) * s) / det;
    return out;
  }

  double lambda_max() const override { return 2.0 + mu_; }
  double lambda_min() const override { return mu_; }

 private:
  Index rows_;
  Index cols_;
  double mu_;
};

inline std::shared_ptr<const SpdOperator> build_rpca_operator(Index rows, Index cols, double mu) {
  return std::make_shared<RpcaBlockOperator>(rows, cols, mu);
}

/// The smooth part q(x) = ½xᵀQx + bᵀx (+ c). The constant c defaults to 0 and
/// exists so that problem adapters can report the original objective value.
class QuadraticModel {
 public:
  QuadraticModel(std::shared_ptr<const SpdOperator> q, Vector b, double constant = 0.0)
      : q_(std::move(q)), b_(std::move(b)), constant_(constant) {
    if (!q_) throw std::invalid_argument("QuadraticModel: null operator");
    if (b_.size() != q_->dim()) {
      throw std::invalid_argument("QuadraticModel: b length does not match operator dimension");
    }
  }

  Index dim() const { return q_->dim(); }
  const SpdOperator& op() const { return *q_; }
  std::shared_ptr<const SpdOperator> op_ptr() const { return q_; }
  const Vector& b() const { return b_; }
  double constant() const { return constant_; }

  /// Gradient Lipschitz constant of q: the largest eigenvalue of Q.
  double lipschitz() const { return q_->lambda_max(); }

  double value(const Vector& x) const {
    check_dim(x);
    return 0.5 * x.dot(q_->apply(x)) + b_.dot(x) + constant_;
  }

  /// q(x) given a precomputed gradient g = Qx + b; avoids a second apply.
  double value_from_gradient(const Vector& x, const Vector& g) const {
    return 0.5 * x.dot(g + b_) + constant_;
  }

  Vector gradient(const Vector& x) const {
    check_dim(x);
    return q_->apply(x) + b_;
  }

  Vector newton_point(const Vector& x) const { return -q_->apply_inverse(gradient(x)); }

 private:
  void check_dim(const Vector& x) const {
    if (x.size() != dim()) {
      throw std::invalid_argument("QuadraticModel: vector length " +
                                  std::to_string(x.size()) +
                                  " does not match model dimension " +
                                  std::to_string(dim()));
    }
  }

  std::shared_ptr<const SpdOperator> q_;
  Vector b_;
  double constant_;
};

inline QuadraticModel build_dense(Matrix q, Vector b, double constant = 0.0) {
  return QuadraticModel(std::make_shared<DenseSpdOperator>(std::move(q)), std::move(b), constant);
}

}  // namespace pdom
