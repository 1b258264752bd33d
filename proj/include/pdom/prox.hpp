#pragma once

#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pdom/quadratic.hpp"

namespace pdom {

/// Hard threshold: exact prox of λ‖·‖₀ at step t. Coordinates with
/// y_i² ≤ 2tλ are zeroed (ties go to the sparser minimizer).
inline Vector prox_l0(const Vector& y, double t, double lambda) {
  if (!(t > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("prox_l0: t and lambda must be positive");
  }
  const double threshold = 2.0 * t * lambda;
  Vector out = y;
  for (Index i = 0; i < out.size(); ++i) {
    if (out[i] * out[i] <= threshold) out[i] = 0.0;
  }
  return out;
}

/// Soft threshold: prox of λ‖·‖₁ at step t.
inline Vector prox_l1(const Vector& y, double t, double lambda) {
  if (!(t > 0.0) || !(lambda > 0.0)) {
    throw std::invalid_argument("prox_l1: t and lambda must be positive");
  }
  const double shift = t * lambda;
  Vector out(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    const double a = std::abs(y[i]) - shift;
    out[i] = a > 0.0 ? (y[i] > 0.0 ? a : -a) : 0.0;
  }
  return out;
}

inline Vector prox_zero(const Vector& y, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("prox_zero: t must be positive");
  return y;
}

/// Best rank-≤r approximation via the r largest singular triplets, with a
/// deterministic sign convention (largest-magnitude entry of each kept left
/// singular vector made positive). Step-size independent: the regularizer is
/// an indicator function.
inline Matrix prox_rank_indicator(const Matrix& y, Index r) {
  if (r < 1 || r > std::min(y.rows(), y.cols())) {
    throw std::invalid_argument("prox_rank_indicator: r out of range");
  }
  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU().leftCols(r);
  Matrix v = svd.matrixV().leftCols(r);
  const Vector sigma = svd.singularValues().head(r);
  for (Index j = 0; j < r; ++j) {
    Index imax = 0;
    u.col(j).cwiseAbs().maxCoeff(&imax);
    if (u(imax, j) < 0.0) {
      u.col(j) = -u.col(j);
      v.col(j) = -v.col(j);
    }
  }
  return u * sigma.asDiagonal() * v.transpose();
}

/// Proximable term h: value (possibly +∞) and exact prox at any t > 0.
class Regularizer {
 public:
  virtual ~Regularizer() = default;
  virtual double value(const Vector& x) const = 0;
  virtual Vector prox(const Vector& y, double t) const = 0;
  virtual std::string describe() const = 0;
};

class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& y, double t) const override { return prox_zero(y, t); }
  std::string describe() const override { return "zero"; }
};

class L0Regularizer final : public Regularizer {
 public:
  explicit L0Regularizer(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("L0Regularizer: lambda must be positive");
  }
  double lambda() const { return lambda_; }
  double value(const Vector& x) const override {
    Index nnz = 0;
    for (Index i = 0; i < x.size(); ++i) nnz += (x[i] != 0.0);
    return lambda_ * static_cast<double>(nnz);
  }
  Vector prox(const Vector& y, double t) const override { return prox_l0(y, t, lambda_); }
  std::string describe() const override {
    std::ostringstream os;
    os << "l0(lambda=" << lambda_ << ")";
    return os.str();
  }

 private:
  double lambda_;
};

class L1Regularizer final : public Regularizer {
 public:
  explicit L1Regularizer(double lambda) : lambda_(lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("L1Regularizer: lambda must be positive");
  }
  double lambda() const { return lambda_; }
  double value(const Vector& x) const override { return lambda_ * x.lpNorm<1>(); }
  Vector prox(const Vector& y, double t) const override { return prox_l1(y, t, lambda_); }
  std::string describe() const override {
    std::ostringstream os;
    os << "l1(lambda=" << lambda_ << ")";
    return os.str();
  }

 private:
  double lambda_;
};

/// Indicator of {rank ≤ r} on a vectorized (column-major) rows×cols matrix.
class RankIndicatorRegularizer final : public Regularizer {
 public:
  RankIndicatorRegularizer(Index rows, Index cols, Index r)
      : rows_(rows), cols_(cols), r_(r) {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("RankIndicatorRegularizer: invalid shape");
    }
    if (r < 1 || r > std::min(rows, cols)) {
      throw std::invalid_argument("RankIndicatorRegularizer: r out of range");
    }
  }

  Index r() const { return r_; }

  double value(const Vector& x) const override {
    const Matrix y = as_matrix(x);
    Eigen::ColPivHouseholderQR<Matrix> qr(y);
    qr.setThreshold(1e-9);
    return qr.rank() <= r_ ? 0.0 : std::numeric_limits<double>::infinity();
  }

  Vector prox(const Vector& y, double t) const override {
    if (!(t > 0.0)) throw std::invalid_argument("RankIndicatorRegularizer: t must be positive");
    const Matrix p = prox_rank_indicator(as_matrix(y), r_);
    return Eigen::Map<const Vector>(p.data(), p.size());
  }

  std::string describe() const override {
    std::ostringstream os;
    os << "rank_indicator(r=" << r_ << "," << rows_ << "x" << cols_ << ")";
    return os.str();
  }

 private:
  Matrix as_matrix(const Vector& x) const {
    if (x.size() != rows_ * cols_) {
      throw std::invalid_argument("RankIndicatorRegularizer: vector length does not match shape");
    }
    return Eigen::Map<const Matrix>(x.data(), rows_, cols_);
  }

  Index rows_, cols_, r_;
};

/// Separable sum over disjoint contiguous blocks; each block's prox is
/// applied independently to its slice. Blocks must partition [0, dim).
class BlockSumRegularizer final : public Regularizer {
 public:
  struct Block {
    Index offset;
    Index length;
    std::shared_ptr<const Regularizer> h;
  };

  explicit BlockSumRegularizer(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("BlockSumRegularizer: no blocks");
    std::vector<const Block*> order;
    order.reserve(blocks_.size());
    for (const auto& b : blocks_) {
      if (!b.h || b.length < 1 || b.offset < 0) {
        throw std::invalid_argument("BlockSumRegularizer: malformed block");
      }
      order.push_back(&b);
    }
    std::sort(order.begin(), order.end(),
              [](const Block* a, const Block* b) { return a->offset < b->offset; });
    Index expected = 0;
    for (const Block* b : order) {
      if (b->offset != expected) {
        throw std::invalid_argument("BlockSumRegularizer: blocks overlap or leave gaps");
      }
      expected = b->offset + b->length;
    }
    dim_ = expected;
  }

  Index dim() const { return dim_; }

  double value(const Vector& x) const override {
    check(x);
    double total = 0.0;
    for (const auto& b : blocks_) total += b.h->value(x.segment(b.offset, b.length));
    return total;
  }

  Vector prox(const Vector& y, double t) const override {
    check(y);
    Vector out(y.size());
    for (const auto& b : blocks_) {
      out.segment(b.offset, b.length) = b.h->prox(y.segment(b.offset, b.length), t);
    }
    return out;
  }

  std::string describe() const override {
    std::string s = "block_sum(";
    for (size_t i = 0; i < blocks_.size(); ++i) {
      if (i) s += "+";
      s += blocks_[i].h->describe();
    }
    return s + ")";
  }

 private:
  void check(const Vector& x) const {
    if (x.size() != dim_) {
      throw std::invalid_argument("BlockSumRegularizer: vector length does not match partition");
    }
  }

  std::vector<Block> blocks_;
  Index dim_ = 0;
};

}  // namespace pdom
