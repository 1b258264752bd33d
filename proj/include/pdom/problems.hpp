#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pdom/prox.hpp"
#include "pdom/quadratic.hpp"

namespace pdom {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic per-trial seed: reruns are bit-identical regardless of how
/// trials are scheduled across workers.
inline std::uint64_t trial_seed(std::uint64_t master, std::uint64_t cell, std::uint64_t trial) {
  std::uint64_t s = splitmix64(master);
  s = splitmix64(s ^ (0x9e3779b97f4a7c15ULL + cell));
  s = splitmix64(s ^ (0xc2b2ae3d27d4eb4fULL + trial));
  return s;
}

inline Vector random_initial_point(std::uint64_t seed, Index dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(dim);
  for (Index i = 0; i < dim; ++i) x[i] = normal(rng);
  return x;
}

/// Normalized recovery error ‖x − x*‖ / ‖x*‖.
inline double nre(const Vector& x, const Vector& x_true) {
  const double denom = x_true.norm();
  if (denom == 0.0) throw std::invalid_argument("nre: ground truth is zero");
  return (x - x_true).norm() / denom;
}

struct SparseRecoveryInstance {
  Matrix a;       // m×n sensing matrix, m = n/2
  Vector y;       // observations
  Vector x_true;  // sparse ground truth
  double lambda = 0.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
};

/// ℓ0-regularized sparse recovery instance: Gaussian A with m = n/2 rows,
/// ground truth with `sparsity` nonzeros uniform on ±[1,2],
/// y = A x* + noise, λ = lambda_scale·|Aᵀy|_∞, μ = λ_max(AᵀA)·1e-10.
inline SparseRecoveryInstance gen_sparse_recovery(std::uint64_t seed, Index n, Index sparsity,
                                                  double lambda_scale, double noise_std = 0.0) {
  if (n < 2 || n % 2 != 0) {
    throw std::invalid_argument("gen_sparse_recovery: n must be even and >= 2");
  }
  if (sparsity < 1 || sparsity > n) {
    throw std::invalid_argument("gen_sparse_recovery: invalid sparsity");
  }
  if (!(lambda_scale > 0.0) || lambda_scale > 0.1) {
    throw std::invalid_argument("gen_sparse_recovery: lambda_scale must lie in (0, 0.1]");
  }
  if (noise_std < 0.0) {
    throw std::invalid_argument("gen_sparse_recovery: noise_std must be >= 0");
  }
  const Index m = n / 2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> mag(1.0, 2.0);

  SparseRecoveryInstance inst;
  inst.seed = seed;
  inst.a.resize(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) inst.a(i, j) = normal(rng);
  }
  inst.x_true = Vector::Zero(n);
  std::vector<Index> idx(n);
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (Index k = 0; k < sparsity; ++k) {
    const double sign = (rng() & 1ULL) ? 1.0 : -1.0;
    inst.x_true[idx[k]] = sign * mag(rng);
  }
  inst.y = inst.a * inst.x_true;
  for (Index i = 0; i < m; ++i) inst.y[i] += noise_std * normal(rng);

  inst.lambda = lambda_scale * (inst.a.transpose() * inst.y).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es(inst.a.transpose() * inst.a, Eigen::EigenvaluesOnly);
  inst.mu = es.eigenvalues().maxCoeff() * 1e-10;
  return inst;
}

struct RpcaInstance {
  Matrix m_obs;   // M = L* + S*
  Matrix l_true;  // rank-r
  Matrix s_true;  // sparse ±1
  Index r = 0;
  double lambda = 0.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
};

/// RPCA instance: L* = P Wᵀ/√m with P, W i.i.d. N(0,1) (entry variance r/m),
/// S* has ⌊sparse_frac·m²⌋ entries of ±1 at random positions,
/// λ = 1/√m, μ = 2e-6.
inline RpcaInstance gen_rpca(std::uint64_t seed, Index m, Index r, double sparse_frac) {
  if (m < 1) throw std::invalid_argument("gen_rpca: m must be >= 1");
  if (r < 1 || r > m) throw std::invalid_argument("gen_rpca: r out of range");
  if (sparse_frac < 0.0 || sparse_frac > 1.0) {
    throw std::invalid_argument("gen_rpca: sparse_frac must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;

  RpcaInstance inst;
  inst.seed = seed;
  inst.r = r;
  Matrix p(m, r), w(m, r);
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < m; ++i) p(i, j) = normal(rng);
  }
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < m; ++i) w(i, j) = normal(rng);
  }
  inst.l_true = (p * w.transpose()) / std::sqrt(static_cast<double>(m));

  inst.s_true = Matrix::Zero(m, m);
  const Index nnz = static_cast<Index>(sparse_frac * static_cast<double>(m) * static_cast<double>(m));
  std::vector<Index> idx(m * m);
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  for (Index k = 0; k < nnz; ++k) {
    inst.s_true(idx[k] % m, idx[k] / m) = (rng() & 1ULL) ? 1.0 : -1.0;
  }

  inst.m_obs = inst.l_true + inst.s_true;
  inst.lambda = 1.0 / std::sqrt(static_cast<double>(m));
  inst.mu = 2e-6;
  return inst;
}

/// How to map the solver's flat vector back to problem coordinates.
struct Embedding {
  enum class Kind { identity, rpca_stacked };
  Kind kind = Kind::identity;
  Index rows = 0;
  Index cols = 0;

  Vector extract_x(const Vector& u) const { return u; }
  Matrix extract_l(const Vector& u) const {
    require_rpca(u);
    return Eigen::Map<const Matrix>(u.data(), rows, cols);
  }
  Matrix extract_s(const Vector& u) const {
    require_rpca(u);
    return Eigen::Map<const Matrix>(u.data() + rows * cols, rows, cols);
  }
  Vector flatten(const Matrix& l, const Matrix& s) const {
    Vector u(2 * l.size());
    u.head(l.size()) = Eigen::Map<const Vector>(l.data(), l.size());
    u.tail(s.size()) = Eigen::Map<const Vector>(s.data(), s.size());
    return u;
  }

 private:
  void require_rpca(const Vector& u) const {
    if (kind != Kind::rpca_stacked || u.size() != 2 * rows * cols) {
      throw std::logic_error("Embedding: not an RPCA stacked vector");
    }
  }
};

struct Composite {
  QuadraticModel model;
  std::shared_ptr<const Regularizer> h;
  Embedding embedding;
  /// Recovery metric against the instance's ground truth (NRE for sparse
  /// recovery, ‖L−L*‖_F/‖L*‖_F for RPCA).
  std::function<double(const Vector&)> recovery_error;

  double objective(const Vector& x) const { return model.value(x) + h->value(x); }
};

inline Composite to_composite(const SparseRecoveryInstance& inst) {
  const Index n = inst.a.cols();
  Matrix q = inst.a.transpose() * inst.a;
  q.diagonal().array() += inst.mu;
  QuadraticModel model = build_dense(std::move(q), -(inst.a.transpose() * inst.y),
                                     0.5 * inst.y.squaredNorm());
  auto h = std::make_shared<L0Regularizer>(inst.lambda);
  Embedding emb;
  emb.kind = Embedding::Kind::identity;
  emb.rows = n;
  emb.cols = 1;
  Vector x_true = inst.x_true;
  return Composite{std::move(model), std::move(h), emb,
                   [x_true](const Vector& x) { return nre(x, x_true); }};
}

inline Composite to_composite(const RpcaInstance& inst) {
  const Index m = inst.m_obs.rows();
  const Index n = inst.m_obs.cols();
  auto op = build_rpca_operator(m, n, inst.mu);
  Vector b(2 * m * n);
  const Eigen::Map<const Vector> vec_m(inst.m_obs.data(), m * n);
  b.head(m * n) = -vec_m;
  b.tail(m * n) = -vec_m;
  QuadraticModel model(op, std::move(b), 0.5 * inst.m_obs.squaredNorm());

  std::vector<BlockSumRegularizer::Block> blocks;
  blocks.push_back({0, m * n, std::make_shared<RankIndicatorRegularizer>(m, n, inst.r)});
  blocks.push_back({m * n, m * n, std::make_shared<L0Regularizer>(inst.lambda)});
  auto h = std::make_shared<BlockSumRegularizer>(std::move(blocks));

  Embedding emb;
  emb.kind = Embedding::Kind::rpca_stacked;
  emb.rows = m;
  emb.cols = n;
  const Matrix l_true = inst.l_true;
  const double l_norm = l_true.norm();
  Embedding emb_copy = emb;
  return Composite{std::move(model), std::move(h), emb,
                   [emb_copy, l_true, l_norm](const Vector& u) {
                     return (emb_copy.extract_l(u) - l_true).norm() / l_norm;
                   }};
}

}  // namespace pdom
