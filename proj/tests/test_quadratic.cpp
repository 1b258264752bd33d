#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pdom/quadratic.hpp"

using namespace pdom;
using Catch::Matchers::ContainsSubstring;

namespace {
Matrix diag2(double a, double b) { return (Matrix(2, 2) << a, 0, 0, b).finished(); }
}  // namespace

TEST_CASE("quadratic value") {
  const QuadraticModel ident = build_dense(Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(ident.value((Vector(2) << 3, 4).finished()) == Catch::Approx(12.5));

  const QuadraticModel model = build_dense(diag2(4, 1), (Vector(2) << -4, -1).finished());
  CHECK(model.value(Vector::Ones(2)) == Catch::Approx(-2.5));
  CHECK(model.value(Vector::Zero(2)) == 0.0);

  CHECK_THROWS_AS(model.value(Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("quadratic gradient") {
  const QuadraticModel ident = build_dense(Matrix::Identity(2, 2), Vector::Zero(2));
  const Vector x = (Vector(2) << 3, 4).finished();
  CHECK((ident.gradient(x) - x).norm() == 0.0);

  const QuadraticModel model = build_dense(diag2(4, 1), (Vector(2) << -4, -1).finished());
  CHECK(model.gradient(Vector::Ones(2)).norm() == 0.0);

  const QuadraticModel nobias = build_dense(diag2(4, 1), Vector::Zero(2));
  CHECK((nobias.gradient(Vector::Ones(2)) - (Vector(2) << 4, 1).finished()).norm() == 0.0);

  CHECK_THROWS_AS(model.gradient(Vector::Ones(5)), std::invalid_argument);
}

TEST_CASE("gradient matches finite differences on random SPD models") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 25; ++rep) {
    const Index dim = 2 + static_cast<Index>(rng() % 9);
    const auto spd = oracles::random_spd(rng, dim);
    const QuadraticModel model = build_dense(spd.q, oracles::random_vector(rng, dim));
    const Vector x = oracles::random_vector(rng, dim);
    const Vector g = model.gradient(x);
    const Vector fd = oracles::finite_difference_gradient(
        [&](const Vector& v) { return model.value(v); }, x);
    REQUIRE((g - fd).norm() <= 1e-6 * std::max(1.0, g.norm()));
  }
}

TEST_CASE("newton point") {
  const QuadraticModel model = build_dense(diag2(4, 1), (Vector(2) << -4, -1).finished());
  // At the minimizer the gradient vanishes and so does the Newton step.
  CHECK(model.newton_point(Vector::Ones(2)).norm() == 0.0);

  const QuadraticModel nobias = build_dense(diag2(4, 1), Vector::Zero(2));
  const Vector pn = nobias.newton_point(Vector::Ones(2));
  CHECK((pn - (Vector(2) << -1, -1).finished()).norm() <= 1e-14);

  std::mt19937_64 rng(3);
  const QuadraticModel ident = build_dense(Matrix::Identity(4, 4), oracles::random_vector(rng, 4));
  const Vector x = oracles::random_vector(rng, 4);
  CHECK((ident.newton_point(x) + (x + ident.b())).norm() <= 1e-14);

  // Q p_N = −g within 1e-8 relative.
  for (int rep = 0; rep < 20; ++rep) {
    const Index dim = 2 + static_cast<Index>(rng() % 9);
    const auto spd = oracles::random_spd(rng, dim);
    const QuadraticModel model2 = build_dense(spd.q, oracles::random_vector(rng, dim));
    const Vector y = oracles::random_vector(rng, dim);
    const Vector g = model2.gradient(y);
    const Vector p = model2.newton_point(y);
    REQUIRE((model2.op().apply(p) + g).norm() <= 1e-8 * g.norm());
  }
}

TEST_CASE("build_dense spectral bounds") {
  const QuadraticModel eye = build_dense(Matrix::Identity(3, 3), Vector::Zero(3));
  CHECK(eye.op().lambda_max() == Catch::Approx(1.0));
  CHECK(eye.op().lambda_min() == Catch::Approx(1.0));

  const QuadraticModel d = build_dense(diag2(4, 1), Vector::Zero(2));
  CHECK(d.op().lambda_max() == Catch::Approx(4.0));
  CHECK(d.op().lambda_min() == Catch::Approx(1.0));
  CHECK(d.lipschitz() == Catch::Approx(4.0));

  const Matrix tri = (Matrix(2, 2) << 2, -1, -1, 2).finished();
  const QuadraticModel t = build_dense(tri, Vector::Zero(2));
  CHECK(t.op().lambda_max() == Catch::Approx(3.0));
  CHECK(t.op().lambda_min() == Catch::Approx(1.0));
}

TEST_CASE("build_dense rejects bad input") {
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1e-6;
  CHECK_THROWS_AS(build_dense(asym, Vector::Zero(2)), std::invalid_argument);

  Matrix indef = diag2(1, -2);
  CHECK_THROWS_WITH(build_dense(indef, Vector::Zero(2)), ContainsSubstring("-2"));
}

TEST_CASE("SpdOperator invariants on random dense operators") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Index dim = 2 + static_cast<Index>(rng() % 9);
    const auto spd = oracles::random_spd(rng, dim);
    const DenseSpdOperator op(spd.q);
    for (int t = 0; t < 100; ++t) {
      const Vector x = oracles::random_vector(rng, dim);
      const Vector y = oracles::random_vector(rng, dim);
      // symmetry
      REQUIRE(std::abs(op.apply(x).dot(y) - x.dot(op.apply(y))) <= 1e-10 * x.norm() * y.norm());
      // inverse consistency
      REQUIRE((op.apply_inverse(op.apply(x)) - x).norm() <= 1e-8 * x.norm());
      // spectral sandwich
      const double xqx = x.dot(op.apply(x));
      REQUIRE(xqx >= op.lambda_min() * x.squaredNorm() * (1.0 - 1e-10));
      REQUIRE(xqx <= op.lambda_max() * x.squaredNorm() * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("rpca operator per-pair action and analytic inverse") {
  const double mu = 1.0;
  const auto op = build_rpca_operator(2, 2, mu);
  REQUIRE(op->dim() == 8);
  Vector u = Vector::Zero(8);
  u[1] = 1.0;  // l-part entry, paired s-part entry u[5] = 0
  const Vector v = op->apply(u);
  CHECK(v[1] == Catch::Approx(2.0));
  CHECK(v[5] == Catch::Approx(1.0));

  std::mt19937_64 rng(23);
  const Vector w = oracles::random_vector(rng, 8);
  CHECK((op->apply_inverse(op->apply(w)) - w).norm() <= 1e-12 * w.norm());

  // lambda_max against a power-iteration oracle.
  const double pi = oracles::power_iteration([&](const Vector& x) { return op->apply(x); }, 8, rng);
  CHECK(pi == Catch::Approx(2.0 + mu).epsilon(1e-6));
  CHECK(op->lambda_max() == Catch::Approx(2.0 + mu));
  CHECK(op->lambda_min() == Catch::Approx(mu));

  CHECK_THROWS_AS(build_rpca_operator(2, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_rpca_operator(2, 2, -1.0), std::invalid_argument);
}

TEST_CASE("rpca operator agrees with explicitly assembled dense matrix") {
  std::mt19937_64 rng(29);
  for (Index m = 1; m <= 3; ++m) {
    const double mu = 0.37;
    const RpcaBlockOperator op(m, m, mu);
    const Index n = op.dim();
    Matrix dense = Matrix::Zero(n, n);
    const Index half = n / 2;
    for (Index i = 0; i < half; ++i) {
      dense(i, i) = 1.0 + mu;
      dense(half + i, half + i) = 1.0 + mu;
      dense(i, half + i) = 1.0;
      dense(half + i, i) = 1.0;
    }
    const Matrix dense_inv = dense.inverse();
    for (int t = 0; t < 20; ++t) {
      const Vector x = oracles::random_vector(rng, n);
      REQUIRE((op.apply(x) - dense * x).cwiseAbs().maxCoeff() <= 1e-12);
      REQUIRE((op.apply_inverse(x) - dense_inv * x).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}
