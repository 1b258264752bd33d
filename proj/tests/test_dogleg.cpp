#include <catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "pdom/dogleg.hpp"

using namespace pdom;

namespace {

QuadraticModel diag41_model() {
  return build_dense((Matrix(2, 2) << 4, 0, 0, 1).finished(), Vector::Zero(2));
}

// Frame at x = (1,1) for Q = diag(4,1), b = 0: g = (4,1), tau = 1/4.
DoglegFrame diag41_frame(const QuadraticModel& model) {
  return DoglegFrame(model, Vector::Ones(2), 0.25);
}

struct FrameSample {
  QuadraticModel model;
  DoglegFrame frame;
};

FrameSample random_frame(std::mt19937_64& rng, double tau_over_lmax = 1.0) {
  const Index dim = 2 + static_cast<Index>(rng() % 9);
  const auto spd = oracles::random_spd(rng, dim);
  QuadraticModel model = build_dense(spd.q, oracles::random_vector(rng, dim));
  Vector x = oracles::random_vector(rng, dim);
  DoglegFrame frame(model, std::move(x), tau_over_lmax / spd.lambda_max);
  return {std::move(model), std::move(frame)};
}

}  // namespace

TEST_CASE("path point") {
  const auto model = diag41_model();
  const auto frame = diag41_frame(model);
  CHECK((frame.path_point(1.0) - (Vector(2) << -1, -0.25).finished()).norm() <= 1e-15);
  CHECK((frame.path_point(1.5) - (Vector(2) << -1, -0.625).finished()).norm() <= 1e-15);
  CHECK((frame.path_point(2.0) - (Vector(2) << -1, -1).finished()).norm() <= 1e-12);

  // Identity Hessian with tau = 1: gradient and Newton points coincide.
  const QuadraticModel ident = build_dense(Matrix::Identity(3, 3), Vector::Zero(3));
  std::mt19937_64 rng(5);
  const DoglegFrame f2(ident, oracles::random_vector(rng, 3), 1.0);
  const Vector minus_g = -f2.gradient();
  for (double a : {0.2, 0.7, 1.0, 1.3, 2.0}) {
    REQUIRE((f2.path_point(a) - minus_g).norm() <= 1e-12);
  }

  CHECK_THROWS_AS(frame.path_point(0.0), std::invalid_argument);
  CHECK_THROWS_AS(frame.path_point(2.5), std::invalid_argument);
  CHECK_THROWS_AS(frame.path_point(-1.0), std::invalid_argument);
}

TEST_CASE("zero gradient frame reports convergence at construction") {
  const auto model = diag41_model();
  const DoglegFrame frame(model, Vector::Zero(2), 0.25);
  CHECK(frame.zero_gradient());
  CHECK_THROWS_AS(frame.path_point(1.5), std::logic_error);
  CHECK_THROWS_AS(frame.step_size(1.5), std::logic_error);
  CHECK_THROWS_AS(frame.projected_gradient(1.5), std::logic_error);
}

TEST_CASE("step size") {
  const auto model = diag41_model();
  const auto frame = diag41_frame(model);
  CHECK(frame.step_size(0.7) == 0.25);  // first segment is exactly tau
  CHECK(frame.step_size(1.5) == Catch::Approx(1.390625 / 4.625).epsilon(1e-14));

  const QuadraticModel ident = build_dense(Matrix::Identity(3, 3), Vector::Zero(3));
  std::mt19937_64 rng(7);
  const DoglegFrame f2(ident, oracles::random_vector(rng, 3), 1.0);
  for (double a : {0.5, 1.0, 1.5, 2.0}) REQUIRE(f2.step_size(a) == Catch::Approx(1.0));
}

TEST_CASE("step size is nondecreasing on the alpha grid (Lemma 2)") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto s = random_frame(rng);
    double prev = -1.0;
    for (int i = 1; i <= 20; ++i) {
      const double tau_a = s.frame.step_size(0.1 * i);
      REQUIRE(tau_a >= prev - 1e-12 * std::abs(prev));
      prev = tau_a;
    }
  }
}

TEST_CASE("projected gradient") {
  const auto model = diag41_model();
  const auto frame = diag41_frame(model);
  CHECK((frame.projected_gradient(0.4) - frame.gradient()).norm() == 0.0);
  CHECK((frame.projected_gradient(1.0) - frame.gradient()).norm() == 0.0);
  CHECK((frame.projected_gradient(2.0) - (Vector(2) << 2.5, 2.5).finished()).norm() <= 1e-12);

  std::mt19937_64 rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = random_frame(rng);
    const double a = 1.0 + 1e-3 + (0.999 - 1e-3) * std::uniform_real_distribution<>(0, 1)(rng);
    const Vector p = s.frame.path_point(a);
    const Vector ga = s.frame.projected_gradient(a);
    REQUIRE(ga.dot(p) == Catch::Approx(s.frame.gradient().dot(p)).epsilon(1e-12));
    REQUIRE((ga + p / s.frame.step_size(a)).norm() <= 1e-10 * ga.norm());
  }
}

TEST_CASE("surrogate value") {
  const auto model = diag41_model();
  const auto frame = diag41_frame(model);
  const double q_xk = model.value(frame.iterate());

  CHECK(frame.surrogate_value(1.5, frame.iterate(), q_xk) == Catch::Approx(q_xk));

  // Minimum along the path: m_alpha(x_k + p_alpha) = q(x_k) − (tau_alpha/2)‖g_alpha‖².
  for (double a : {1.2, 1.5, 2.0}) {
    const Vector x = frame.iterate() + frame.path_point(a);
    const double expected =
        q_xk - 0.5 * frame.step_size(a) * frame.projected_gradient(a).squaredNorm();
    REQUIRE(frame.surrogate_value(a, x, q_xk) == Catch::Approx(expected).margin(1e-12));
  }

  // First segment reduces to the PG surrogate m_g.
  std::mt19937_64 rng(31);
  const Vector x = oracles::random_vector(rng, 2);
  const double alpha = 0.6;
  const Vector d = x - frame.iterate();
  const double mg = q_xk + frame.gradient().dot(d) + d.squaredNorm() / (2.0 * frame.tau());
  CHECK(frame.surrogate_value(alpha, x, q_xk) == Catch::Approx(mg).epsilon(1e-14));
}

TEST_CASE("descent along the path (Lemma 1)") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 500; ++rep) {
    // tau anywhere in (0, 1/lambda_max]
    const double frac = 0.05 + 0.95 * unit(rng);
    const auto s = random_frame(rng, frac);
    const double g2 = s.frame.gradient().squaredNorm();
    for (int t = 0; t < 5; ++t) {
      const double a = 2.0 * (0.01 + 0.99 * unit(rng));
      const Vector p = s.frame.path_point(a);
      REQUIRE(p.dot(s.model.op().apply(p) + s.frame.gradient()) <= 1e-12 * g2);
    }
  }
  // Strict descent on the open second segment when tau < 1/lambda_max.
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = random_frame(rng, 0.5);
    const double g2 = s.frame.gradient().squaredNorm();
    for (double a : {1.2, 1.5, 1.9}) {
      const Vector p = s.frame.path_point(a);
      REQUIRE(p.dot(s.model.op().apply(p) + s.frame.gradient()) < -1e-12 * g2);
    }
    // At the endpoint p(2) = p_N the inner product vanishes identically.
    const Vector pn = s.frame.path_point(2.0);
    REQUIRE(std::abs(pn.dot(s.model.op().apply(pn) + s.frame.gradient())) <= 1e-12 * g2);
  }
}

TEST_CASE("majorization on the path line (Theorem 1)") {
  const auto model = diag41_model();
  const auto frame = diag41_frame(model);
  const std::vector<double> betas = {-2.0, -1.0, 0.0, 0.5, 1.0, 2.0};
  CHECK(majorizes_on_line(model, frame, 1.5, betas));

  // Equality at beta = 0 by construction: both reduce to q(x_k).
  const double q_xk = model.value(frame.iterate());
  CHECK(frame.surrogate_value(1.5, frame.iterate(), q_xk) == Catch::Approx(q_xk));

  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto s = random_frame(rng);
    const double a = 1.0 + unit(rng);
    const double beta = -3.0 + 6.0 * unit(rng);
    REQUIRE(majorizes_on_line(s.model, s.frame, a, std::vector<double>{beta}));
  }
}

TEST_CASE("surrogate minimizer sits at the path point (Lemma 9)") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = random_frame(rng);
    const double a = 1.0 + std::max(1e-6, unit(rng));
    const Vector p = s.frame.path_point(a);
    // m̄'(1) = ⟨g_alpha, p⟩ + ‖p‖²/tau_alpha = 0 exactly by the Eq. (13) scalings.
    const double m_slope_at_1 =
        s.frame.projected_gradient(a).dot(p) + p.squaredNorm() / s.frame.step_size(a);
    REQUIRE(std::abs(m_slope_at_1) <= 1e-9 * p.squaredNorm());
    // q̄'(1) = ⟨p, Qp + g⟩ ≤ 0 (Lemma 1), so argmin q̄ ≥ 1.
    REQUIRE(p.dot(s.model.op().apply(p) + s.frame.gradient()) <=
            1e-12 * s.frame.gradient().squaredNorm());
  }
}

TEST_CASE("tau validation") {
  const auto model = diag41_model();
  CHECK_THROWS_AS(DoglegFrame(model, Vector::Ones(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(DoglegFrame(model, Vector::Ones(2), 0.26), std::invalid_argument);
  CHECK_NOTHROW(DoglegFrame(model, Vector::Ones(2), 0.25));  // closed endpoint 1/L_q
  CHECK_THROWS_AS(DoglegFrame(model, Vector::Ones(3), 0.2), std::invalid_argument);
}
