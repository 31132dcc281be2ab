#include <doctest.h>

#include <cmath>

#include <Eigen/SVD>

#include "hyperpp/manifold.hpp"
#include "test_support.hpp"

using namespace hyperpp;
using hyperpp::testing::fd_jacobian;
using hyperpp::testing::normal_vector;
using hyperpp::testing::random_ball_point;
using hyperpp::testing::rel_err;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("curvature must be positive and finite") {
  CHECK_THROWS_AS(Curvature(0.0), DomainError);
  CHECK_THROWS_AS(Curvature(-1.0), DomainError);
  CHECK_THROWS_AS(Curvature(std::nan("")), DomainError);
  CHECK(Curvature(2.0).sqrt() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("poincare points enforce the open ball") {
  const Curvature c(1.0);
  CHECK_NOTHROW(PoincarePoint(vec({0.6, 0.7}), c));
  CHECK_THROWS_AS(PoincarePoint(vec({0.8, 0.6}), c), DomainError);
  CHECK_THROWS_AS(PoincarePoint(vec({0.1, std::nan("")}), c), DomainError);
  CHECK_THROWS_AS(PoincarePoint(vec({0.6, 0.0}), Curvature(4.0)), DomainError);
}

TEST_CASE("poincare_exp0 examples") {
  const Curvature c(1.0);
  SUBCASE("zero maps to origin") {
    const auto p = poincare_exp0(TangentVector::poincare(Vector::Zero(5), c));
    CHECK(p.coords().norm() == 0.0);
  }
  SUBCASE("(0.5, 0) -> (tanh 0.5, 0)") {
    const auto p = poincare_exp0(TangentVector::poincare(vec({0.5, 0.0}), c));
    CHECK(p.coords()[0] == doctest::Approx(0.4621171572600098).epsilon(1e-14));
    CHECK(p.coords()[1] == 0.0);
  }
  SUBCASE("norm identity |exp0(v)| = tanh(sqrt(c)|v|)/sqrt(c)") {
    Rng rng(7);
    for (double cv : {0.5, 1.0, 2.0}) {
      const Curvature cc(cv);
      for (int i = 0; i < 100; ++i) {
        const Vector v = normal_vector(rng, 1 + i % 8, 0.8);
        const auto p = poincare_exp0(TangentVector::poincare(v, cc));
        const double expected = std::tanh(cc.sqrt() * v.norm()) / cc.sqrt();
        CHECK(std::abs(p.coords().norm() - expected) <= 1e-12);
        CHECK(cv * p.coords().squaredNorm() < 1.0);
      }
    }
  }
  SUBCASE("non-finite input is a domain error") {
    CHECK_THROWS_AS(TangentVector::poincare(vec({INFINITY, 0.0}), c), DomainError);
  }
}

TEST_CASE("poincare_exp0_jacobian") {
  SUBCASE("identity in the zero limit") {
    const Matrix j = poincare_exp0_jacobian(TangentVector::poincare(Vector::Zero(3), Curvature(1.0)));
    CHECK(rel_err(j, Matrix::Identity(3, 3)) == 0.0);
    const Matrix j_small =
        poincare_exp0_jacobian(TangentVector::poincare(Vector::Constant(3, 1e-9), Curvature(1.0)));
    CHECK(rel_err(j_small, Matrix::Identity(3, 3)) < 1e-15);
  }
  SUBCASE("matches finite differences and is symmetric") {
    Rng rng(11);
    for (Eigen::Index d : {2, 4, 8}) {
      for (double cv : {0.5, 1.0, 2.0}) {
        const Curvature c(cv);
        for (int i = 0; i < 100; ++i) {
          const Vector v = normal_vector(rng, d, 1.0);
          const Matrix j = poincare_exp0_jacobian(TangentVector::poincare(v, c));
          const Matrix fd = fd_jacobian(
              [&](const Vector& x) { return poincare_exp0(TangentVector::poincare(x, c)).coords(); }, v,
              1e-6 * (1.0 + v.norm()));
          CHECK(rel_err(j, fd) <= 1e-6);
          CHECK((j - j.transpose()).norm() <= 1e-14);
        }
      }
    }
  }
}

TEST_CASE("conformal factor and its gradient") {
  const Curvature c(1.0);
  CHECK(conformal_factor(PoincarePoint::origin(3, c)) == 2.0);
  CHECK(conformal_factor(PoincarePoint(vec({0.95, 0.0}), c)) == doctest::Approx(2.0 / 0.0975));
  CHECK(conformal_factor_grad(PoincarePoint::origin(3, c)).norm() == 0.0);

  SUBCASE("bounded by 2cosh^2(1) for exp0 of unit-ball tangents") {
    Rng rng(3);
    const double bound = 2.0 * std::cosh(1.0) * std::cosh(1.0);
    CHECK(bound == doctest::Approx(4.7621956910836));
    for (int i = 0; i < 1000; ++i) {
      const Vector v = hyperpp::testing::random_direction(rng, 4) * uniform(rng, 0.0, 1.0);
      CHECK(conformal_factor(poincare_exp0(TangentVector::poincare(v, c))) <= bound);
    }
  }
  SUBCASE("gradient matches finite differences") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
      const Vector x = random_ball_point(rng, 3, 1.0, 0.9);
      const Vector g = conformal_factor_grad(PoincarePoint(x, c));
      const Matrix fd = fd_jacobian(
          [&](const Vector& y) { return Vector::Constant(1, conformal_factor(PoincarePoint(y, c))); }, x);
      CHECK(rel_err(Matrix(g.transpose()), fd) <= 1e-6);
    }
  }
  SUBCASE("gradient grows like (1 - c|x|^2)^-2 near the boundary") {
    const Vector dir = vec({1.0, 0.0, 0.0});
    const double inner = conformal_factor_grad(PoincarePoint(0.9 * dir, c)).norm();
    const double outer = conformal_factor_grad(PoincarePoint(0.99 * dir, c)).norm();
    CHECK(outer / inner > 50.0);
  }
}

TEST_CASE("hyperboloid_exp0") {
  SUBCASE("zero maps to the origin") {
    const auto x = hyperboloid_exp0(TangentVector::hyperboloid(Vector::Zero(4), Curvature(1.0)));
    CHECK(x.coords() == vec({1.0, 0.0, 0.0, 0.0}));
  }
  SUBCASE("(0,1,0) -> (cosh 1, sinh 1, 0)") {
    const auto x = hyperboloid_exp0(TangentVector::hyperboloid(vec({0.0, 1.0, 0.0}), Curvature(1.0)));
    CHECK(x.coords()[0] == doctest::Approx(1.5430806348152437).epsilon(1e-14));
    CHECK(x.coords()[1] == doctest::Approx(1.1752011936438014).epsilon(1e-14));
    CHECK(x.coords()[2] == 0.0);
  }
  SUBCASE("output lies on the hyperboloid") {
    Rng rng(13);
    for (double cv : {0.5, 1.0, 2.0}) {
      const Curvature c(cv);
      for (int i = 0; i < 100; ++i) {
        const auto x = hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(normal_vector(rng, 4), c));
        CHECK(std::abs(minkowski_inner(x.coords(), x.coords()) + 1.0 / cv) <= 1e-9);
        CHECK(x.time() > 0.0);
      }
    }
  }
  SUBCASE("nonzero time component is a contract error") {
    CHECK_THROWS_AS(TangentVector::hyperboloid(vec({0.1, 1.0}), Curvature(1.0)), ContractError);
  }
}

TEST_CASE("hyperboloid_exp0_jacobian") {
  Rng rng(17);
  SUBCASE("first column is exactly zero") {
    for (int i = 0; i < 20; ++i) {
      const Matrix j = hyperboloid_exp0_jacobian(
          TangentVector::hyperboloid_from_euclidean(normal_vector(rng, 5, 2.0), Curvature(1.0)));
      CHECK(j.col(0).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("matches finite differences") {
    for (Eigen::Index d : {2, 4, 8}) {
      for (double cv : {0.5, 1.0, 2.0}) {
        const Curvature c(cv);
        for (int i = 0; i < 100; ++i) {
          const Vector xe = normal_vector(rng, d, 1.0);
          const Matrix j = hyperboloid_exp0_jacobian(TangentVector::hyperboloid_from_euclidean(xe, c));
          // Finite differences over the space inputs only; the time input is
          // constrained to zero and its column is zero.
          const Matrix fd = fd_jacobian(
              [&](const Vector& x) {
                return hyperboloid_exp0(TangentVector::hyperboloid_from_euclidean(x, c)).coords();
              },
              xe, 1e-6 * (1.0 + xe.norm()));
          CHECK(rel_err(j.rightCols(d), fd) <= 1e-6);
        }
      }
    }
  }
  SUBCASE("small-norm limit") {
    const Matrix j = hyperboloid_exp0_jacobian(TangentVector::hyperboloid(Vector::Zero(3), Curvature(1.0)));
    Matrix expected = Matrix::Zero(3, 3);
    expected.bottomRightCorner(2, 2).setIdentity();
    CHECK(rel_err(j, expected) == 0.0);
  }
  SUBCASE("operator norm grows exponentially with |x_E|") {
    const Curvature c(1.0);
    const auto opnorm = [&](double r) {
      const Matrix j = hyperboloid_exp0_jacobian(
          TangentVector::hyperboloid_from_euclidean(vec({r / std::sqrt(2.0), r / std::sqrt(2.0)}), c));
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
      return svd.singularValues()[0];
    };
    CHECK(opnorm(5.0) / opnorm(1.0) > 20.0);
  }
}

TEST_CASE("minkowski_inner") {
  CHECK(minkowski_inner(vec({1, 0, 0}), vec({1, 0, 0})) == -1.0);
  CHECK(minkowski_inner(vec({2, 1, 1}), vec({1, 1, 0})) == -1.0);
  CHECK_THROWS_AS(minkowski_inner(vec({1, 0}), vec({1, 0, 0})), ContractError);
  CHECK_THROWS_AS(minkowski_inner(vec({1}), vec({1})), ContractError);
  Rng rng(19);
  for (int i = 0; i < 50; ++i) {
    const Vector a = normal_vector(rng, 4);
    const Vector b = normal_vector(rng, 4);
    const double alpha = uniform(rng, -3.0, 3.0);
    CHECK(minkowski_inner(alpha * a, b) == doctest::Approx(alpha * minkowski_inner(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("isometry between the two models") {
  SUBCASE("origins correspond") {
    const Curvature c(2.0);
    const auto h = poincare_to_hyperboloid(PoincarePoint::origin(3, c));
    CHECK(h.time() == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(h.space().norm() == 0.0);
    CHECK(hyperboloid_to_poincare(HyperboloidPoint::origin(3, c)).coords().norm() == 0.0);
  }
  SUBCASE("time component at |x| = 0.95") {
    const Curvature c(1.0);
    Rng rng(23);
    const Vector x = hyperpp::testing::random_direction(rng, 3) * 0.95;
    CHECK(poincare_to_hyperboloid(PoincarePoint(x, c)).time() == doctest::Approx(1.9025 / 0.0975));
  }
  SUBCASE("round trips are identities") {
    Rng rng(29);
    for (double cv : {0.5, 1.0, 2.0}) {
      const Curvature c(cv);
      for (int i = 0; i < 1000; ++i) {
        const Vector x = random_ball_point(rng, 1 + i % 6, cv, 0.95);
        const auto back = hyperboloid_to_poincare(poincare_to_hyperboloid(PoincarePoint(x, c)));
        CHECK((back.coords() - x).norm() <= 1e-9);

        const auto h = HyperboloidPoint::from_space(normal_vector(rng, 1 + i % 6, 2.0), c);
        const auto p = hyperboloid_to_poincare(h);
        CHECK(cv * p.coords().squaredNorm() < 1.0);
        const auto h2 = poincare_to_hyperboloid(p);
        CHECK((h2.coords() - h.coords()).norm() <= 1e-9 * std::max(1.0, h.time()));
      }
    }
  }
  SUBCASE("time component of exp0 image matches the closed form") {
    Rng rng(31);
    for (double cv : {0.5, 1.0, 2.0}) {
      const Curvature c(cv);
      for (int i = 0; i < 200; ++i) {
        const Vector v = normal_vector(rng, 4, 0.5);
        const auto h = poincare_to_hyperboloid(poincare_exp0(TangentVector::poincare(v, c)));
        const double t = std::tanh(c.sqrt() * v.norm());
        const double expected = (1.0 + t * t) / (c.sqrt() * (1.0 - t * t));
        CHECK(std::abs(h.time() - expected) <= 1e-9);
      }
    }
  }
}

TEST_CASE("hyperboloid point validation") {
  const Curvature c(1.0);
  CHECK_THROWS_AS(HyperboloidPoint(vec({-1.0, 0.0}), c), DomainError);
  CHECK_THROWS_AS(HyperboloidPoint(vec({2.0, 0.0}), c), DomainError);
  // Rounding-level drift is re-projected onto the sheet.
  const HyperboloidPoint healed(vec({std::sqrt(2.0) + 1e-8, 1.0}), c);
  CHECK(std::abs(minkowski_inner(healed.coords(), healed.coords()) + 1.0) <= 1e-12);
}
