#include "doctest.h"

#include "oracles.hpp"
#include "typoesl/least_squares.hpp"
#include "typoesl/rng.hpp"

using namespace typoesl;

namespace {

LeastSquaresOptions no_intercept() {
  LeastSquaresOptions o;
  o.fit_intercept = false;
  return o;
}

oracle::Matrix to_rows(const Eigen::MatrixXd& m) {
  oracle::Matrix rows(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  return rows;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double rel_err(const Eigen::VectorXd& got, const std::vector<double>& want) {
  const Eigen::Map<const Eigen::VectorXd> w(want.data(), static_cast<Eigen::Index>(want.size()));
  return (got - w).norm() / std::max(1.0, w.norm());
}

Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("hand examples") {
  const auto square = fit_least_squares(Eigen::Matrix2d::Identity(), Eigen::Vector2d(3, 5), no_intercept());
  CHECK(square.weights(0, 0) == doctest::Approx(3.0));
  CHECK(square.weights(1, 0) == doctest::Approx(5.0));

  const auto row = fit_least_squares(Eigen::RowVector2d(1, 1), Eigen::Matrix<double, 1, 1>(2.0), no_intercept());
  CHECK(row.weights(0, 0) == doctest::Approx(1.0));
  CHECK(row.weights(1, 0) == doctest::Approx(1.0));
  CHECK(row.rank == 1);

  const auto mean = fit_least_squares(Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 3));
  CHECK(mean.predict(Eigen::Matrix<double, 1, 1>(1.0))(0) == doctest::Approx(2.0));
  CHECK(mean.predict(Eigen::Matrix<double, 1, 1>(-7.0))(0) == doctest::Approx(2.0));
}

TEST_CASE("preconditions") {
  CHECK_THROWS_AS(fit_least_squares(Eigen::RowVector2d(1, 1), Eigen::Matrix<double, 1, 1>(2.0)),
                  InsufficientDataError);
  LeastSquaresOptions bad;
  bad.ridge = -1.0;
  CHECK_THROWS_AS(fit_least_squares(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 1), bad), ConfigError);
  CHECK_THROWS_AS(fit_least_squares(Eigen::Matrix2d::Identity(), Eigen::Vector3d(1, 1, 1)), DataError);
}

TEST_CASE("square systems match a direct solve") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(12));
    const Eigen::MatrixXd X = random_matrix(rng, n, n);
    const Eigen::VectorXd y = random_matrix(rng, n, 1);
    const auto fit = fit_least_squares(X, y, no_intercept());
    CHECK(rel_err(fit.weights.col(0), oracle::gauss_solve(to_rows(X), to_vec(y))) < 1e-8);
  }
}

TEST_CASE("overdetermined systems match the normal equations") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index n = d + 1 + static_cast<Eigen::Index>(rng.below(20));
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::VectorXd y = random_matrix(rng, n, 1);
    const auto fit = fit_least_squares(X, y, no_intercept());
    CHECK(rel_err(fit.weights.col(0), oracle::normal_equations(to_rows(X), to_vec(y))) < 1e-6);

    // With an intercept the oracle gets an explicit column of ones.
    Eigen::MatrixXd Xa(n, d + 1);
    Xa << X, Eigen::VectorXd::Ones(n);
    const auto aug = oracle::normal_equations(to_rows(Xa), to_vec(y));
    const auto with_b = fit_least_squares(X, y);
    CHECK(rel_err(with_b.weights.col(0), std::vector<double>(aug.begin(), aug.end() - 1)) < 1e-6);
    CHECK(with_b.intercepts(0) == doctest::Approx(aug.back()).epsilon(1e-6));
  }
}

TEST_CASE("underdetermined systems give the minimum-norm interpolant") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(10));
    const Eigen::Index d = n + 1 + static_cast<Eigen::Index>(rng.below(40));
    const Eigen::MatrixXd X = random_matrix(rng, n, d);
    const Eigen::MatrixXd Y = random_matrix(rng, n, 3);
    const auto fit = fit_least_squares(X, Y, no_intercept());
    CHECK(fit.rank == n);
    for (Eigen::Index k = 0; k < 3; ++k) {
      CHECK(rel_err(fit.weights.col(k), oracle::min_norm_underdetermined(to_rows(X), to_vec(Y.col(k)))) < 1e-8);
    }
    CHECK((X * fit.weights - Y).norm() < 1e-8);
  }
}

TEST_CASE("rank-deficient designs drop null directions") {
  Eigen::MatrixXd X(3, 3);
  X << 1, 1, 0, 2, 2, 0, 0, 0, 1;  // first two columns identical
  const auto fit = fit_least_squares(X, Eigen::Vector3d(2, 4, 1), no_intercept());
  CHECK(fit.rank == 2);
  CHECK(fit.weights(0, 0) == doctest::Approx(1.0));
  CHECK(fit.weights(1, 0) == doctest::Approx(1.0));
  CHECK(fit.weights(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("ridge shrinks toward zero and matches the closed form") {
  Rng rng(4);
  const Eigen::MatrixXd X = random_matrix(rng, 8, 3);
  const Eigen::VectorXd y = random_matrix(rng, 8, 1);
  LeastSquaresOptions o = no_intercept();
  o.ridge = 0.7;
  const auto fit = fit_least_squares(X, y, o);
  const Eigen::VectorXd closed =
      (X.transpose() * X + 0.7 * Eigen::MatrixXd::Identity(3, 3)).ldlt().solve(X.transpose() * y);
  CHECK((fit.weights.col(0) - closed).norm() < 1e-10);
  CHECK(fit.weights.norm() < fit_least_squares(X, y, no_intercept()).weights.norm());
}

TEST_CASE("templated on the scalar") {
  Eigen::Matrix2f X = Eigen::Matrix2f::Identity();
  const auto fit = fit_least_squares(X, Eigen::Vector2f(3, 5), no_intercept());
  static_assert(std::is_same_v<decltype(fit.weights)::Scalar, float>);
  CHECK(fit.weights(1, 0) == doctest::Approx(5.0f));
}
