#pragma once

#include "typoesl/errors.hpp"

#include <Eigen/Core>
#include <Eigen/SVD>

namespace typoesl {

struct LeastSquaresOptions {
  bool fit_intercept = true;
  /// Ridge penalty on the weights (never on the intercept). 0 gives plain OLS.
  double ridge = 0.0;
  /// Singular values below rcond * sigma_max are treated as zero.
  double rcond = 1e-10;
};

/// Linear map for one or more targets sharing a design matrix:
/// prediction = x^T * weights + intercepts.
template <typename Scalar>
struct LeastSquaresFit {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;      // d x m
  Vector intercepts;   // m
  Eigen::Index rank = 0;

  template <typename Derived>
  Vector predict(const Eigen::MatrixBase<Derived>& x) const {
    return weights.transpose() * x + intercepts;
  }
};

/// Minimum-norm least squares via the SVD pseudoinverse. With an intercept the
/// columns of X and Y are centered first, so the intercept is unpenalized and
/// the weights are the minimum-norm solution of the centered problem.
template <typename DerivedX, typename DerivedY>
LeastSquaresFit<typename DerivedX::Scalar> fit_least_squares(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y,
    const LeastSquaresOptions& options = {}) {
  using Scalar = typename DerivedX::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (Y.rows() != n) throw DataError("design matrix and targets disagree on the number of rows");
  if (n < 1 || (options.fit_intercept && n < 2)) {
    throw InsufficientDataError("least squares needs at least two rows (one without intercept)");
  }
  if (options.ridge < 0.0) throw ConfigError("ridge penalty must be nonnegative");

  Matrix Xc = X;
  Matrix Yc = Y;
  RowVector x_mean = RowVector::Zero(d);
  RowVector y_mean = RowVector::Zero(Y.cols());
  if (options.fit_intercept) {
    x_mean = Xc.colwise().mean();
    y_mean = Yc.colwise().mean();
    Xc.rowwise() -= x_mean;
    Yc.rowwise() -= y_mean;
  }

  LeastSquaresFit<Scalar> fit;
  fit.weights = Matrix::Zero(d, Y.cols());
  if (d > 0) {
    Eigen::JacobiSVD<Matrix> svd(Xc, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const Scalar s_max = s.size() > 0 ? s(0) : Scalar(0);
    const Scalar cutoff = Scalar(options.rcond) * s_max;
    Vector gain = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s(i) > cutoff && s(i) > Scalar(0)) {
        gain(i) = s(i) / (s(i) * s(i) + Scalar(options.ridge));
        ++fit.rank;
      }
    }
    fit.weights = svd.matrixV() * gain.asDiagonal() * (svd.matrixU().transpose() * Yc);
  }
  fit.intercepts = (y_mean - x_mean * fit.weights).transpose();
  return fit;
}

}  // namespace typoesl
