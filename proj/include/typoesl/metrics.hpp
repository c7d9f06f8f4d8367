#pragma once

#include "typoesl/errors.hpp"

#include <Eigen/Core>

#include <cmath>

namespace typoesl {

/// Cosine similarity of two vectors. Throws DomainError if either is zero.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) {
    throw DomainError("cosine similarity is undefined for a zero vector");
  }
  return a.dot(b) / (na * nb);
}

/// D_KL(truth || pred) with the 0 ln 0 = 0 convention. Throws DomainError when
/// pred vanishes where truth has mass.
template <typename DerivedT, typename DerivedP>
typename DerivedT::Scalar kl_divergence(const Eigen::MatrixBase<DerivedT>& truth,
                                        const Eigen::MatrixBase<DerivedP>& pred) {
  using Scalar = typename DerivedT::Scalar;
  Scalar total(0);
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    const Scalar y = truth(i);
    if (y == Scalar(0)) continue;
    const Scalar q = pred(i);
    if (!(q > Scalar(0))) throw DomainError("prediction is zero where the truth has mass");
    total += y * std::log(y / q);
  }
  // Rounding can leave a tiny negative residue for near-identical inputs.
  return total < Scalar(0) ? Scalar(0) : total;
}

}  // namespace typoesl
