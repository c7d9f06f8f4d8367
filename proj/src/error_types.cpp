#include "typoesl/error_types.hpp"

#include "typoesl/errors.hpp"

#include <cmath>

namespace typoesl {

std::optional<ErrorType> parse_error_code(std::string_view code) {
  for (const auto& info : kErrorTypes) {
    if (info.code == code) return info.type;
  }
  return std::nullopt;
}

ErrorDistribution::ErrorDistribution(const ErrorVector& fractions) : fractions_(fractions) {
  if (!fractions_.allFinite()) throw DomainError("error distribution has non-finite entries");
  if ((fractions_.array() < 0.0).any()) throw DomainError("error distribution has negative entries");
  if (std::abs(fractions_.sum() - 1.0) > kSumTolerance) {
    throw DomainError("error distribution sums to " + std::to_string(fractions_.sum()));
  }
}

ErrorDistribution ErrorDistribution::normalized(const ErrorVector& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw EmptySampleError("cannot normalize an all-zero error vector");
  return ErrorDistribution(weights / total);
}

ErrorDistribution ErrorDistribution::uniform() {
  return ErrorDistribution(ErrorVector::Constant(1.0 / kNumErrorTypes));
}

}  // namespace typoesl
