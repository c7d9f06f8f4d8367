#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace typoesl {

/// The 20 structural error types, ordered by corpus frequency rank.
enum class ErrorType : int {
  TV, RT, MD, FV, W, MT, UD, UT, MA, AGV,
  FN, RA, AGN, RD, DJ, DN, DY, UA, MC, RC
};

inline constexpr std::size_t kNumErrorTypes = 20;

using ErrorVector = Eigen::Matrix<double, kNumErrorTypes, 1>;

struct ErrorTypeInfo {
  ErrorType type;
  std::string_view code;
  std::string_view name;
};

inline constexpr std::array<ErrorTypeInfo, kNumErrorTypes> kErrorTypes{{
    {ErrorType::TV, "TV", "Verb Tense"},
    {ErrorType::RT, "RT", "Replace Preposition"},
    {ErrorType::MD, "MD", "Missing Determiner"},
    {ErrorType::FV, "FV", "Wrong Verb Form"},
    {ErrorType::W, "W", "Word Order"},
    {ErrorType::MT, "MT", "Missing Preposition"},
    {ErrorType::UD, "UD", "Unnecessary Determiner"},
    {ErrorType::UT, "UT", "Unnecessary Preposition"},
    {ErrorType::MA, "MA", "Missing Pronoun"},
    {ErrorType::AGV, "AGV", "Verb Agreement"},
    {ErrorType::FN, "FN", "Wrong Form Noun"},
    {ErrorType::RA, "RA", "Replace Pronoun"},
    {ErrorType::AGN, "AGN", "Noun Agreement"},
    {ErrorType::RD, "RD", "Replace Determiner"},
    {ErrorType::DJ, "DJ", "Wrongly Derived Adjective"},
    {ErrorType::DN, "DN", "Wrongly Derived Noun"},
    {ErrorType::DY, "DY", "Wrongly Derived Adverb"},
    {ErrorType::UA, "UA", "Unnecessary Pronoun"},
    {ErrorType::MC, "MC", "Missing Conjunction"},
    {ErrorType::RC, "RC", "Replace Conjunction"},
}};

constexpr std::size_t index_of(ErrorType e) { return static_cast<std::size_t>(e); }
constexpr ErrorType error_type_at(std::size_t i) { return static_cast<ErrorType>(i); }
constexpr std::string_view code_of(ErrorType e) { return kErrorTypes[index_of(e)].code; }
constexpr std::string_view name_of(ErrorType e) { return kErrorTypes[index_of(e)].name; }

std::optional<ErrorType> parse_error_code(std::string_view code);

/// Relative frequencies over the 20 error types. Always nonnegative and
/// summing to one within 1e-9; the constructor enforces it.
class ErrorDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  explicit ErrorDistribution(const ErrorVector& fractions);

  /// Normalizes nonnegative weights. Throws EmptySampleError when they sum to zero.
  static ErrorDistribution normalized(const ErrorVector& weights);
  static ErrorDistribution uniform();

  double operator[](ErrorType e) const { return fractions_(static_cast<Eigen::Index>(index_of(e))); }
  const ErrorVector& values() const { return fractions_; }

  friend bool operator==(const ErrorDistribution& a, const ErrorDistribution& b) {
    return a.fractions_ == b.fractions_;
  }

 private:
  ErrorVector fractions_;
};

}  // namespace typoesl
