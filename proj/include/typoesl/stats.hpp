#pragma once

#include "typoesl/corpus.hpp"
#include "typoesl/error_types.hpp"

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace typoesl {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// language code -> one sample per document.
using GroupedSamples = std::map<std::string, std::vector<double>, std::less<>>;

/// Mid-ranks (1-based, ties share the mean of their positions).
std::vector<double> midranks(std::span<const double> values);
/// Sum over tie groups of t^3 - t.
double tie_term(std::span<const double> values);

/// Upper tail of the chi-square distribution, Q(dof/2, x/2).
double chi_square_sf(double x, double dof);
/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
double normal_sf(double z);

/// H on mid-ranks with tie correction; p from chi-square with groups-1 dof.
/// All-identical samples give H = 0, p = 1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);
TestResult kruskal_wallis(const GroupedSamples& samples);

/// U(a, b) = number of pairs with a > b, ties counting one half. Two-sided
/// p from the tie-corrected normal approximation with continuity correction.
TestResult mann_whitney(std::span<const double> a, std::span<const double> b);

enum class SignificanceBand { None, Below01, Below001 };

/// "", "*" or "**".
std::string_view band_marker(SignificanceBand band);
SignificanceBand band_of(double p);

struct VarianceRow {
  ErrorType type;
  std::int64_t count = 0;
  TestResult kruskal_wallis;
  SignificanceBand band = SignificanceBand::None;
  int mw_significant_pairs = 0;
  int total_pairs = 0;
};

/// Per error type: KW across languages and pairwise MW at p < mw_alpha, using
/// one fraction per document. Documents without errors are left out.
/// Throws InsufficientDataError with fewer than two usable languages.
std::vector<VarianceRow> variance_report(const Corpus& corpus, double mw_alpha = 0.01);

/// Columns: code, name, count, kw_h, kw_p, kw_band, mw_pairs, total_pairs.
void write_variance_tsv(std::ostream& out, const std::vector<VarianceRow>& rows);

}  // namespace typoesl
