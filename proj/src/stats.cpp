#include "typoesl/stats.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/util.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace typoesl {

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    total += t * t * t - t;
    i = j;
  }
  return total;
}

namespace {

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_q requires a > 0");
  if (x <= 0.0) return 1.0;
  if (x < a + 1.0) return std::clamp(1.0 - gamma_p_series(a, x), 0.0, 1.0);
  return std::clamp(gamma_q_fraction(a, x), 0.0, 1.0);
}

double chi_square_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw InsufficientDataError("Kruskal-Wallis needs at least two groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw InsufficientDataError("Kruskal-Wallis group is empty");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const std::size_t n = pooled.size();
  if (n < 3) throw InsufficientDataError("Kruskal-Wallis needs at least three samples");

  const auto ranks = midranks(pooled);
  const double nd = static_cast<double>(n);
  const double correction = 1.0 - tie_term(pooled) / (nd * nd * nd - nd);
  if (correction <= 0.0) return {0.0, 1.0, n};

  double between = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    between += rank_sum * rank_sum / static_cast<double>(g.size());
    offset += g.size();
  }
  double h = (12.0 / (nd * (nd + 1.0)) * between - 3.0 * (nd + 1.0)) / correction;
  if (h < 0.0) h = 0.0;  // rounding
  const double p = chi_square_sf(h, static_cast<double>(groups.size() - 1));
  return {h, p, n};
}

TestResult kruskal_wallis(const GroupedSamples& samples) {
  std::vector<std::vector<double>> groups;
  groups.reserve(samples.size());
  for (const auto& [_, g] : samples) groups.push_back(g);
  return kruskal_wallis(groups);
}

TestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InsufficientDataError("Mann-Whitney needs two nonempty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  const double rank_sum_a = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  const double u = rank_sum_a - na * (na + 1.0) / 2.0;

  const double mean = na * nb / 2.0;
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0)));
  TestResult out{u, 1.0, a.size() + b.size()};
  if (!(variance > 0.0)) return out;
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(variance);
  out.p_value = std::min(1.0, 2.0 * normal_sf(z));
  return out;
}

std::string_view band_marker(SignificanceBand band) {
  switch (band) {
    case SignificanceBand::Below001: return "**";
    case SignificanceBand::Below01: return "*";
    default: return "";
  }
}

SignificanceBand band_of(double p) {
  if (p < 0.001) return SignificanceBand::Below001;
  if (p < 0.01) return SignificanceBand::Below01;
  return SignificanceBand::None;
}

std::vector<VarianceRow> variance_report(const Corpus& corpus, double mw_alpha) {
  // Per language, the fraction vectors of documents with at least one error.
  std::map<std::string, std::vector<ErrorVector>, std::less<>> fractions;
  for (const auto& lang : corpus.languages()) {
    std::vector<ErrorVector> rows;
    for (const auto* d : corpus.documents(lang)) {
      if (d->total_errors() > 0) rows.push_back(doc_error_fractions(*d).values());
    }
    if (!rows.empty()) fractions.emplace(lang, std::move(rows));
  }
  if (fractions.size() < 2) {
    throw InsufficientDataError("variance analysis needs at least two languages with errors");
  }

  const auto totals = corpus.type_totals();
  std::vector<VarianceRow> out;
  for (const auto& info : kErrorTypes) {
    const auto e = static_cast<Eigen::Index>(index_of(info.type));
    std::vector<std::vector<double>> groups;
    for (const auto& [_, rows] : fractions) {
      std::vector<double> g;
      g.reserve(rows.size());
      for (const auto& r : rows) g.push_back(r(e));
      groups.push_back(std::move(g));
    }
    VarianceRow row{info.type, totals[index_of(info.type)], {}, SignificanceBand::None, 0, 0};
    row.kruskal_wallis = kruskal_wallis(groups);
    row.band = band_of(row.kruskal_wallis.p_value);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        ++row.total_pairs;
        if (mann_whitney(groups[i], groups[j]).p_value < mw_alpha) ++row.mw_significant_pairs;
      }
    }
    out.push_back(row);
  }
  return out;
}

void write_variance_tsv(std::ostream& out, const std::vector<VarianceRow>& rows) {
  out << "code\tname\tcount\tkw_h\tkw_p\tkw_band\tmw_pairs\ttotal_pairs\n";
  for (const auto& r : rows) {
    char p[32];
    std::snprintf(p, sizeof p, "%.6g", r.kruskal_wallis.p_value);
    out << code_of(r.type) << '\t' << name_of(r.type) << '\t' << r.count << '\t'
        << format_double(r.kruskal_wallis.statistic, 4) << '\t' << p << '\t'
        << band_marker(r.band) << '\t' << r.mw_significant_pairs << '\t' << r.total_pairs << '\n';
  }
}

}  // namespace typoesl
