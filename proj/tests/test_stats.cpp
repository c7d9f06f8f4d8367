#include "doctest.h"

#include "oracles.hpp"
#include "typoesl/errors.hpp"
#include "typoesl/rng.hpp"
#include "typoesl/stats.hpp"

#include <sstream>

using namespace typoesl;

TEST_CASE("kruskal_wallis hand examples") {

  CHECK(std::abs(kruskal_wallis({{1, 2, 3}, {4, 5, 6}}).statistic - 3.857) <= 0.001);
  CHECK(kruskal_wallis({{1, 4}, {2, 3}}).statistic == doctest::Approx(0.0));
  const auto same = kruskal_wallis({{0.2, 0.2}, {0.2, 0.2, 0.2}});
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  // Frozen from the exhaustive oracle: 2 of the 70 labelings are as extreme.
  CHECK(oracle::kw_exact_p({{1, 2, 3, 4}, {5, 6, 7, 8}}) == doctest::Approx(2.0 / 70.0));
  // H = 16/3 on one degree of freedom.
  CHECK(kruskal_wallis({{1, 2, 3, 4}, {5, 6, 7, 8}}).p_value == doctest::Approx(0.020921).epsilon(1e-4));
}

TEST_CASE("kruskal_wallis preconditions") {
  CHECK_THROWS_AS(kruskal_wallis({{1, 2, 3}}), InsufficientDataError);
  CHECK_THROWS_AS(kruskal_wallis(std::vector<std::vector<double>>{{1, 2}, {}}), InsufficientDataError);
  CHECK_THROWS_AS(kruskal_wallis({{1}, {2}}), InsufficientDataError);
  GroupedSamples g{{"fre", {0.1, 0.3}}, {"jpn", {0.2, 0.5, 0.6}}};
  CHECK(kruskal_wallis(g).n == 5);
}

TEST_CASE("kruskal_wallis agrees with the reference statistic including ties") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng.below(4));
    for (auto& g : groups) {
      g.resize(2 + rng.below(5));
      for (auto& x : g) x = static_cast<double>(rng.below(5));
    }
    const double ref = oracle::kw_h(groups);
    const auto got = kruskal_wallis(groups);
    CHECK(got.statistic == doctest::Approx(ref).epsilon(1e-9));
    CHECK(got.p_value >= 0.0);
    CHECK(got.p_value <= 1.0);
  }
}

TEST_CASE("kruskal_wallis is invariant under monotone transforms") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> groups(3), mapped(3);
    for (std::size_t k = 0; k < 3; ++k) {
      for (int i = 0; i < 6; ++i) {
        const double x = rng.uniform();
        groups[k].push_back(x);
        mapped[k].push_back(std::exp(3 * x) - 7);
      }
    }
    CHECK(kruskal_wallis(groups).statistic == doctest::Approx(kruskal_wallis(mapped).statistic));
  }
}

TEST_CASE("mann_whitney hand examples and symmetry") {
  const std::vector<double> a{1, 2}, b{3, 4}, c{1, 3}, d{2, 4};
  CHECK(mann_whitney(a, b).statistic == 0.0);
  CHECK(mann_whitney(c, d).statistic == 1.0);
  const std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK(mann_whitney(flat, flat).p_value == 1.0);
  CHECK_THROWS_AS(mann_whitney(std::vector<double>{}, a), InsufficientDataError);

  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.below(10)), y(1 + rng.below(10));
    for (auto& v : x) v = static_cast<double>(rng.below(6));
    for (auto& v : y) v = static_cast<double>(rng.below(6));
    const double uxy = mann_whitney(x, y).statistic;
    CHECK(uxy == oracle::mw_u(x, y));
    CHECK(uxy + mann_whitney(y, x).statistic == doctest::Approx(static_cast<double>(x.size() * y.size())));
    CHECK(mann_whitney(x, y).p_value == doctest::Approx(mann_whitney(y, x).p_value));
  }
}

// The continuity correction alone moves the MW p-value by up to about 0.03
// at 10 + 10, so the agreement bound is checked from 20 per group.
TEST_CASE("two-group KW and MW p-values agree without ties") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(20 + rng.below(30)), y(20 + rng.below(30));
    const double shift = rng.uniform();
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal() + shift;
    const double kw = kruskal_wallis(std::vector<std::vector<double>>{x, y}).p_value;
    const double mw = mann_whitney(x, y).p_value;
    CHECK(std::abs(kw - mw) < 0.02);
  }
}

TEST_CASE("chi-square and gamma tails") {
  CHECK(chi_square_sf(0.0, 3) == 1.0);
  CHECK(chi_square_sf(2.0, 2) == doctest::Approx(std::exp(-1.0)));
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-7));
  CHECK(chi_square_sf(6.634896601021214, 1) == doctest::Approx(0.01).epsilon(1e-7));
  CHECK(chi_square_sf(22.362032494826938, 13) == doctest::Approx(0.05).epsilon(1e-7));
  CHECK(gamma_q(1.0, 0.7) == doctest::Approx(std::exp(-0.7)));
  // Q(1/2, x) = erfc(sqrt(x)) across the series/continued-fraction switch.
  for (double x : {0.01, 0.3, 1.4, 1.6, 5.0, 30.0}) {
    CHECK(gamma_q(0.5, x) == doctest::Approx(std::erfc(std::sqrt(x))).epsilon(1e-10));
  }
  CHECK(normal_sf(0.0) == 0.5);
  CHECK(normal_sf(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-8));
}

TEST_CASE("significance bands") {
  CHECK(band_of(0.0005) == SignificanceBand::Below001);
  CHECK(band_of(0.005) == SignificanceBand::Below01);
  CHECK(band_of(0.01) == SignificanceBand::None);
  CHECK(band_marker(SignificanceBand::Below001) == "**");
}

namespace {

Corpus null_corpus(std::uint64_t seed, int languages, int docs) {
  Rng rng(seed);
  std::vector<Document> out;
  for (int l = 0; l < languages; ++l) {
    for (int i = 0; i < docs; ++i) {
      Document d;
      d.doc_id = "l" + std::to_string(l) + "_" + std::to_string(i);
      d.native_language = "l" + std::to_string(l);
      d.word_count = 300;
      for (int k = 0; k < 15; ++k) d.error_counts[rng.below(kNumErrorTypes)] += 1;
      out.push_back(d);
    }
  }
  return Corpus(std::move(out));
}

}  // namespace

TEST_CASE("variance_report on a corpus with one shared distribution") {
  const auto rows = variance_report(null_corpus(21, 14, 100));
  REQUIRE(rows.size() == kNumErrorTypes);
  int strong = 0;
  for (const auto& r : rows) {
    CHECK(r.total_pairs == 91);
    if (r.band == SignificanceBand::Below001) ++strong;
  }
  CHECK(strong <= 1);
  std::ostringstream out;
  write_variance_tsv(out, rows);
  CHECK(out.str().rfind("code\tname\tcount\tkw_h\tkw_p\tkw_band\tmw_pairs\ttotal_pairs\n", 0) == 0);
}

TEST_CASE("variance_report detects a planted language effect") {
  auto docs = null_corpus(22, 3, 80).all_documents();
  for (auto& d : docs) {
    if (d.native_language == "l0") d.error_counts[index_of(ErrorType::MD)] += 10;
  }
  const auto rows = variance_report(Corpus(docs));
  const auto& md = rows[index_of(ErrorType::MD)];
  CHECK(md.band == SignificanceBand::Below001);
  CHECK(md.mw_significant_pairs == 2);
  CHECK_THROWS_AS(variance_report(null_corpus(1, 1, 10)), InsufficientDataError);
}
