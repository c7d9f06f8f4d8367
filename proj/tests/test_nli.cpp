#include "doctest.h"

#include "oracles.hpp"
#include "typoesl/conllu.hpp"
#include "typoesl/errors.hpp"
#include "typoesl/nli.hpp"
#include "typoesl/rng.hpp"

#include <set>
#include <sstream>

using namespace typoesl;

namespace {

ConlluDocument parse(const std::string& text) {
  std::istringstream in(text);
  return parse_conllu(in, "mem.conllu");
}

MorphoSyntacticProfile profile(std::string id, std::string lang, std::map<std::string, double, std::less<>> f) {
  return {std::move(id), std::move(lang), std::move(f)};
}

// Three languages whose documents sit around distinct centers.
std::vector<MorphoSyntacticProfile> clustered(Rng& rng, int per_lang, double spread) {
  const std::vector<std::string> langs{"fre", "jpn", "kor"};
  std::vector<MorphoSyntacticProfile> out;
  for (std::size_t l = 0; l < langs.size(); ++l) {
    for (int i = 0; i < per_lang; ++i) {
      std::map<std::string, double, std::less<>> f;
      for (std::size_t k = 0; k < 3; ++k) {
        f["pos:F" + std::to_string(k)] = (k == l ? 1.0 : 0.2) + spread * rng.normal();
      }
      out.push_back(profile(langs[l] + std::to_string(i), langs[l], f));
    }
  }
  return out;
}

double family_sum(const MorphoSyntacticProfile& p, std::string_view prefix) {
  double s = 0;
  for (const auto& [k, v] : p.features)
    if (k.rfind(prefix, 0) == 0) s += v;
  return s;
}

}  // namespace

TEST_CASE("CoNLL-U parsing") {
  const auto doc = parse(
      "# native_language = jpn\n"
      "# text = I like cats\n"
      "1\tI\tI\tPRON\tPRP\t_\t2\tnsubj\t_\t_\n"
      "2-3\tlike's\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "2\tlike\tlike\tVERB\tVBP\t_\t0\troot\t_\t_\n"
      "2.1\tx\t_\tX\t_\t_\t_\t_\t_\t_\n"
      "3\tcats\tcat\tNOUN\tNNS\t_\t2\tobj\t_\t_\n"
      "\n");
  CHECK(doc.native_language == "jpn");
  REQUIRE(doc.sentences.size() == 1);
  CHECK(doc.sentences[0].size() == 3);

  try {
    parse("1\tI\tI\tPRON\t_\t_\t0\troot\t_\t_\n2\tx\tx\t_\t_\t_\t1\tdep\t_\t_\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("1\tI\tI\tPRON\t_\t_\t0\troot\t_\n"), ParseError);
  CHECK_THROWS_AS(parse("1\tI\tI\tPRON\t_\t_\t5\tnsubj\t_\t_\n"), ParseError);
  CHECK_THROWS_AS(parse("1\tI\tI\tPRON\t_\t_\t0\troot\t_\t_\n3\tI\tI\tPRON\t_\t_\t1\tdep\t_\t_\n"), ParseError);
}

TEST_CASE("profile extraction") {
  const auto nouns = parse(
      "1\ta\ta\tNOUN\t_\t_\t0\troot\t_\t_\n2\tb\tb\tNOUN\t_\t_\t1\tcompound\t_\t_\n\n"
      "1\tc\tc\tNOUN\t_\t_\t0\troot\t_\t_\n2\td\td\tNOUN\t_\t_\t1\tcompound\t_\t_\n");
  const auto p = extract_profile(nouns, "d1", "jpn");
  CHECK(p.features.at("pos:NOUN") == 1.0);
  CHECK(family_sum(p, "pos:") == doctest::Approx(1.0));

  const auto arc = extract_profile(parse("1\tcats\tcat\tNOUN\t_\t_\t2\tobj\t_\t_\n2\teat\teat\tVERB\t_\t_\t0\troot\t_\t_\n"),
                                   "d2", "jpn");
  CHECK(arc.features.at("arc:VERB>NOUN:obj") == 1.0);
  CHECK(arc.features.at("dep:obj") == doctest::Approx(0.5));
  CHECK(arc.features.at("dep:root") == doctest::Approx(0.5));
  CHECK(family_sum(arc, "arc:") == doctest::Approx(1.0));
  CHECK(family_sum(arc, "dep:") == doctest::Approx(1.0));

  CHECK_THROWS_AS(extract_profile(ConlluDocument{}, "empty", "jpn"), DataError);

  std::ostringstream out;
  const std::vector<MorphoSyntacticProfile> both{p, arc};
  write_profiles(out, both);
  std::istringstream in(out.str());
  const auto back = read_profiles(in, "mem");
  REQUIRE(back.size() == 2);
  CHECK(back[1].features == arc.features);
}

TEST_CASE("log-likelihood gradient matches finite differences") {
  Rng rng(31);
  const Eigen::Index n = 12, d = 4, c = 3;
  Eigen::MatrixXd X(n, d);
  std::vector<int> y(n);
  oracle::Matrix rows(n, std::vector<double>(d));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < d; ++k) rows[i][k] = X(i, k) = rng.normal();
    y[i] = static_cast<int>(rng.below(c));
  }
  for (int point = 0; point < 5; ++point) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, c);
    if (point > 0)
      for (auto& v : W.reshaped()) v = rng.normal();
    Eigen::MatrixXd grad;
    const double lambda = 0.3;
    const double f = regularized_log_likelihood(X, y, lambda, W, &grad);
    std::vector<double> w(W.data(), W.data() + W.size());
    CHECK(f == doctest::Approx(oracle::softmax_log_likelihood(rows, y, c, lambda, w)).epsilon(1e-12));
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& v) { return oracle::softmax_log_likelihood(rows, y, c, lambda, v); }, w);
    const Eigen::Map<const Eigen::VectorXd> fdv(fd.data(), static_cast<Eigen::Index>(fd.size()));
    const Eigen::Map<const Eigen::VectorXd> g(grad.data(), grad.size());
    CHECK((g - fdv).norm() / std::max(1.0, fdv.norm()) < 1e-4);
  }
}

TEST_CASE("classifier training") {
  Rng rng(41);
  SUBCASE("separable data is fit perfectly") {
    std::vector<MorphoSyntacticProfile> ps;
    for (int i = 0; i < 10; ++i) {
      ps.push_back(profile("a" + std::to_string(i), "aaa", {{"pos:X", 1.0 + 0.1 * rng.uniform()}}));
      ps.push_back(profile("b" + std::to_string(i), "bbb", {{"pos:Y", 1.0 + 0.1 * rng.uniform()}}));
    }
    ClassifierConfig cfg;
    cfg.lambda = 0.1;
    const auto model = train_classifier(ps, cfg);
    int correct = 0;
    for (const auto& p : ps) {
      const auto post = model.posterior(p);
      CHECK(post.sum() == doctest::Approx(1.0).epsilon(1e-9));
      Eigen::Index best;
      post.maxCoeff(&best);
      if (model.classes()[static_cast<std::size_t>(best)] == p.native_language) ++correct;
    }
    CHECK(correct == 20);
    CHECK(model.trace().gradient_norm <= 1e-5);
    const auto& obj = model.trace().objective;
    for (std::size_t i = 1; i < obj.size(); ++i) CHECK(obj[i] >= obj[i - 1] - 1e-12);
  }
  SUBCASE("indistinguishable classes get equal posteriors") {
    const auto same = profile("x", "", {{"pos:NOUN", 0.6}, {"pos:VERB", 0.4}});
    std::vector<MorphoSyntacticProfile> ps;
    for (const char* lang : {"aaa", "bbb"}) {
      for (int i = 0; i < 2; ++i) {
        auto p = same;
        p.native_language = lang;
        p.doc_id = std::string(lang) + std::to_string(i);
        ps.push_back(p);
      }
    }
    const auto post = train_classifier(ps).posterior(same);
    CHECK(post(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(post(1) == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("preconditions") {
    std::vector<MorphoSyntacticProfile> ps{profile("a", "aaa", {{"pos:X", 1}}), profile("b", "aaa", {{"pos:X", 1}})};
    CHECK_THROWS_AS(train_classifier(ps), InsufficientDataError);
    ps.push_back(profile("c", "bbb", {{"pos:Y", 1}}));
    CHECK_THROWS_AS(train_classifier(ps), InsufficientDataError);
  }
  SUBCASE("non-convergence reports the gradient norm") {
    const auto ps = clustered(rng, 5, 0.3);
    ClassifierConfig cfg;
    cfg.max_iterations = 1;
    cfg.lambda = 1e-3;
    try {
      train_classifier(ps, cfg);
      FAIL("expected OptimizationError");
    } catch (const OptimizationError& e) {
      CHECK(e.gradient_norm() > 1e-5);
    }
  }
  SUBCASE("posteriors sum to one on random data") {
    const auto ps = clustered(rng, 8, 0.5);
    const auto model = train_classifier(ps);
    for (const auto& p : ps) CHECK(model.posterior(p).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("confusion from posteriors") {
  const std::vector<std::string> langs{"aaa", "bbb", "ccc"};
  const std::vector<int> labels{0, 0, 1, 2};
  Eigen::MatrixXd post(4, 3);
  post << 0.6, 0.3, 0.1,
          0.2, 0.4, 0.4,
          0.5, 0.5, 0.0,
          0.1, 0.7, 0.2;
  const auto s = confusion_from_posteriors(langs, labels, post);
  CHECK(s("aaa", "aaa") == 1.0);
  CHECK(s("aaa", "bbb") == doctest::Approx(0.35));
  CHECK(s("aaa", "ccc") == doctest::Approx(0.25));
  CHECK(s("bbb", "aaa") == doctest::Approx(0.5));
  CHECK(s("ccc", "bbb") == doctest::Approx(0.7));

  const auto sym = symmetrize(s);
  CHECK(sym.is_symmetric());
  CHECK(sym("aaa", "bbb") == doctest::Approx(0.425));
  CHECK(symmetrize(sym).values() == sym.values());

  Eigen::MatrixXd confident = Eigen::MatrixXd::Zero(4, 3);
  for (std::size_t i = 0; i < labels.size(); ++i) confident(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  const auto id = confusion_from_posteriors(langs, labels, confident);
  CHECK(id.values() == Eigen::MatrixXd::Identity(3, 3));

  Rng rng(5);
  Eigen::MatrixXd r(5, 5);
  for (auto& v : r.reshaped()) v = rng.uniform();
  const auto rs = symmetrize(SimilarityMatrix({"a", "b", "c", "d", "e"}, r));
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(rs.values()(i, j) == doctest::Approx((r(i, j) + r(j, i)) / 2));

  std::ostringstream out;
  sym.write_tsv(out);
  CHECK(out.str().rfind("language\taaa\tbbb\tccc\naaa\t1", 0) == 0);
}

TEST_CASE("cross-validated confusion") {
  Rng rng(43);
  const auto ps = clustered(rng, 10, 0.2);
  ConfusionOptions opts;
  opts.folds = 5;
  const auto res = confusion_similarity(ps, opts);
  REQUIRE(res.fold_of.size() == ps.size());
  // Audit: no document is in the training set of the fold that scored it.
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& train = res.training_indices[static_cast<std::size_t>(res.fold_of[i])];
    CHECK(std::find(train.begin(), train.end(), i) == train.end());
  }
  for (std::size_t f = 0; f < res.training_indices.size(); ++f) {
    std::set<std::size_t> train(res.training_indices[f].begin(), res.training_indices[f].end());
    for (std::size_t i = 0; i < ps.size(); ++i) CHECK((train.count(i) == 1) == (res.fold_of[i] != static_cast<int>(f)));
  }
  for (Eigen::Index i = 0; i < res.posteriors.rows(); ++i)
    CHECK(res.posteriors.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.accuracy > 0.9);
  const auto s = symmetrize(res.raw);
  CHECK(s.is_symmetric());
  CHECK(s.values().diagonal() == Eigen::VectorXd::Ones(3));
  CHECK(s.values().minCoeff() >= 0.0);
  CHECK(s.values().maxCoeff() <= 1.0);

  const auto again = confusion_similarity(ps, opts);
  CHECK(again.posteriors == res.posteriors);

  ConfusionOptions uniform = opts;
  uniform.force_uniform = true;
  const auto u = confusion_similarity(ps, uniform);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(u.raw.values()(i, j) == doctest::Approx(i == j ? 1.0 : 1.0 / 3));

  ConfusionOptions too_many = opts;
  too_many.folds = 11;
  CHECK_THROWS_AS(confusion_similarity(ps, too_many), InsufficientDataError);
}

TEST_CASE("typology projection") {
  std::map<std::string, Assignments, std::less<>> langs{
      {"fre", {{"1A", "x"}}}, {"ger", {{"1A", "y"}, {"2A", "y"}}}, {"jpn", {{"1A", "y"}, {"2A", "x"}}}};
  const TypologyDatabase db(
      {{"1A", "One", "Word Order", {"x", "y"}}, {"2A", "Two", "Word Order", {"x", "y"}}}, langs);
  Eigen::MatrixXd v(3, 3);
  v << 1.0, 0.3, 0.6,
       0.3, 1.0, 0.3,
       0.6, 0.3, 1.0;
  const SimilarityMatrix s({"fre", "ger", "jpn"}, v);
  const auto p = project_typology("jpn", s, db);
  CHECK(p.source == "fre");
  CHECK(p.assignments == langs.at("fre"));
  // ger ties between fre and jpn: the smaller code wins.
  CHECK(project_typology("ger", s, db).source == "fre");

  const auto acc = projection_accuracy(p.assignments, langs.at("jpn"));
  CHECK(acc.compared == 1);
  CHECK(acc.matched == 0);
  const auto acc2 = projection_accuracy(langs.at("ger"), langs.at("jpn"));
  CHECK(acc2.accuracy() == doctest::Approx(0.5));

  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd r(3, 3);
    for (auto& x : r.reshaped()) x = rng.uniform();
    const auto sym = symmetrize(SimilarityMatrix({"fre", "ger", "jpn"}, r));
    for (const char* target : {"fre", "ger", "jpn"}) {
      const auto proj = project_typology(target, sym, db);
      CHECK(proj.source != target);
      for (const auto& [fid, value] : proj.assignments) CHECK(db.value(proj.source, fid) == value);
    }
  }
}
