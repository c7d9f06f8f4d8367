#include "typoesl/nli.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/rng.hpp"
#include "typoesl/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace typoesl {

// ---------------------------------------------------------------------------
// Profiles

MorphoSyntacticProfile extract_profile(const ConlluDocument& doc, const std::string& doc_id,
                                       const std::string& native_language) {
  std::map<std::string, double, std::less<>> pos, dep, arc;
  std::size_t tokens = 0;
  for (const auto& sentence : doc.sentences) {
    for (const auto& t : sentence) {
      ++tokens;
      pos["pos:" + t.upos] += 1.0;
      dep["dep:" + t.deprel] += 1.0;
      if (t.head > 0) {
        const auto& head = sentence[static_cast<std::size_t>(t.head - 1)];
        arc["arc:" + head.upos + ">" + t.upos + ":" + t.deprel] += 1.0;
      }
    }
  }
  if (tokens == 0) throw DataError("empty profile: document " + doc_id + " has no tokens");

  MorphoSyntacticProfile p{doc_id, native_language, {}};
  for (auto* family : {&pos, &dep, &arc}) {
    double total = 0.0;
    for (const auto& [_, c] : *family) total += c;
    for (const auto& [name, c] : *family) p.features.emplace(name, c / total);
  }
  return p;
}

MorphoSyntacticProfile extract_profile(const std::filesystem::path& conllu_file,
                                       const std::string& native_language) {
  const auto doc = load_conllu(conllu_file);
  const std::string lang = native_language.empty() ? doc.native_language : native_language;
  if (lang.empty()) {
    throw DataError("no native language known for " + conllu_file.string());
  }
  return extract_profile(doc, conllu_file.stem().string(), lang);
}

void write_profiles(std::ostream& out, std::span<const MorphoSyntacticProfile> profiles) {
  using nlohmann::ordered_json;
  for (const auto& p : profiles) {
    ordered_json rec;
    rec["doc_id"] = p.doc_id;
    rec["native_language"] = p.native_language;
    ordered_json f = ordered_json::object();
    for (const auto& [name, v] : p.features) f[name] = v;
    rec["features"] = std::move(f);
    out << rec.dump() << '\n';
  }
}

std::vector<MorphoSyntacticProfile> read_profiles(std::istream& in, const std::string& source_name) {
  using nlohmann::json;
  std::vector<MorphoSyntacticProfile> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto rec = json::parse(line);
      MorphoSyntacticProfile p;
      p.doc_id = rec.at("doc_id").get<std::string>();
      p.native_language = rec.at("native_language").get<std::string>();
      for (const auto& [name, v] : rec.at("features").items()) p.features.emplace(name, v.get<double>());
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature space and objective

FeatureSpace::FeatureSpace(std::span<const MorphoSyntacticProfile> profiles) {
  std::set<std::string, std::less<>> names;
  for (const auto& p : profiles) {
    for (const auto& [name, _] : p.features) names.insert(name);
  }
  names_.assign(names.begin(), names.end());
  for (std::size_t i = 0; i < names_.size(); ++i) index_.emplace(names_[i], static_cast<Eigen::Index>(i));
}

Eigen::VectorXd FeatureSpace::vectorize(const MorphoSyntacticProfile& profile) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dimension());
  for (const auto& [name, v] : profile.features) {
    const auto it = index_.find(name);
    if (it != index_.end()) x(it->second) = v;
  }
  x(dimension() - 1) = 1.0;
  return x;
}

Eigen::MatrixXd FeatureSpace::design(std::span<const MorphoSyntacticProfile> profiles) const {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(profiles.size()), dimension());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = vectorize(profiles[i]).transpose();
  }
  return X;
}

namespace {

// Row-wise softmax of the logits, computed stably.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

}  // namespace

double regularized_log_likelihood(const Eigen::MatrixXd& X, std::span<const int> labels,
                                  double lambda, const Eigen::MatrixXd& W,
                                  Eigen::MatrixXd* gradient) {
  const Eigen::MatrixXd logits = X * W;  // n x C
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  const Eigen::VectorXd log_norm =
      row_max.array() + (logits.colwise() - row_max).array().exp().rowwise().sum().log();
  double ll = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    ll += logits(i, labels[static_cast<std::size_t>(i)]) - log_norm(i);
  }
  const double value = ll - 0.5 * lambda * W.squaredNorm();
  if (gradient) {
    Eigen::MatrixXd residual = -softmax_rows(logits);
    for (Eigen::Index i = 0; i < X.rows(); ++i) residual(i, labels[static_cast<std::size_t>(i)]) += 1.0;
    *gradient = X.transpose() * residual - lambda * W;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Classifier

LogLinearModel::LogLinearModel(std::vector<std::string> classes, FeatureSpace space,
                               Eigen::MatrixXd weights, double lambda, OptimizationTrace trace)
    : classes_(std::move(classes)),
      space_(std::move(space)),
      weights_(std::move(weights)),
      lambda_(lambda),
      trace_(std::move(trace)) {}

Eigen::VectorXd LogLinearModel::posterior(const MorphoSyntacticProfile& profile) const {
  const Eigen::RowVectorXd logits = space_.vectorize(profile).transpose() * weights_;
  return softmax_rows(logits).transpose();
}

namespace {

// Minimizes f(w) = -J(w) by L-BFGS with Armijo backtracking.
Eigen::MatrixXd maximize_lbfgs(const Eigen::MatrixXd& X, std::span<const int> labels,
                               Eigen::Index classes, const ClassifierConfig& cfg,
                               OptimizationTrace& trace) {
  const Eigen::Index rows = X.cols();
  const Eigen::Index n = rows * classes;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(rows, classes);
  Eigen::MatrixXd G(rows, classes);

  auto eval = [&](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
    const Eigen::Map<const Eigen::MatrixXd> Wm(w.data(), rows, classes);
    Eigen::MatrixXd grad;
    const double j = regularized_log_likelihood(X, labels, cfg.lambda, Wm, &grad);
    g = -Eigen::Map<const Eigen::VectorXd>(grad.data(), n);
    return -j;
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g(n);
  double f = eval(w, g);
  trace.objective.push_back(-f);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  constexpr double c1 = 1e-4;

  int iter = 0;
  for (; iter < cfg.max_iterations && g.norm() > cfg.gradient_tolerance; ++iter) {
    // Two-loop recursion for d = -H g.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd d = -q;

    bool accepted = false;
    Eigen::VectorXd w_new(n), g_new(n);
    double f_new = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1 || g.dot(d) >= 0.0) {
        d = -g;
        s_hist.clear();
        y_hist.clear();
        rho_hist.clear();
      }
      const double slope = g.dot(d);
      double t = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
      for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
        w_new = w + t * d;
        f_new = eval(w_new, g_new);
        if (std::isfinite(f_new) && f_new <= f + c1 * t * slope && f_new < f) {
          accepted = true;
          break;
        }
      }
      if (s_hist.empty() && !accepted) break;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = w_new - w;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    w = std::move(w_new);
    g = std::move(g_new);
    f = f_new;
    trace.objective.push_back(-f);
  }
  trace.iterations = iter;
  trace.gradient_norm = g.norm();
  if (trace.gradient_norm > cfg.gradient_tolerance) {
    throw OptimizationError("log-linear training did not converge", trace.gradient_norm);
  }
  W = Eigen::Map<const Eigen::MatrixXd>(w.data(), rows, classes);
  return W;
}

}  // namespace

LogLinearModel train_classifier(std::span<const MorphoSyntacticProfile> profiles,
                                const ClassifierConfig& config) {
  std::map<std::string, int, std::less<>> count;
  for (const auto& p : profiles) ++count[p.native_language];
  if (count.size() < 2) throw InsufficientDataError("classifier needs at least two classes");
  for (const auto& [lang, c] : count) {
    if (c < 2) throw InsufficientDataError("class " + lang + " has fewer than two documents");
  }
  std::vector<std::string> classes;
  for (const auto& [lang, _] : count) classes.push_back(lang);
  std::vector<int> labels;
  labels.reserve(profiles.size());
  for (const auto& p : profiles) {
    labels.push_back(static_cast<int>(std::lower_bound(classes.begin(), classes.end(), p.native_language) -
                                      classes.begin()));
  }

  FeatureSpace space(profiles);
  const Eigen::MatrixXd X = space.design(profiles);
  OptimizationTrace trace;
  Eigen::MatrixXd W = maximize_lbfgs(X, labels, static_cast<Eigen::Index>(classes.size()), config, trace);
  return LogLinearModel(std::move(classes), std::move(space), std::move(W), config.lambda, std::move(trace));
}

// ---------------------------------------------------------------------------
// Similarity

SimilarityMatrix::SimilarityMatrix(std::vector<std::string> languages, Eigen::MatrixXd values)
    : languages_(std::move(languages)), values_(std::move(values)) {
  const auto n = static_cast<Eigen::Index>(languages_.size());
  if (values_.rows() != n || values_.cols() != n) throw DataError("similarity matrix is not square over its languages");
}

std::size_t SimilarityMatrix::index_of(std::string_view lang) const {
  const auto it = std::find(languages_.begin(), languages_.end(), lang);
  if (it == languages_.end()) throw LookupError("language " + std::string(lang) + " not in similarity matrix");
  return static_cast<std::size_t>(it - languages_.begin());
}

double SimilarityMatrix::operator()(std::string_view a, std::string_view b) const {
  return values_(static_cast<Eigen::Index>(index_of(a)), static_cast<Eigen::Index>(index_of(b)));
}

bool SimilarityMatrix::is_symmetric(double tol) const {
  return (values_ - values_.transpose()).cwiseAbs().maxCoeff() <= tol;
}

void SimilarityMatrix::write_tsv(std::ostream& out) const {
  out << "language";
  for (const auto& l : languages_) out << '\t' << l;
  out << '\n';
  for (std::size_t i = 0; i < languages_.size(); ++i) {
    out << languages_[i];
    for (std::size_t j = 0; j < languages_.size(); ++j) {
      out << '\t' << format_double(values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 6);
    }
    out << '\n';
  }
}

SimilarityMatrix confusion_from_posteriors(const std::vector<std::string>& languages,
                                           std::span<const int> labels,
                                           const Eigen::MatrixXd& posteriors) {
  const auto L = static_cast<Eigen::Index>(languages.size());
  if (posteriors.cols() != L || posteriors.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DataError("posterior matrix shape does not match labels and languages");
  }
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(L, L);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(L);
  for (Eigen::Index i = 0; i < posteriors.rows(); ++i) {
    const auto l = labels[static_cast<std::size_t>(i)];
    sum.row(l) += posteriors.row(i);
    count(l) += 1.0;
  }
  for (Eigen::Index l = 0; l < L; ++l) {
    if (count(l) == 0.0) throw InsufficientDataError("language " + languages[static_cast<std::size_t>(l)] + " has no documents");
    sum.row(l) /= count(l);
    sum(l, l) = 1.0;
  }
  return SimilarityMatrix(languages, std::move(sum));
}

ConfusionResult confusion_similarity(std::span<const MorphoSyntacticProfile> profiles,
                                     const ConfusionOptions& options) {
  const int k = options.folds;
  if (k < 2) throw ConfigError("confusion similarity needs at least two folds");

  ConfusionResult result;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_lang;
  for (std::size_t i = 0; i < profiles.size(); ++i) by_lang[profiles[i].native_language].push_back(i);
  for (const auto& [lang, docs] : by_lang) {
    if (static_cast<int>(docs.size()) < k) {
      throw InsufficientDataError("language " + lang + " has fewer documents than folds");
    }
    result.languages.push_back(lang);
  }
  result.labels.resize(profiles.size());
  for (std::size_t l = 0; l < result.languages.size(); ++l) {
    for (auto i : by_lang[result.languages[l]]) result.labels[i] = static_cast<int>(l);
  }

  Rng rng(options.seed);
  result.fold_of.assign(profiles.size(), -1);
  for (auto& [lang, docs] : by_lang) {
    auto shuffled = docs;
    rng.shuffle(shuffled);
    for (std::size_t j = 0; j < shuffled.size(); ++j) result.fold_of[shuffled[j]] = static_cast<int>(j % k);
  }

  const auto L = static_cast<Eigen::Index>(result.languages.size());
  result.posteriors = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(profiles.size()), L);
  result.training_indices.resize(static_cast<std::size_t>(k));
  for (int fold = 0; fold < k; ++fold) {
    std::vector<MorphoSyntacticProfile> train;
    auto& idx = result.training_indices[static_cast<std::size_t>(fold)];
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (result.fold_of[i] != fold) {
        idx.push_back(i);
        train.push_back(profiles[i]);
      }
    }
    if (options.force_uniform) {
      for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (result.fold_of[i] == fold) result.posteriors.row(static_cast<Eigen::Index>(i)).setConstant(1.0 / L);
      }
      continue;
    }
    const auto model = train_classifier(train, options.classifier);
    if (model.classes() != result.languages) throw DataError("fold is missing a language");
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      if (result.fold_of[i] == fold) {
        result.posteriors.row(static_cast<Eigen::Index>(i)) = model.posterior(profiles[i]).transpose();
      }
    }
    result.traces.push_back(model.trace());
  }

  std::size_t correct = 0;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    Eigen::Index best;
    result.posteriors.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    if (best == result.labels[i]) ++correct;
  }
  result.accuracy = profiles.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(profiles.size());
  result.raw = confusion_from_posteriors(result.languages, result.labels, result.posteriors);
  return result;
}

SimilarityMatrix symmetrize(const SimilarityMatrix& raw) {
  const Eigen::MatrixXd& v = raw.values();
  return SimilarityMatrix(raw.languages(), 0.5 * (v + v.transpose()));
}

// ---------------------------------------------------------------------------
// Projection and bootstrapping

TypologyProjection project_typology(const std::string& target, const SimilarityMatrix& similarity,
                                    const TypologyDatabase& db) {
  const auto t = static_cast<Eigen::Index>(similarity.index_of(target));
  std::optional<TypologyProjection> best;
  // languages() is in input order; scan in code order so ties go to the smallest code.
  auto order = similarity.languages();
  std::sort(order.begin(), order.end());
  for (const auto& lang : order) {
    if (lang == target || !db.has_language(lang) || db.assignments(lang).empty()) continue;
    const double s = similarity.values()(t, static_cast<Eigen::Index>(similarity.index_of(lang)));
    if (!best || s > best->similarity) best = TypologyProjection{target, lang, s, {}};
  }
  if (!best) throw InsufficientDataError("no other language with documented typology to project from");
  best->assignments = db.assignments(best->source);
  return *best;
}

ProjectionAccuracy projection_accuracy(const Assignments& projected, const Assignments& truth) {
  ProjectionAccuracy acc;
  for (const auto& [fid, value] : projected) {
    const auto it = truth.find(fid);
    if (it == truth.end()) continue;
    ++acc.compared;
    if (it->second == value) ++acc.matched;
  }
  return acc;
}

BootstrapResult bootstrap_predict(const FeatureEncoder& encoder, const LanguageTargets& targets,
                                  const SimilarityMatrix& similarity,
                                  std::span<const System> systems,
                                  const LeaveOneOutOptions& options) {
  BootstrapResult result;
  const auto& db = encoder.database();
  for (const auto& [lang, _] : targets) {
    auto proj = project_typology(lang, similarity, db);
    if (db.has_language(lang)) {
      const auto a = projection_accuracy(proj.assignments, db.assignments(lang));
      result.accuracy.compared += a.compared;
      result.accuracy.matched += a.matched;
    }
    result.projections.emplace(lang, std::move(proj));
  }
  LeaveOneOutOptions opts = options;
  if (!opts.test_typology) {
    opts.test_typology = [&result](const std::string& lang) {
      return result.projections.at(lang).assignments;
    };
  }
  result.loo = leave_one_out(encoder, targets, systems, opts);
  return result;
}

}  // namespace typoesl
