#include "typoesl/regression.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/least_squares.hpp"
#include "typoesl/metrics.hpp"
#include "typoesl/util.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

namespace typoesl {

std::string_view to_string(System system) {
  switch (system) {
    case System::Base: return "Base";
    case System::NN: return "NN";
    case System::Reg: return "Reg";
    case System::RegCA: return "RegCA";
  }
  return "?";
}

System parse_system(std::string_view text) {
  for (auto s : kAllSystems) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown system '" + std::string(text) + "'");
}

ErrorVector RegressorSet::raw_predict(const Eigen::VectorXd& x) const {
  if (x.size() != weights.rows()) {
    throw DataError("encoding has dimension " + std::to_string(x.size()) + ", models expect " +
                    std::to_string(weights.rows()));
  }
  return weights.transpose() * x + intercepts;
}

namespace {

std::vector<std::string> training_languages_for(const LanguageTargets& targets,
                                                std::string_view held_out) {
  std::vector<std::string> out;
  for (const auto& [lang, _] : targets) {
    if (lang != held_out) out.push_back(lang);
  }
  return out;
}

}  // namespace

RegressorSet train_models(const FeatureEncoder& encoder, const LanguageTargets& targets,
                          FeatureMode mode, std::string_view held_out,
                          const RegressionConfig& config) {
  if (targets.find(held_out) == targets.end()) {
    throw LookupError("held-out language " + std::string(held_out) + " has no target distribution");
  }
  auto train = training_languages_for(targets, held_out);
  if (train.size() < 2) throw InsufficientDataError("need at least two training languages");

  RegressorSet models;
  models.mode = mode;
  models.layout = encoder.layout(mode);
  const auto d = static_cast<Eigen::Index>(models.layout->size());
  const auto n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd X(n, d);
  Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(kNumErrorTypes));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& lang = train[static_cast<std::size_t>(i)];
    X.row(i) = encoder.encode(lang, mode).values.transpose();
    Y.row(i) = targets.find(lang)->second.values().transpose();
  }

  LeastSquaresOptions opts;
  opts.fit_intercept = config.fit_intercept;
  opts.ridge = config.ridge;
  const auto fit = fit_least_squares(X, Y, opts);
  models.weights = fit.weights;
  models.intercepts = fit.intercepts;
  models.training_languages = std::move(train);
  return models;
}

ErrorDistribution predict_distribution(const RegressorSet& models,
                                       const EncodedFeatureVector& encoding, double epsilon) {
  if (encoding.mode != models.mode) throw DataError("encoding mode does not match the models");
  const ErrorVector raw = models.raw_predict(encoding.values);
  if ((raw.array() <= 0.0).all()) {
    throw DegeneratePredictionError("all raw regressor outputs are non-positive");
  }
  return ErrorDistribution::normalized(raw.cwiseMax(epsilon));
}

ErrorDistribution baseline_base(const LanguageTargets& targets, std::string_view held_out) {
  ErrorVector acc = ErrorVector::Zero();
  std::size_t count = 0;
  for (const auto& [lang, dist] : targets) {
    if (lang == held_out) continue;
    acc += dist.values();
    ++count;
  }
  if (count == 0) throw InsufficientDataError("Base needs at least one training language");
  return ErrorDistribution::normalized(acc / static_cast<double>(count));
}

NeighborChoice nearest_typological_neighbor(const FeatureEncoder& encoder,
                                            const LanguageTargets& targets,
                                            std::string_view held_out,
                                            const Eigen::VectorXd& query) {
  if (query.isZero(0.0)) throw DomainError("held-out language has an all-zero typology vector");
  std::optional<NeighborChoice> best;
  for (const auto& [lang, _] : targets) {
    if (lang == held_out) continue;
    const Eigen::VectorXd v = encoder.encode(lang, FeatureMode::Reg).values;
    if (v.isZero(0.0)) continue;
    const double sim = cosine_similarity(query, v);
    // Iteration is in code order, so strict > keeps the smallest code on ties.
    if (!best || sim > best->similarity) best = NeighborChoice{lang, sim};
  }
  if (!best) throw InsufficientDataError("no encodable training language for NN");
  return *best;
}

ErrorDistribution baseline_nn(const FeatureEncoder& encoder, const LanguageTargets& targets,
                              std::string_view held_out) {
  const auto query = encoder.encode(held_out, FeatureMode::Reg).values;
  const auto choice = nearest_typological_neighbor(encoder, targets, held_out, query);
  return targets.find(choice.language)->second;
}

LeaveOneOutResult leave_one_out(const FeatureEncoder& encoder, const LanguageTargets& targets,
                                std::span<const System> systems,
                                const LeaveOneOutOptions& options) {
  std::vector<std::string> unmatched;
  for (const auto& [lang, _] : targets) {
    if (!encoder.database().has_language(lang)) unmatched.push_back(lang);
  }
  if (!unmatched.empty()) {
    std::string list;
    for (const auto& u : unmatched) list += (list.empty() ? "" : ", ") + u;
    throw DataError("corpus languages missing from the typology: " + list);
  }
  if (targets.size() < 3) throw InsufficientDataError("leave-one-out needs at least three languages");

  std::vector<std::string> langs;
  for (const auto& [lang, _] : targets) langs.push_back(lang);

  const bool want_reg = std::find(systems.begin(), systems.end(), System::Reg) != systems.end();
  const bool want_regca = std::find(systems.begin(), systems.end(), System::RegCA) != systems.end();

  struct Fold {
    std::vector<PredictionRecord> records;
    std::optional<RegressorSet> reg;
    std::optional<RegressorSet> regca;
  };
  std::vector<Fold> folds(langs.size());

  auto run_fold = [&](std::size_t i) {
    const auto& lang = langs[i];
    const auto& truth = targets.find(lang)->second;
    const Assignments test_typology = options.test_typology
                                          ? options.test_typology(lang)
                                          : encoder.database().assignments(lang);
    const auto base = baseline_base(targets, lang);
    Fold fold;
    for (auto system : systems) {
      PredictionRecord rec{lang, system, base, truth, false, {}};
      switch (system) {
        case System::Base:
          break;
        case System::NN: {
          const auto query = encoder.encode_assignments(test_typology, FeatureMode::Reg).values;
          const auto choice = nearest_typological_neighbor(encoder, targets, lang, query);
          rec.predicted = targets.find(choice.language)->second;
          rec.neighbor = choice.language;
          break;
        }
        case System::Reg:
        case System::RegCA: {
          const auto mode = system == System::Reg ? FeatureMode::Reg : FeatureMode::RegCA;
          auto& slot = mode == FeatureMode::Reg ? fold.reg : fold.regca;
          if (!slot) slot = train_models(encoder, targets, mode, lang, options.regression);
          try {
            rec.predicted = predict_distribution(*slot, encoder.encode_assignments(test_typology, mode),
                                                 options.regression.clamp_epsilon);
          } catch (const DegeneratePredictionError&) {
            rec.fell_back = true;
          }
          break;
        }
      }
      fold.records.push_back(std::move(rec));
    }
    // Keep the models even when only one of Reg / RegCA was requested.
    if (want_reg && !fold.reg) fold.reg = train_models(encoder, targets, FeatureMode::Reg, lang, options.regression);
    if (want_regca && !fold.regca) fold.regca = train_models(encoder, targets, FeatureMode::RegCA, lang, options.regression);
    folds[i] = std::move(fold);
  };

  const std::size_t jobs = static_cast<std::size_t>(std::max(1, options.jobs));
  if (jobs == 1) {
    for (std::size_t i = 0; i < langs.size(); ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < std::min(jobs, langs.size()); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < langs.size(); i = next++) {
          try {
            run_fold(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  LeaveOneOutResult result;
  for (auto& fold : folds) {
    for (auto& r : fold.records) result.records.push_back(std::move(r));
    if (fold.reg) result.fold_models[FeatureMode::Reg].push_back(std::move(*fold.reg));
    if (fold.regca) result.fold_models[FeatureMode::RegCA].push_back(std::move(*fold.regca));
  }
  return result;
}

std::vector<SalienceEntry> feature_salience(std::span<const RegressorSet> models, ErrorType e) {
  if (models.empty()) throw InsufficientDataError("salience needs at least one model set");
  const auto& layout = models.front().layout;
  const Eigen::Index d = models.front().dimension();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& m : models) {
    if (m.dimension() != d || m.mode != models.front().mode) {
      throw DataError("salience requires model sets over one layout");
    }
    mean += m.weights_for(e);
  }
  mean /= static_cast<double>(models.size());

  std::vector<SalienceEntry> out;
  out.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto slot = static_cast<std::size_t>(i);
    out.push_back({slot, layout ? layout->slot(slot).description : std::to_string(slot), mean(i)});
  }
  std::stable_sort(out.begin(), out.end(), [](const SalienceEntry& a, const SalienceEntry& b) {
    return a.mean_weight > b.mean_weight;
  });
  return out;
}

std::vector<SalienceEntry> top_positive(const std::vector<SalienceEntry>& ranked, std::size_t n) {
  std::vector<SalienceEntry> out;
  for (const auto& s : ranked) {
    if (out.size() == n || !(s.mean_weight > 0.0)) break;
    out.push_back(s);
  }
  return out;
}

std::vector<SalienceEntry> top_negative(const std::vector<SalienceEntry>& ranked, std::size_t n) {
  std::vector<SalienceEntry> negatives;
  for (const auto& s : ranked) {
    if (s.mean_weight < 0.0) negatives.push_back(s);
  }
  std::stable_sort(negatives.begin(), negatives.end(),
                   [](const SalienceEntry& a, const SalienceEntry& b) { return a.mean_weight < b.mean_weight; });
  if (negatives.size() > n) negatives.resize(n);
  return negatives;
}

void write_salience_tsv(std::ostream& out, const std::vector<SalienceEntry>& ranked) {
  out << "rank\tslot\tdescription\tmean_weight\n";
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    out << (r + 1) << '\t' << ranked[r].slot << '\t' << ranked[r].description << '\t'
        << format_double(ranked[r].mean_weight, 6) << '\n';
  }
}

namespace {

constexpr std::string_view kModelHeader = "typoesl-regressors v1";

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string expect_line(std::istream& in, std::string_view key, std::size_t& line_no) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("regressors", line_no, "missing " + std::string(key));
  ++line_no;
  const auto prefix = std::string(key) + " ";
  if (line.rfind(prefix, 0) != 0) throw ParseError("regressors", line_no, "expected " + std::string(key));
  return line.substr(prefix.size());
}

}  // namespace

void write_regressor_set(std::ostream& out, const RegressorSet& models) {
  out << kModelHeader << '\n';
  out << "mode " << to_string(models.mode) << '\n';
  out << "layout_hash " << (models.layout ? hex64(models.layout->hash()) : "none") << '\n';
  out << "dimension " << models.dimension() << '\n';
  out << "training_languages";
  for (const auto& l : models.training_languages) out << ' ' << l;
  out << '\n';
  for (const auto& info : kErrorTypes) {
    const auto e = static_cast<Eigen::Index>(index_of(info.type));
    out << info.code << '\t' << exact(models.intercepts(e)) << '\t';
    for (Eigen::Index i = 0; i < models.weights.rows(); ++i) {
      if (i) out << ' ';
      out << exact(models.weights(i, e));
    }
    out << '\n';
  }
}

RegressorSet read_regressor_set(std::istream& in, std::shared_ptr<const FeatureLayout> layout) {
  std::size_t line_no = 0;
  std::string line;
  if (!std::getline(in, line) || line != kModelHeader) {
    throw ParseError("regressors", 1, "not a typoesl-regressors v1 file");
  }
  ++line_no;
  RegressorSet models;
  models.mode = parse_feature_mode(expect_line(in, "mode", line_no));
  const auto hash = expect_line(in, "layout_hash", line_no);
  if (!layout || hex64(layout->hash()) != hash || layout->mode() != models.mode) {
    throw DataError("serialized regressors were trained on a different feature layout");
  }
  models.layout = std::move(layout);
  const auto d = static_cast<Eigen::Index>(std::stoll(expect_line(in, "dimension", line_no)));
  if (d != static_cast<Eigen::Index>(models.layout->size())) throw DataError("dimension mismatch");
  {
    std::string langs;
    if (!std::getline(in, langs)) throw ParseError("regressors", line_no, "missing training_languages");
    ++line_no;
    std::istringstream ss(langs);
    std::string tok;
    ss >> tok;
    if (tok != "training_languages") throw ParseError("regressors", line_no, "expected training_languages");
    while (ss >> tok) models.training_languages.push_back(tok);
  }
  models.weights.resize(d, static_cast<Eigen::Index>(kNumErrorTypes));
  for (const auto& info : kErrorTypes) {
    if (!std::getline(in, line)) throw ParseError("regressors", line_no, "missing weight rows");
    ++line_no;
    const auto fields = split(line, '\t');
    if (fields.size() != 3 || fields[0] != info.code) {
      throw ParseError("regressors", line_no, "expected row for " + std::string(info.code));
    }
    const auto e = static_cast<Eigen::Index>(index_of(info.type));
    models.intercepts(e) = std::stod(fields[1]);
    std::istringstream ws(fields[2]);
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(ws >> models.weights(i, e))) throw ParseError("regressors", line_no, "too few weights");
    }
  }
  return models;
}

}  // namespace typoesl
