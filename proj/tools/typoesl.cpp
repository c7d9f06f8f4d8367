// typoesl: command-line driver for variance analysis, leave-one-out
// prediction, the ESL bootstrap path, synthetic data and encoding dumps.

#include "CLI11.hpp"
#include "json.hpp"

#include "typoesl/corpus.hpp"
#include "typoesl/errors.hpp"
#include "typoesl/eval.hpp"
#include "typoesl/nli.hpp"
#include "typoesl/regression.hpp"
#include "typoesl/stats.hpp"
#include "typoesl/synth.hpp"
#include "typoesl/typology.hpp"
#include "typoesl/util.hpp"
#include "typoesl/version.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace typoesl;

namespace {

struct RunConfig {
  std::string subcommand;
  std::string typology;
  std::string corpus;
  std::string conllu_dir;
  std::string out = "typoesl-out";
  std::string english = "eng";
  std::string systems = "Base,NN,Reg,RegCA";
  std::string mode = "RegCA";
  std::string pooling = "pooled";
  std::string language;
  double ridge = 0.0;
  double nli_lambda = 1.0;
  double mw_alpha = 0.01;
  int folds = 10;
  int topk = 10;
  int jobs = 1;
  std::uint64_t seed = 42;
  bool uniform_posteriors = false;
  bool write_models = false;
  // synth
  SynthConfig synth;
  std::string link = "softplus";
};

/// Collects written files and writes the manifest last.
class Run {
 public:
  explicit Run(const RunConfig& cfg) : cfg_(cfg), root_(cfg.out) { fs::create_directories(root_); }

  void input(const std::string& name, const std::string& path) {
    inputs_[name] = {{"path", path}, {"hash", content_hash(path)}};
  }

  std::ofstream open(const fs::path& rel) {
    const auto p = root_ / rel;
    fs::create_directories(p.parent_path());
    outputs_.push_back(rel.generic_string());
    std::ofstream out(p);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  }

  void note(const std::string& key, json value) { notes_[key] = std::move(value); }

  json config_json() const {
    json c;
    c["subcommand"] = cfg_.subcommand;
    c["english"] = cfg_.english;
    c["seed"] = cfg_.seed;
    if (cfg_.subcommand == "variance") {
      c["mw_alpha"] = cfg_.mw_alpha;
    }
    if (cfg_.subcommand == "predict" || cfg_.subcommand == "bootstrap") {
      c["systems"] = cfg_.systems;
      c["pooling"] = cfg_.pooling;
      c["ridge"] = cfg_.ridge;
      c["topk"] = cfg_.topk;
    }
    if (cfg_.subcommand == "bootstrap") {
      c["nli_lambda"] = cfg_.nli_lambda;
      c["folds"] = cfg_.folds;
      c["uniform_posteriors"] = cfg_.uniform_posteriors;
    }
    if (cfg_.subcommand == "encode") {
      c["mode"] = cfg_.mode;
      c["language"] = cfg_.language;
    }
    return c;
  }

  /// Stable over config and input contents; excludes paths and --jobs.
  std::string fingerprint() const {
    Fnv1a h;
    h.update(kVersion).update("\n").update(config_json().dump()).update("\n");
    for (const auto& [name, v] : inputs_.items()) h.update(name).update("=").update(v["hash"].get<std::string>()).update("\n");
    return h.hex();
  }

  std::string fingerprint_line() const {
    std::string s = "typoesl " + std::string(kVersion) + " " + cfg_.subcommand + " fingerprint=" + fingerprint();
    for (const auto& [name, v] : inputs_.items()) s += " " + name + "=" + v["hash"].get<std::string>();
    const auto c = config_json();
    for (const auto& [k, v] : c.items()) {
      if (k == "subcommand") continue;
      s += " " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump());
    }
    return s;
  }

  void finish() {
    json m;
    m["tool"] = "typoesl";
    m["version"] = kVersion;
    m["report_format"] = kReportFormat;
    m["fingerprint"] = fingerprint();
    m["config"] = config_json();
    m["jobs"] = cfg_.jobs;
    m["inputs"] = inputs_;
    json outs = json::array();
    for (const auto& rel : outputs_) outs.push_back({{"path", rel}, {"hash", content_hash(root_ / rel)}});
    m["outputs"] = outs;
    if (!notes_.empty()) m["notes"] = notes_;
    std::ofstream out(root_ / "manifest.json");
    out << m.dump(2) << '\n';
  }

  const fs::path& root() const { return root_; }

 private:
  const RunConfig& cfg_;
  fs::path root_;
  json inputs_ = json::object();
  json notes_ = json::object();
  std::vector<std::string> outputs_;
};

void require_file(const std::string& path, const std::string& flag) {
  if (path.empty()) throw ConfigError(flag + " is required");
  if (!fs::exists(path)) throw ConfigError(flag + " " + path + " does not exist");
}

std::vector<System> parse_systems(const std::string& text) {
  std::vector<System> out;
  for (const auto& part : split(text, ',')) {
    const auto s = parse_system(trim(part));
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (std::find(out.begin(), out.end(), System::Base) == out.end()) out.insert(out.begin(), System::Base);
  return out;
}

/// The typology restricted to the corpus languages plus English, then filtered.
FeatureEncoder build_encoder(const RunConfig& cfg, const LanguageTargets& targets) {
  const auto db = load_typology(cfg.typology, cfg.english);
  std::set<std::string, std::less<>> keep;
  for (const auto& [lang, _] : targets) keep.insert(lang);
  keep.insert(cfg.english);
  return FeatureEncoder(filter_features(db.restrict_languages(keep)));
}

void write_layouts(Run& run, const FeatureEncoder& enc, const std::vector<System>& systems) {
  for (auto mode : {FeatureMode::Reg, FeatureMode::RegCA}) {
    const auto system = mode == FeatureMode::Reg ? System::Reg : System::RegCA;
    if (std::find(systems.begin(), systems.end(), system) == systems.end()) continue;
    auto out = run.open("layout_" + std::string(to_string(mode)) + ".tsv");
    enc.layout(mode)->write_manifest(out);
  }
}

void write_salience(Run& run, const LeaveOneOutResult& res) {
  for (const auto& [mode, models] : res.fold_models) {
    const auto dir = fs::path("salience") / std::string(to_string(mode));
    for (const auto& info : kErrorTypes) {
      auto out = run.open(dir / (std::string(info.code) + ".tsv"));
      write_salience_tsv(out, feature_salience(models, info.type));
    }
  }
}

void write_models(Run& run, const LeaveOneOutResult& res, const LanguageTargets& targets) {
  for (const auto& [mode, models] : res.fold_models) {
    auto it = targets.begin();
    for (const auto& m : models) {
      auto out = run.open(fs::path("models") / std::string(to_string(mode)) / (it->first + ".txt"));
      write_regressor_set(out, m);
      ++it;
    }
  }
}

void write_prediction_reports(Run& run, const RunConfig& cfg, const std::vector<PredictionRecord>& records,
                              const std::vector<System>& systems, const LanguageTargets& targets) {
  const auto fp = run.fingerprint_line();
  const auto summary = summarize(records);
  {
    auto out = run.open("summary.tsv");
    write_summary_tsv(out, summary, fp);
  }
  {
    auto out = run.open("summary.txt");
    write_summary_text(out, summary, fp);
  }
  write_summary_text(std::cout, summary);
  {
    auto out = run.open("records.tsv");
    write_records_tsv(out, records, fp);
  }
  const auto k = static_cast<std::size_t>(std::max(0, cfg.topk));
  for (const auto& [lang, _] : targets) {
    const auto cols = topk_comparison(records, lang, systems, k);
    auto tsv = run.open(fs::path("topk") / (lang + ".tsv"));
    write_topk_tsv(tsv, lang, cols, fp);
    auto txt = run.open(fs::path("topk") / (lang + ".txt"));
    write_topk_text(txt, lang, cols);
  }
  int fallbacks = 0;
  for (const auto& r : records) fallbacks += r.fell_back ? 1 : 0;
  if (fallbacks > 0) {
    std::cerr << "warning: " << fallbacks << " regression predictions fell back to Base\n";
    run.note("fallbacks", fallbacks);
  }
}

// ---------------------------------------------------------------------------

int cmd_variance(const RunConfig& cfg) {
  require_file(cfg.corpus, "--corpus");
  Run run(cfg);
  run.input("corpus", cfg.corpus);
  const auto corpus = load_corpus(cfg.corpus);
  const auto rows = variance_report(corpus, cfg.mw_alpha);
  {
    auto out = run.open("variance.tsv");
    out << "# " << run.fingerprint_line() << '\n';
    write_variance_tsv(out, rows);
  }
  int b01 = 0, b001 = 0;
  for (const auto& r : rows) {
    if (r.kruskal_wallis.p_value < 0.01) ++b01;
    if (r.kruskal_wallis.p_value < 0.001) ++b001;
  }
  write_variance_tsv(std::cout, rows);
  std::cout << b01 << " of " << rows.size() << " types significant at p < 0.01, " << b001 << " at p < 0.001\n";
  run.note("kw_significant_p01", b01);
  run.note("kw_significant_p001", b001);
  run.finish();
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  require_file(cfg.corpus, "--corpus");
  require_file(cfg.typology, "--typology");
  Run run(cfg);
  run.input("corpus", cfg.corpus);
  run.input("typology", cfg.typology);
  const auto systems = parse_systems(cfg.systems);
  const auto corpus = load_corpus(cfg.corpus);
  const auto targets = language_targets(corpus, parse_pooling(cfg.pooling));
  const auto enc = build_encoder(cfg, targets);

  LeaveOneOutOptions opts;
  opts.regression.ridge = cfg.ridge;
  opts.jobs = cfg.jobs;
  const auto res = leave_one_out(enc, targets, systems, opts);

  write_layouts(run, enc, systems);
  write_prediction_reports(run, cfg, res.records, systems, targets);
  write_salience(run, res);
  if (cfg.write_models) write_models(run, res, targets);
  run.note("pooling", cfg.pooling);
  run.note("features_after_filtering", enc.database().features().size());
  run.finish();
  return 0;
}

std::vector<MorphoSyntacticProfile> load_profiles(const RunConfig& cfg, const Corpus& corpus,
                                                  const LanguageTargets& targets) {
  if (cfg.conllu_dir.empty()) throw ConfigError("--conllu-dir is required");
  if (!fs::is_directory(cfg.conllu_dir)) throw ConfigError("--conllu-dir " + cfg.conllu_dir + " is not a directory");
  std::map<std::string, std::string> lang_of;
  for (const auto& d : corpus.all_documents()) lang_of.emplace(d.doc_id, d.native_language);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(cfg.conllu_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".conllu") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MorphoSyntacticProfile> profiles;
  for (const auto& f : files) {
    const auto it = lang_of.find(f.stem().string());
    auto p = extract_profile(f, it == lang_of.end() ? std::string{} : it->second);
    if (p.native_language.empty()) throw DataError(f.string() + ": no native language in corpus or file");
    if (targets.count(p.native_language)) profiles.push_back(std::move(p));
  }
  if (profiles.empty()) throw DataError("no CoNLL-U documents for the corpus languages in " + cfg.conllu_dir);
  return profiles;
}

int cmd_bootstrap(const RunConfig& cfg) {
  require_file(cfg.corpus, "--corpus");
  require_file(cfg.typology, "--typology");
  Run run(cfg);
  run.input("corpus", cfg.corpus);
  run.input("typology", cfg.typology);
  if (!cfg.conllu_dir.empty() && fs::exists(cfg.conllu_dir)) run.input("conllu", cfg.conllu_dir);
  const auto systems = parse_systems(cfg.systems);
  const auto corpus = load_corpus(cfg.corpus);
  const auto targets = language_targets(corpus, parse_pooling(cfg.pooling));
  const auto enc = build_encoder(cfg, targets);
  const auto profiles = load_profiles(cfg, corpus, targets);
  {
    auto out = run.open("profiles.jsonl");
    write_profiles(out, profiles);
  }

  ConfusionOptions copts;
  copts.classifier.lambda = cfg.nli_lambda;
  copts.folds = cfg.folds;
  copts.seed = cfg.seed;
  copts.force_uniform = cfg.uniform_posteriors;
  const auto confusion = confusion_similarity(profiles, copts);
  const auto S = symmetrize(confusion.raw);
  if (cfg.uniform_posteriors) {
    std::cerr << "warning: posteriors forced uniform; every off-diagonal similarity is equal and "
                 "projection falls back to the lexicographically first language\n";
    run.note("warning", "uniform posteriors: degenerate similarity");
  }
  {
    auto out = run.open("similarity_raw.tsv");
    confusion.raw.write_tsv(out);
  }
  {
    auto out = run.open("similarity.tsv");
    S.write_tsv(out);
  }

  LeaveOneOutOptions opts;
  opts.regression.ridge = cfg.ridge;
  opts.jobs = cfg.jobs;
  const auto boot = bootstrap_predict(enc, targets, S, systems, opts);
  {
    auto out = run.open("projections.tsv");
    out << "# " << run.fingerprint_line() << '\n';
    out << "target\tsource\tsimilarity\tcompared\tmatched\taccuracy\n";
    for (const auto& [lang, p] : boot.projections) {
      const auto a = projection_accuracy(p.assignments, enc.database().assignments(lang));
      out << lang << '\t' << p.source << '\t' << format_double(p.similarity, 6) << '\t' << a.compared << '\t'
          << a.matched << '\t' << format_double(a.accuracy(), 4) << '\n';
    }
    out << "ALL\t-\t-\t" << boot.accuracy.compared << '\t' << boot.accuracy.matched << '\t'
        << format_double(boot.accuracy.accuracy(), 4) << '\n';
  }
  write_layouts(run, enc, systems);
  write_prediction_reports(run, cfg, boot.loo.records, systems, targets);
  std::cout << "NLI cross-validated accuracy " << format_double(confusion.accuracy, 4) << ", projection accuracy "
            << format_double(boot.accuracy.accuracy(), 4) << " (" << boot.accuracy.matched << "/"
            << boot.accuracy.compared << ")\n";
  run.note("nli_accuracy", confusion.accuracy);
  run.note("projection_accuracy", boot.accuracy.accuracy());
  run.note("pooling", cfg.pooling);
  run.finish();
  return 0;
}

int cmd_synth(RunConfig cfg) {
  cfg.synth.seed = cfg.seed;
  cfg.synth.english_code = cfg.english;
  if (cfg.link == "softplus") {
    cfg.synth.link = PlantedLink::Softplus;
  } else if (cfg.link == "affine") {
    cfg.synth.link = PlantedLink::Affine;
  } else {
    throw ConfigError("unknown link '" + cfg.link + "' (softplus or affine)");
  }
  const auto data = generate(cfg.synth);
  write_synth(data, cfg.out);
  std::cout << "wrote " << data.corpus.size() << " documents for " << data.corpus.languages().size()
            << " languages to " << cfg.out << '\n';
  return 0;
}

int cmd_encode(const RunConfig& cfg) {
  require_file(cfg.typology, "--typology");
  if (cfg.language.empty()) throw ConfigError("--language is required");
  auto db = load_typology(cfg.typology, cfg.english);
  if (!cfg.corpus.empty()) {
    require_file(cfg.corpus, "--corpus");
    std::set<std::string, std::less<>> keep;
    for (const auto& l : load_corpus(cfg.corpus).languages()) keep.insert(l);
    keep.insert(cfg.english);
    keep.insert(cfg.language);
    db = db.restrict_languages(keep);
  }
  const FeatureEncoder enc(filter_features(db));
  const auto v = enc.encode(cfg.language, parse_feature_mode(cfg.mode));
  std::cout << "# " << cfg.language << " " << cfg.mode << " dimension " << v.values.size() << " layout "
            << hex64(v.layout->hash()) << '\n';
  std::cout << "index\tvalue\tdescription\n";
  for (Eigen::Index i = 0; i < v.values.size(); ++i) {
    std::cout << i << '\t' << format_double(v.values(i), 0) << '\t'
              << v.layout->slot(static_cast<std::size_t>(i)).description << '\n';
  }
  return 0;
}

bool is_data_error(const Error& e) {
  return dynamic_cast<const ParseError*>(&e) || dynamic_cast<const DataError*>(&e) ||
         dynamic_cast<const LookupError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
         dynamic_cast<const InsufficientDataError*>(&e) || dynamic_cast<const EmptySampleError*>(&e) ||
         dynamic_cast<const DomainError*>(&e);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predict ESL error distributions from linguistic typology"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  RunConfig cfg;

  auto corpus_opt = [&](CLI::App* sub) {
    sub->add_option("--corpus", cfg.corpus, "error-annotated corpus (JSON lines)")->envname("TYPOESL_CORPUS");
  };
  auto typology_opt = [&](CLI::App* sub) {
    sub->add_option("--typology", cfg.typology, "typology TSV")->envname("TYPOESL_TYPOLOGY");
    sub->add_option("--english", cfg.english, "language code of English in the typology")
        ->envname("TYPOESL_ENGLISH")
        ->capture_default_str();
  };
  auto out_opt = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output directory")->envname("TYPOESL_OUT")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "seed for every random choice")->envname("TYPOESL_SEED")->capture_default_str();
  };
  auto predict_opts = [&](CLI::App* sub) {
    sub->add_option("--systems", cfg.systems, "comma-separated systems (Base is always included)")
        ->envname("TYPOESL_SYSTEMS")
        ->capture_default_str();
    sub->add_option("--ridge", cfg.ridge, "ridge penalty for the regressors")
        ->envname("TYPOESL_RIDGE")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--pooling", cfg.pooling, "pooled or mean-of-documents")
        ->envname("TYPOESL_POOLING")
        ->check(CLI::IsMember({"pooled", "mean-of-documents"}))
        ->capture_default_str();
    sub->add_option("--topk", cfg.topk, "rows in the per-language top-k tables")->capture_default_str();
    sub->add_option("--jobs", cfg.jobs, "concurrent folds")->envname("TYPOESL_JOBS")->check(CLI::PositiveNumber);
  };

  auto* variance = app.add_subcommand("variance", "Kruskal-Wallis / Mann-Whitney table per error type");
  corpus_opt(variance);
  out_opt(variance);
  variance->add_option("--mw-alpha", cfg.mw_alpha, "pairwise significance level")->capture_default_str();

  auto* predict = app.add_subcommand("predict", "leave-one-out prediction with Base, NN, Reg and RegCA");
  corpus_opt(predict);
  typology_opt(predict);
  out_opt(predict);
  predict_opts(predict);
  predict->add_flag("--write-models", cfg.write_models, "serialize every fold's regressors");

  auto* bootstrap = app.add_subcommand("bootstrap", "predict from typology projected through an NLI classifier");
  corpus_opt(bootstrap);
  typology_opt(bootstrap);
  out_opt(bootstrap);
  predict_opts(bootstrap);
  bootstrap->add_option("--conllu-dir", cfg.conllu_dir, "directory of <doc_id>.conllu parses")
      ->envname("TYPOESL_CONLLU_DIR");
  bootstrap->add_option("--nli-lambda", cfg.nli_lambda, "L2 penalty of the classifier")
      ->envname("TYPOESL_NLI_LAMBDA")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  bootstrap->add_option("--folds", cfg.folds, "cross-validation folds")
      ->envname("TYPOESL_FOLDS")
      ->check(CLI::Range(2, 1000))
      ->capture_default_str();
  bootstrap->add_flag("--uniform-posteriors", cfg.uniform_posteriors, "debug: replace posteriors by uniform");

  auto* synth = app.add_subcommand("synth", "write a synthetic typology, corpus and parses");
  out_opt(synth);
  synth->add_option("--english", cfg.english, "code of the English entry")->capture_default_str();
  synth->add_option("--languages", cfg.synth.n_languages)->capture_default_str();
  synth->add_option("--features", cfg.synth.n_features)->capture_default_str();
  synth->add_option("--values", cfg.synth.values_per_feature)->capture_default_str();
  synth->add_option("--docs", cfg.synth.docs_per_language, "documents per language")->capture_default_str();
  synth->add_option("--words", cfg.synth.words_per_doc_mean, "mean words per document")->capture_default_str();
  synth->add_option("--missing", cfg.synth.missing_rate)->capture_default_str();
  synth->add_option("--families", cfg.synth.n_families)->capture_default_str();
  synth->add_option("--mutation", cfg.synth.mutation_rate)->capture_default_str();
  synth->add_option("--effect", cfg.synth.effect_scale)->capture_default_str();
  synth->add_option("--noise", cfg.synth.noise_scale)->capture_default_str();
  synth->add_option("--sentences", cfg.synth.sentences_per_doc, "CoNLL-U sentences per document (0: none)")
      ->capture_default_str();
  synth->add_option("--link", cfg.link, "softplus or affine")->capture_default_str();

  auto* encode = app.add_subcommand("encode", "dump one language's feature vector");
  typology_opt(encode);
  encode->add_option("--corpus", cfg.corpus, "restrict filtering to these corpus languages");
  encode->add_option("--language", cfg.language, "language code")->required();
  encode->add_option("--mode", cfg.mode, "Reg or RegCA")->check(CLI::IsMember({"Reg", "RegCA"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.subcommand = app.get_subcommands().front()->get_name();
    if (cfg.subcommand == "variance") return cmd_variance(cfg);
    if (cfg.subcommand == "predict") return cmd_predict(cfg);
    if (cfg.subcommand == "bootstrap") return cmd_bootstrap(cfg);
    if (cfg.subcommand == "synth") return cmd_synth(cfg);
    if (cfg.subcommand == "encode") return cmd_encode(cfg);
  } catch (const Error& e) {
    std::cerr << "typoesl: " << e.what() << '\n';
    return is_data_error(e) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "typoesl: internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
