#include "typoesl/synth.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/rng.hpp"
#include "typoesl/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace typoesl {

namespace {

// Overall counts of the 20 types in a mid-size learner corpus; used as the
// planted base rates.
constexpr std::array<double, kNumErrorTypes> kBaseCounts{
    3324, 3311, 2967, 1789, 1534, 1435, 1321, 1079, 984, 916,
    884, 847, 816, 676, 608, 536, 414, 391, 346, 226};

constexpr std::array<std::string_view, 7> kCategories{
    "Morphology", "Nominal Categories", "Nominal Syntax", "Verbal Categories",
    "Word Order", "Simple Clauses", "Complex Sentences"};

constexpr std::array<std::string_view, 9> kTags{
    "NOUN", "VERB", "ADJ", "DET", "ADP", "PRON", "ADV", "AUX", "CCONJ"};

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

std::string code_for(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%02d", i + 1);
  return buf;
}

ErrorVector base_rates() {
  ErrorVector p;
  for (std::size_t e = 0; e < kNumErrorTypes; ++e) p(static_cast<Eigen::Index>(e)) = kBaseCounts[e];
  return p / p.sum();
}

std::size_t draw_categorical(Rng& rng, const Eigen::VectorXd& p) {
  double u = rng.uniform() * p.sum();
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    u -= p(i);
    if (u < 0.0) return static_cast<std::size_t>(i);
  }
  return static_cast<std::size_t>(p.size() - 1);
}

// Sentences whose tag mix and dependent labels drift with the language's
// typology vector.
ConlluDocument make_parse(Rng& rng, const Eigen::VectorXd& tag_weights,
                          const Eigen::Vector3d& noun_role_weights, int sentences) {
  ConlluDocument doc;
  for (int s = 0; s < sentences; ++s) {
    const int len = 4 + static_cast<int>(rng.below(9));
    ConlluSentence sent;
    for (int i = 0; i < len; ++i) {
      ConlluToken t;
      t.id = i + 1;
      t.upos = i == 0 ? "VERB" : std::string(kTags[draw_categorical(rng, tag_weights)]);
      t.form = t.upos == "PRON" ? "it" : "w";
      t.lemma = t.form;
      t.xpos = "_";
      t.feats = "_";
      sent.push_back(std::move(t));
    }
    int last_noun = 0;
    for (int i = 1; i < len; ++i) {
      if (sent[static_cast<std::size_t>(i)].upos == "NOUN") last_noun = i + 1;
    }
    sent[0].head = 0;
    sent[0].deprel = "root";
    static constexpr std::array<std::string_view, 3> noun_roles{"nsubj", "obj", "obl"};
    for (int i = 1; i < len; ++i) {
      auto& t = sent[static_cast<std::size_t>(i)];
      const bool nominal_dependent = t.upos == "ADJ" || t.upos == "DET" || t.upos == "ADP";
      t.head = nominal_dependent && last_noun != 0 && last_noun != i + 1 ? last_noun : 1;
      if (t.upos == "NOUN") t.deprel = std::string(noun_roles[draw_categorical(rng, noun_role_weights)]);
      else if (t.upos == "ADJ") t.deprel = "amod";
      else if (t.upos == "DET") t.deprel = "det";
      else if (t.upos == "ADP") t.deprel = "case";
      else if (t.upos == "PRON") t.deprel = "nsubj";
      else if (t.upos == "ADV") t.deprel = "advmod";
      else if (t.upos == "AUX") t.deprel = "aux";
      else if (t.upos == "CCONJ") t.deprel = "cc";
      else t.deprel = "conj";
    }
    doc.sentences.push_back(std::move(sent));
  }
  return doc;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_languages < 4) throw ConfigError("synth needs n_languages >= 4");
  if (n_features < 5) throw ConfigError("synth needs n_features >= 5");
  if (values_per_feature < 2) throw ConfigError("synth needs values_per_feature >= 2");
  if (docs_per_language < 10) throw ConfigError("synth needs docs_per_language >= 10");
  if (!(words_per_doc_mean > 0.0)) throw ConfigError("words_per_doc_mean must be positive");
  if (!(errors_per_word > 0.0)) throw ConfigError("errors_per_word must be positive");
  if (noise_scale < 0.0) throw ConfigError("noise_scale must be nonnegative");
  if (missing_rate < 0.0 || missing_rate >= 1.0) throw ConfigError("missing_rate must be in [0, 1)");
  if (mutation_rate < 0.0 || mutation_rate > 1.0) throw ConfigError("mutation_rate must be in [0, 1]");
  if (n_families < 1) throw ConfigError("n_families must be >= 1");
  if (effect_scale < 0.0) throw ConfigError("effect_scale must be nonnegative");
  if (weight_density <= 0.0 || weight_density > 1.0) throw ConfigError("weight_density must be in (0, 1]");
  if (sentences_per_doc < 0) throw ConfigError("sentences_per_doc must be nonnegative");
}

SynthData generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int K = config.values_per_feature;

  // Typology: family prototypes, mutated per language; English is its own prototype.
  std::vector<WalsFeature> features;
  for (int f = 0; f < config.n_features; ++f) {
    char id[16];
    std::snprintf(id, sizeof id, "%03dS", f + 1);
    WalsFeature w{id, "Synthetic Feature " + std::to_string(f + 1),
                  std::string(kCategories[static_cast<std::size_t>(f) % kCategories.size()]), {}};
    for (int k = 0; k < K; ++k) w.value_names.push_back("Value " + std::string(1, static_cast<char>('A' + k)));
    features.push_back(std::move(w));
  }
  auto random_values = [&] {
    std::vector<int> v(static_cast<std::size_t>(config.n_features));
    for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    return v;
  };
  std::vector<std::vector<int>> prototypes;
  for (int c = 0; c < config.n_families; ++c) prototypes.push_back(random_values());

  std::map<std::string, Assignments, std::less<>> languages;
  {
    const auto eng = random_values();
    Assignments a;
    for (int f = 0; f < config.n_features; ++f) {
      a.emplace(features[static_cast<std::size_t>(f)].id,
                features[static_cast<std::size_t>(f)].value_names[static_cast<std::size_t>(eng[static_cast<std::size_t>(f)])]);
    }
    languages.emplace(config.english_code, std::move(a));
  }
  std::vector<std::string> codes;
  for (int l = 0; l < config.n_languages; ++l) {
    const auto& proto = prototypes[static_cast<std::size_t>(l % config.n_families)];
    Assignments a;
    for (int f = 0; f < config.n_features; ++f) {
      int v = proto[static_cast<std::size_t>(f)];
      if (rng.uniform() < config.mutation_rate) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
      if (rng.uniform() < config.missing_rate) continue;
      a.emplace(features[static_cast<std::size_t>(f)].id,
                features[static_cast<std::size_t>(f)].value_names[static_cast<std::size_t>(v)]);
    }
    codes.push_back(code_for(l));
    languages.emplace(codes.back(), std::move(a));
  }

  SynthData data;
  data.typology = TypologyDatabase(features, languages, config.english_code);
  const FeatureEncoder encoder(filter_features(data.typology));
  const auto layout = encoder.layout(FeatureMode::RegCA);
  const auto d = static_cast<Eigen::Index>(layout->size());

  // Planted map over the filtered RegCA encoding.
  const ErrorVector p = base_rates();
  data.planted_bias = p;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(kNumErrorTypes));
  if (!config.planted_weights.empty()) {
    for (const auto& [type, w] : config.planted_weights) {
      if (w.size() != d) {
        throw ConfigError("planted weights have dimension " + std::to_string(w.size()) +
                          ", layout has " + std::to_string(d));
      }
      W.col(static_cast<Eigen::Index>(index_of(type))) = w;
    }
  } else {
    const double per_slot = config.effect_scale / std::sqrt(static_cast<double>(config.n_features));
    for (Eigen::Index i = 0; i < d; ++i) {
      if (rng.uniform() >= config.weight_density) continue;
      for (Eigen::Index e = 0; e < W.cols(); ++e) W(i, e) = per_slot * p(e) * rng.normal();
    }
  }
  if (config.link == PlantedLink::Affine) {
    // Rows sum to zero so every planted distribution sums to one exactly.
    for (Eigen::Index i = 0; i < d; ++i) W.row(i) -= W.row(i).sum() * p.transpose();
  }

  std::map<std::string, Eigen::VectorXd> enc;
  for (const auto& code : codes) enc.emplace(code, encoder.encode(code, FeatureMode::RegCA).values);

  if (config.link == PlantedLink::Affine) {
    // Shrink the map until every language keeps at least 10% of each base rate.
    double shrink = 1.0;
    for (const auto& [_, f] : enc) {
      const ErrorVector delta = W.transpose() * f;
      for (Eigen::Index e = 0; e < delta.size(); ++e) {
        if (delta(e) < -0.9 * p(e)) shrink = std::min(shrink, 0.9 * p(e) / -delta(e));
      }
    }
    W *= shrink;
  }
  data.planted_weights = W;

  constexpr double kPreactivationScale = 100.0;  // keeps softplus in its near-linear range
  for (const auto& code : codes) {
    const Eigen::VectorXd& f = enc.at(code);
    ErrorVector y;
    if (config.link == PlantedLink::Softplus) {
      ErrorVector z = kPreactivationScale * (p + W.transpose() * f);
      for (Eigen::Index e = 0; e < z.size(); ++e) {
        z(e) += config.noise_scale * kPreactivationScale * p(e) * rng.normal();
        y(e) = softplus(z(e));
      }
    } else {
      y = p + W.transpose() * f;
      if (config.noise_scale > 0.0) {
        for (Eigen::Index e = 0; e < y.size(); ++e) {
          y(e) = std::max(1e-6, y(e) + config.noise_scale * p(e) * rng.normal());
        }
      }
    }
    data.planted.emplace(code, ErrorDistribution::normalized(y));
  }

  // Documents.
  std::vector<Document> docs;
  Eigen::MatrixXd tag_projection(Eigen::Index(kTags.size()), d);
  Eigen::MatrixXd role_projection(3, d);
  if (config.sentences_per_doc > 0) {
    for (Eigen::Index i = 0; i < tag_projection.size(); ++i) tag_projection.data()[i] = 0.3 * rng.normal();
    for (Eigen::Index i = 0; i < role_projection.size(); ++i) role_projection.data()[i] = 0.3 * rng.normal();
  }
  int doc_no = 0;
  for (const auto& code : codes) {
    const auto& dist = data.planted.at(code).values();
    Eigen::VectorXd tag_weights, role_weights;
    if (config.sentences_per_doc > 0) {
      tag_weights = (tag_projection * enc.at(code)).array().exp();
      role_weights = (role_projection * enc.at(code)).array().exp();
    }
    for (int j = 0; j < config.docs_per_language; ++j) {
      Document doc;
      char id[32];
      std::snprintf(id, sizeof id, "%s_%05d", code.c_str(), ++doc_no);
      doc.doc_id = id;
      doc.native_language = code;
      const double wc = std::round(config.words_per_doc_mean * (1.0 + 0.25 * rng.normal()));
      doc.word_count = std::max<std::int64_t>(20, static_cast<std::int64_t>(wc));
      const auto n_errors = rng.poisson(config.errors_per_word * static_cast<double>(doc.word_count));
      for (std::int64_t k = 0; k < n_errors; ++k) ++doc.error_counts[draw_categorical(rng, dist)];
      if (config.sentences_per_doc > 0) {
        auto parse = make_parse(rng, tag_weights, role_weights, config.sentences_per_doc);
        parse.native_language = code;
        data.parses.emplace(doc.doc_id, std::move(parse));
      }
      docs.push_back(std::move(doc));
    }
  }
  data.corpus = Corpus(std::move(docs));
  return data;
}

void write_conllu(std::ostream& out, const ConlluDocument& doc) {
  if (!doc.native_language.empty()) out << "# native_language = " << doc.native_language << '\n';
  for (const auto& sent : doc.sentences) {
    for (const auto& t : sent) {
      out << t.id << '\t' << t.form << '\t' << t.lemma << '\t' << t.upos << '\t' << t.xpos << '\t'
          << t.feats << '\t' << t.head << '\t' << t.deprel << "\t_\t_\n";
    }
    out << '\n';
  }
}

void write_synth(const SynthData& data, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "typology.tsv");
    write_typology(out, data.typology);
  }
  {
    std::ofstream out(dir / "corpus.jsonl");
    write_corpus(out, data.corpus);
  }
  {
    std::ofstream out(dir / "planted.tsv");
    out << "language";
    for (const auto& info : kErrorTypes) out << '\t' << info.code;
    out << '\n';
    for (const auto& [lang, dist] : data.planted) {
      out << lang;
      for (const auto& info : kErrorTypes) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", dist[info.type]);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  if (!data.parses.empty()) {
    fs::create_directories(dir / "conllu");
    for (const auto& [doc_id, doc] : data.parses) {
      std::ofstream out(dir / "conllu" / (doc_id + ".conllu"));
      write_conllu(out, doc);
    }
  }
}

}  // namespace typoesl
