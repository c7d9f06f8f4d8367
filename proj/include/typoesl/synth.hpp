#pragma once

#include "typoesl/conllu.hpp"
#include "typoesl/corpus.hpp"
#include "typoesl/regression.hpp"
#include "typoesl/typology.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace typoesl {

enum class PlantedLink {
  /// normalize(softplus(bias + W^T f + noise)); always valid.
  Softplus,
  /// bias + W^T f with W's rows summing to zero across error types, so the
  /// distribution is exactly linear in the encoding (noise breaks this).
  Affine,
};

struct SynthConfig {
  int n_languages = 14;
  int n_features = 30;
  int values_per_feature = 3;
  int docs_per_language = 120;
  double words_per_doc_mean = 379.0;
  double errors_per_word = 0.05;
  /// Probability that a (language, feature) cell is undocumented. English is complete.
  double missing_rate = 0.1;
  /// Languages are mutated copies of family prototypes.
  int n_families = 4;
  double mutation_rate = 0.2;
  /// Relative size of the planted typology effects.
  double effect_scale = 0.5;
  /// Fraction of slots with a nonzero planted weight.
  double weight_density = 0.3;
  double noise_scale = 0.05;
  PlantedLink link = PlantedLink::Softplus;
  /// Optional explicit map over the filtered RegCA layout (slots x 20).
  std::map<ErrorType, Eigen::VectorXd> planted_weights;
  /// Sentences per generated CoNLL-U document; 0 disables parse generation.
  int sentences_per_doc = 0;
  std::uint64_t seed = 42;
  std::string english_code = "eng";

  /// Throws ConfigError on a degenerate configuration.
  void validate() const;
};

struct SynthData {
  TypologyDatabase typology;  // unfiltered, includes English
  Corpus corpus;
  LanguageTargets planted;    // per corpus language
  Eigen::MatrixXd planted_weights;  // filtered RegCA slots x 20
  ErrorVector planted_bias = ErrorVector::Zero();
  std::map<std::string, ConlluDocument> parses;  // doc_id -> document
};

SynthData generate(const SynthConfig& config);

/// Writes typology.tsv, corpus.jsonl, planted.tsv and, when parses exist,
/// conllu/<doc_id>.conllu.
void write_synth(const SynthData& data, const std::filesystem::path& dir);
void write_conllu(std::ostream& out, const ConlluDocument& doc);

}  // namespace typoesl
