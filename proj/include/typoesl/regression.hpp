#pragma once

#include "typoesl/error_types.hpp"
#include "typoesl/typology.hpp"

#include <Eigen/Core>

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace typoesl {

/// Per-language target distributions, keyed by language code.
using LanguageTargets = std::map<std::string, ErrorDistribution, std::less<>>;

enum class System { Base, NN, Reg, RegCA };

std::string_view to_string(System system);
System parse_system(std::string_view text);
inline constexpr std::array<System, 4> kAllSystems{System::Base, System::NN, System::Reg, System::RegCA};

struct RegressionConfig {
  double ridge = 0.0;
  double clamp_epsilon = 1e-6;
  bool fit_intercept = true;
};

/// One linear model per error type over a fixed feature layout.
struct RegressorSet {
  FeatureMode mode = FeatureMode::Reg;
  std::shared_ptr<const FeatureLayout> layout;
  Eigen::MatrixXd weights;  // dimension x 20, column e is the model of error type e
  ErrorVector intercepts = ErrorVector::Zero();
  std::vector<std::string> training_languages;

  Eigen::Index dimension() const { return weights.rows(); }
  Eigen::VectorXd weights_for(ErrorType e) const {
    return weights.col(static_cast<Eigen::Index>(index_of(e)));
  }
  /// Unnormalized per-type outputs.
  ErrorVector raw_predict(const Eigen::VectorXd& x) const;
};

/// Fits the 20 regressors on every language in `targets` except `held_out`.
/// Only training languages' encodings and targets enter the fit.
RegressorSet train_models(const FeatureEncoder& encoder, const LanguageTargets& targets,
                          FeatureMode mode, std::string_view held_out,
                          const RegressionConfig& config = {});

/// Clamp raw outputs below at epsilon, then renormalize. Throws
/// DegeneratePredictionError if every raw output is <= 0.
ErrorDistribution predict_distribution(const RegressorSet& models,
                                       const EncodedFeatureVector& encoding,
                                       double epsilon = 1e-6);

/// Unweighted mean of the training languages' distributions.
ErrorDistribution baseline_base(const LanguageTargets& targets, std::string_view held_out);

struct NeighborChoice {
  std::string language;
  double similarity = 0.0;
};

/// Training language (any language in `targets` other than held_out) with the
/// highest cosine to `query` on Reg-mode vectors. Ties go to the smallest code.
NeighborChoice nearest_typological_neighbor(const FeatureEncoder& encoder,
                                            const LanguageTargets& targets,
                                            std::string_view held_out,
                                            const Eigen::VectorXd& query);

ErrorDistribution baseline_nn(const FeatureEncoder& encoder, const LanguageTargets& targets,
                              std::string_view held_out);

struct PredictionRecord {
  std::string language;
  System system = System::Base;
  ErrorDistribution predicted = ErrorDistribution::uniform();
  ErrorDistribution truth = ErrorDistribution::uniform();
  /// Set when a regression fold had to fall back to Base.
  bool fell_back = false;
  /// NN-only: the neighbor that supplied the prediction.
  std::string neighbor;
};

struct LeaveOneOutOptions {
  RegressionConfig regression;
  /// Bounds the number of folds run concurrently.
  int jobs = 1;
  /// Typology used to encode the held-out language. Defaults to its true
  /// documented typology; the bootstrap path substitutes a projection.
  std::function<Assignments(const std::string&)> test_typology;
};

struct LeaveOneOutResult {
  std::vector<PredictionRecord> records;
  /// Fold models keyed by mode, in language order.
  std::map<FeatureMode, std::vector<RegressorSet>> fold_models;
};

/// Holds out each language in turn. Every target language must be present in
/// the encoder's database; otherwise DataError lists the unmatched codes.
LeaveOneOutResult leave_one_out(const FeatureEncoder& encoder, const LanguageTargets& targets,
                                std::span<const System> systems,
                                const LeaveOneOutOptions& options = {});

struct SalienceEntry {
  std::size_t slot = 0;
  std::string description;
  double mean_weight = 0.0;
};

/// Slots ranked by weight averaged over fold models, descending; equal
/// weights keep slot order.
std::vector<SalienceEntry> feature_salience(std::span<const RegressorSet> models, ErrorType e);
/// Most positive first.
std::vector<SalienceEntry> top_positive(const std::vector<SalienceEntry>& ranked, std::size_t n);
/// Most negative first.
std::vector<SalienceEntry> top_negative(const std::vector<SalienceEntry>& ranked, std::size_t n);
void write_salience_tsv(std::ostream& out, const std::vector<SalienceEntry>& ranked);

/// Versioned flat text: header, mode, layout hash, dimension, training
/// languages, then one row per error type (code, intercept, weights).
void write_regressor_set(std::ostream& out, const RegressorSet& models);
/// `layout` must hash to the stored value; throws DataError otherwise.
RegressorSet read_regressor_set(std::istream& in, std::shared_ptr<const FeatureLayout> layout);

}  // namespace typoesl
