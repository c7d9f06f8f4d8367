#pragma once

#include "typoesl/conllu.hpp"
#include "typoesl/regression.hpp"
#include "typoesl/typology.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace typoesl {

/// Relative frequencies of three families, each normalized on its own:
/// "pos:UPOS", "dep:DEPREL" and "arc:HEAD>DEP:DEPREL" (root attachments
/// have no head POS and are not arcs). A family with no observations stays
/// empty.
struct MorphoSyntacticProfile {
  std::string doc_id;
  std::string native_language;
  std::map<std::string, double, std::less<>> features;
};

/// Throws DataError("empty profile") for a document without tokens.
MorphoSyntacticProfile extract_profile(const ConlluDocument& doc, const std::string& doc_id,
                                       const std::string& native_language);
/// doc_id is the file stem; language falls back to the file's comment.
MorphoSyntacticProfile extract_profile(const std::filesystem::path& conllu_file,
                                       const std::string& native_language = {});

/// Line-delimited JSON: {"doc_id", "native_language", "features": {name: value}}.
void write_profiles(std::ostream& out, std::span<const MorphoSyntacticProfile> profiles);
std::vector<MorphoSyntacticProfile> read_profiles(std::istream& in, const std::string& source_name);

/// Feature-name -> column map plus a trailing constant bias column.
class FeatureSpace {
 public:
  FeatureSpace() = default;
  explicit FeatureSpace(std::span<const MorphoSyntacticProfile> profiles);

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(names_.size()) + 1; }
  const std::vector<std::string>& names() const { return names_; }
  /// Unseen feature names are dropped.
  Eigen::VectorXd vectorize(const MorphoSyntacticProfile& profile) const;
  Eigen::MatrixXd design(std::span<const MorphoSyntacticProfile> profiles) const;

 private:
  std::vector<std::string> names_;
  std::map<std::string, Eigen::Index, std::less<>> index_;
};

/// Sum of log p(y_i | x_i) - lambda/2 ||W||^2 for softmax(W^T x), where W is
/// dimension x classes. Writes the gradient w.r.t. W when requested.
double regularized_log_likelihood(const Eigen::MatrixXd& X, std::span<const int> labels,
                                  double lambda, const Eigen::MatrixXd& W,
                                  Eigen::MatrixXd* gradient = nullptr);

struct ClassifierConfig {
  double lambda = 1.0;
  double gradient_tolerance = 1e-5;
  int max_iterations = 5000;
  int memory = 10;
};

struct OptimizationTrace {
  std::vector<double> objective;  // one entry per accepted iterate, starting at W = 0
  double gradient_norm = 0.0;
  int iterations = 0;
};

class LogLinearModel {
 public:
  LogLinearModel(std::vector<std::string> classes, FeatureSpace space, Eigen::MatrixXd weights,
                 double lambda, OptimizationTrace trace);

  const std::vector<std::string>& classes() const { return classes_; }
  const FeatureSpace& space() const { return space_; }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double lambda() const { return lambda_; }
  const OptimizationTrace& trace() const { return trace_; }

  Eigen::VectorXd posterior(const MorphoSyntacticProfile& profile) const;

 private:
  std::vector<std::string> classes_;
  FeatureSpace space_;
  Eigen::MatrixXd weights_;
  double lambda_;
  OptimizationTrace trace_;
};

/// Maximizes the regularized conditional log-likelihood with L-BFGS and an
/// Armijo backtracking line search (so the objective never decreases).
/// Throws OptimizationError if the gradient norm stays above tolerance.
LogLinearModel train_classifier(std::span<const MorphoSyntacticProfile> profiles,
                                const ClassifierConfig& config = {});

/// Square matrix over a language list. Raw confusion matrices need not be symmetric.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<std::string> languages, Eigen::MatrixXd values);

  const std::vector<std::string>& languages() const { return languages_; }
  const Eigen::MatrixXd& values() const { return values_; }
  std::size_t index_of(std::string_view lang) const;
  double operator()(std::string_view a, std::string_view b) const;
  bool is_symmetric(double tol = 0.0) const;

  /// TSV with a header row and first column of language codes.
  void write_tsv(std::ostream& out) const;

 private:
  std::vector<std::string> languages_;
  Eigen::MatrixXd values_;
};

/// S'[l][l'] = mean over documents of l of p(l' | x); diagonal forced to 1.
/// `posteriors` is documents x languages, `labels` indexes into `languages`.
SimilarityMatrix confusion_from_posteriors(const std::vector<std::string>& languages,
                                           std::span<const int> labels,
                                           const Eigen::MatrixXd& posteriors);

struct ConfusionOptions {
  ClassifierConfig classifier;
  int folds = 10;
  std::uint64_t seed = 42;
  /// Debug: replace every posterior by the uniform distribution.
  bool force_uniform = false;
};

struct ConfusionResult {
  std::vector<std::string> languages;
  std::vector<int> labels;             // per profile
  std::vector<int> fold_of;            // per profile, the fold that held it out
  std::vector<std::vector<std::size_t>> training_indices;  // per fold
  Eigen::MatrixXd posteriors;          // profiles x languages, out-of-sample
  SimilarityMatrix raw;                // S'
  double accuracy = 0.0;               // out-of-sample argmax accuracy
  std::vector<OptimizationTrace> traces;
};

/// Stratified k-fold: each language's documents are shuffled with the seed
/// and dealt round-robin into folds; each posterior comes from the model of
/// the fold that held the document out.
ConfusionResult confusion_similarity(std::span<const MorphoSyntacticProfile> profiles,
                                     const ConfusionOptions& options = {});

/// S[l][l'] = (S'[l][l'] + S'[l'][l]) / 2.
SimilarityMatrix symmetrize(const SimilarityMatrix& raw);

struct TypologyProjection {
  std::string target;
  std::string source;
  double similarity = 0.0;
  Assignments assignments;
};

/// Copies the documented assignments of the most similar other language that
/// has documented typology in `db`. Ties go to the smallest code. The target's
/// own entry in `db`, if any, is never consulted.
TypologyProjection project_typology(const std::string& target, const SimilarityMatrix& similarity,
                                    const TypologyDatabase& db);

struct ProjectionAccuracy {
  std::size_t compared = 0;  // features documented in both projection and truth
  std::size_t matched = 0;
  double accuracy() const { return compared == 0 ? 0.0 : static_cast<double>(matched) / compared; }
};

ProjectionAccuracy projection_accuracy(const Assignments& projected, const Assignments& truth);

struct BootstrapResult {
  LeaveOneOutResult loo;
  std::map<std::string, TypologyProjection, std::less<>> projections;
  ProjectionAccuracy accuracy;  // pooled over held-out languages
};

/// Leave-one-out where regressors are trained on the true typology of the
/// training languages and the held-out language is encoded from its projection.
BootstrapResult bootstrap_predict(const FeatureEncoder& encoder, const LanguageTargets& targets,
                                  const SimilarityMatrix& similarity,
                                  std::span<const System> systems,
                                  const LeaveOneOutOptions& options = {});

}  // namespace typoesl
