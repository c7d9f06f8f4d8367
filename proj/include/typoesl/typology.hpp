#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace typoesl {

/// Reg uses the native-language one-hot blocks only; RegCA appends the
/// "differs from English" indicators.
enum class FeatureMode { Reg, RegCA };

std::string_view to_string(FeatureMode mode);
FeatureMode parse_feature_mode(std::string_view text);

struct WalsFeature {
  std::string id;
  std::string name;
  std::string category;
  std::vector<std::string> value_names;  // sorted, unique

  std::optional<std::size_t> value_index(std::string_view value) const;
};

/// feature id -> value label, for one language. Absent key means undocumented.
using Assignments = std::map<std::string, std::string, std::less<>>;

/// Languages x categorical features with missing values. Immutable once built.
class TypologyDatabase {
 public:
  TypologyDatabase() = default;
  /// Validates that every assignment names a known feature and one of its values.
  TypologyDatabase(std::vector<WalsFeature> features,
                   std::map<std::string, Assignments, std::less<>> languages,
                   std::string english_code = "eng");

  const std::vector<WalsFeature>& features() const { return features_; }
  const WalsFeature& feature(std::string_view id) const;
  bool has_feature(std::string_view id) const;
  /// Position of the feature in features(), if present.
  std::optional<std::size_t> feature_position(std::string_view id) const;

  std::vector<std::string> languages() const;
  bool has_language(std::string_view lang) const;
  const Assignments& assignments(std::string_view lang) const;
  std::optional<std::string> value(std::string_view lang, std::string_view feature_id) const;

  const std::string& english_code() const { return english_code_; }
  bool has_english() const;

  /// Copy keeping only the listed languages (unknown codes are ignored).
  TypologyDatabase restrict_languages(const std::set<std::string, std::less<>>& keep) const;

  /// Average number of documented features over `langs` (all languages when empty).
  double mean_documented_features(const std::vector<std::string>& langs = {}) const;
  double mean_values_per_feature() const;

 private:
  std::vector<WalsFeature> features_;  // sorted by id
  std::map<std::string, std::size_t, std::less<>> feature_index_;
  std::map<std::string, Assignments, std::less<>> languages_;
  std::string english_code_ = "eng";
};

/// Reads the flat TSV format with header
/// language_code, feature_id, feature_name, category, value_label.
TypologyDatabase parse_typology(std::istream& in, const std::string& source_name,
                                const std::string& english_code = "eng");
TypologyDatabase load_typology(const std::filesystem::path& path,
                               const std::string& english_code = "eng");
void write_typology(std::ostream& out, const TypologyDatabase& db);

/// Drops Phonology, Lexicon, Sign Languages and Other features, then every
/// feature documented for at most one language or constant over its
/// documented languages. Value sets are recomputed from the survivors.
TypologyDatabase filter_features(const TypologyDatabase& db);

struct FeatureSlot {
  std::string feature_id;
  std::string value;  // empty for divergence slots
  bool divergence = false;
  std::string description;
};

/// Index -> slot manifest shared by all vectors from one encoder.
class FeatureLayout {
 public:
  FeatureLayout(FeatureMode mode, std::vector<FeatureSlot> slots, std::size_t binarized_size);

  FeatureMode mode() const { return mode_; }
  std::size_t size() const { return slots_.size(); }
  std::size_t binarized_size() const { return binarized_size_; }
  const FeatureSlot& slot(std::size_t i) const { return slots_.at(i); }
  const std::vector<FeatureSlot>& slots() const { return slots_; }
  /// FNV-1a over the slot descriptions; used to tag serialized models.
  std::uint64_t hash() const;
  /// Two-column text: index, slot description.
  void write_manifest(std::ostream& out) const;

 private:
  FeatureMode mode_;
  std::vector<FeatureSlot> slots_;
  std::size_t binarized_size_;
};

struct EncodedFeatureVector {
  Eigen::VectorXd values;
  FeatureMode mode = FeatureMode::Reg;
  std::shared_ptr<const FeatureLayout> layout;
};

/// Fixes the slot layout for a database and encodes languages (or arbitrary
/// assignment maps, e.g. projected typologies) against it.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(TypologyDatabase db);

  const TypologyDatabase& database() const { return db_; }
  /// Throws ConfigError for RegCA when English is absent.
  std::shared_ptr<const FeatureLayout> layout(FeatureMode mode) const;

  Eigen::VectorXd binarize(const Assignments& assignments) const;
  Eigen::VectorXd divergence(const Assignments& assignments) const;

  EncodedFeatureVector encode(std::string_view lang, FeatureMode mode) const;
  EncodedFeatureVector encode_assignments(const Assignments& assignments, FeatureMode mode) const;

 private:
  TypologyDatabase db_;
  std::shared_ptr<const FeatureLayout> reg_layout_;
  std::shared_ptr<const FeatureLayout> regca_layout_;
  std::vector<std::size_t> block_offset_;       // per feature, into the binarized block
  std::vector<std::size_t> divergence_feature_;  // feature indices English documents
  std::vector<std::string> english_value_;       // parallel to divergence_feature_
};

EncodedFeatureVector binarize(const TypologyDatabase& db, std::string_view lang);
/// Divergence block only (length = number of English-documented features).
Eigen::VectorXd divergence_encode(const TypologyDatabase& db, std::string_view lang);
EncodedFeatureVector encode(const TypologyDatabase& db, std::string_view lang, FeatureMode mode);
/// Cosine of the Reg-mode vectors of two languages.
double typological_cosine(const TypologyDatabase& db, std::string_view l1, std::string_view l2);

}  // namespace typoesl
