#include "typoesl/typology.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/metrics.hpp"
#include "typoesl/util.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>

namespace typoesl {

namespace {

constexpr std::array<std::string_view, 4> kExcludedCategories{
    "Phonology", "Lexicon", "Sign Languages", "Other"};

constexpr std::array<std::string_view, 5> kColumns{
    "language_code", "feature_id", "feature_name", "category", "value_label"};

}  // namespace

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::Reg ? "Reg" : "RegCA";
}

FeatureMode parse_feature_mode(std::string_view text) {
  if (text == "Reg" || text == "reg") return FeatureMode::Reg;
  if (text == "RegCA" || text == "regca") return FeatureMode::RegCA;
  throw ConfigError("unknown feature mode '" + std::string(text) + "'");
}

std::optional<std::size_t> WalsFeature::value_index(std::string_view value) const {
  const auto it = std::lower_bound(value_names.begin(), value_names.end(), value);
  if (it == value_names.end() || *it != value) return std::nullopt;
  return static_cast<std::size_t>(it - value_names.begin());
}

// ---------------------------------------------------------------------------
// TypologyDatabase

TypologyDatabase::TypologyDatabase(std::vector<WalsFeature> features,
                                   std::map<std::string, Assignments, std::less<>> languages,
                                   std::string english_code)
    : features_(std::move(features)),
      languages_(std::move(languages)),
      english_code_(std::move(english_code)) {
  std::sort(features_.begin(), features_.end(),
            [](const WalsFeature& a, const WalsFeature& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < features_.size(); ++i) {
    auto& f = features_[i];
    std::sort(f.value_names.begin(), f.value_names.end());
    if (std::adjacent_find(f.value_names.begin(), f.value_names.end()) != f.value_names.end()) {
      throw DataError("feature " + f.id + " lists a value twice");
    }
    if (!feature_index_.emplace(f.id, i).second) {
      throw DataError("duplicate feature id " + f.id);
    }
  }
  for (const auto& [lang, assignments] : languages_) {
    for (const auto& [fid, value] : assignments) {
      const auto it = feature_index_.find(fid);
      if (it == feature_index_.end()) {
        throw DataError("language " + lang + " references unknown feature " + fid);
      }
      if (!features_[it->second].value_index(value)) {
        throw DataError("language " + lang + " has value '" + value + "' not listed for " + fid);
      }
    }
  }
}

const WalsFeature& TypologyDatabase::feature(std::string_view id) const {
  const auto it = feature_index_.find(id);
  if (it == feature_index_.end()) throw LookupError("unknown feature " + std::string(id));
  return features_[it->second];
}

bool TypologyDatabase::has_feature(std::string_view id) const {
  return feature_index_.find(id) != feature_index_.end();
}

std::optional<std::size_t> TypologyDatabase::feature_position(std::string_view id) const {
  const auto it = feature_index_.find(id);
  if (it == feature_index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TypologyDatabase::languages() const {
  std::vector<std::string> out;
  out.reserve(languages_.size());
  for (const auto& [lang, _] : languages_) out.push_back(lang);
  return out;
}

bool TypologyDatabase::has_language(std::string_view lang) const {
  return languages_.find(lang) != languages_.end();
}

const Assignments& TypologyDatabase::assignments(std::string_view lang) const {
  const auto it = languages_.find(lang);
  if (it == languages_.end()) throw LookupError("language " + std::string(lang) + " not in typology");
  return it->second;
}

std::optional<std::string> TypologyDatabase::value(std::string_view lang,
                                                   std::string_view feature_id) const {
  const auto& a = assignments(lang);
  const auto it = a.find(feature_id);
  if (it == a.end()) return std::nullopt;
  return it->second;
}

bool TypologyDatabase::has_english() const {
  const auto it = languages_.find(english_code_);
  return it != languages_.end() && !it->second.empty();
}

TypologyDatabase TypologyDatabase::restrict_languages(
    const std::set<std::string, std::less<>>& keep) const {
  std::map<std::string, Assignments, std::less<>> langs;
  for (const auto& [lang, a] : languages_) {
    if (keep.count(lang)) langs.emplace(lang, a);
  }
  return TypologyDatabase(features_, std::move(langs), english_code_);
}

double TypologyDatabase::mean_documented_features(const std::vector<std::string>& langs) const {
  std::size_t total = 0;
  std::size_t count = 0;
  if (langs.empty()) {
    for (const auto& [_, a] : languages_) {
      total += a.size();
      ++count;
    }
  } else {
    for (const auto& l : langs) {
      total += assignments(l).size();
      ++count;
    }
  }
  return count == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(count);
}

double TypologyDatabase::mean_values_per_feature() const {
  if (features_.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& f : features_) total += f.value_names.size();
  return static_cast<double>(total) / static_cast<double>(features_.size());
}

// ---------------------------------------------------------------------------
// I/O

TypologyDatabase parse_typology(std::istream& in, const std::string& source_name,
                                const std::string& english_code) {
  std::string line;
  std::size_t line_no = 0;
  std::array<std::size_t, 5> column{};
  bool have_header = false;
  std::size_t n_columns = 0;

  std::map<std::string, WalsFeature, std::less<>> features;
  std::map<std::string, std::set<std::string>, std::less<>> values;
  std::map<std::string, Assignments, std::less<>> languages;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split(line, '\t');
    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) {
          throw ParseError(source_name, line_no,
                           "header lacks column '" + std::string(kColumns[c]) + "'");
        }
        column[c] = static_cast<std::size_t>(it - fields.begin());
      }
      n_columns = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != n_columns) {
      throw ParseError(source_name, line_no,
                       "expected " + std::to_string(n_columns) + " fields, got " +
                           std::to_string(fields.size()));
    }
    std::array<std::string, 5> v;
    for (std::size_t c = 0; c < v.size(); ++c) {
      v[c] = std::string(trim(fields[column[c]]));
      if (v[c].empty()) {
        throw ParseError(source_name, line_no, "empty " + std::string(kColumns[c]));
      }
    }
    const auto& [lang, fid, fname, category, value] = v;

    auto [fit, inserted] = features.try_emplace(fid);
    if (inserted) {
      fit->second.id = fid;
      fit->second.name = fname;
      fit->second.category = category;
    } else if (fit->second.name != fname || fit->second.category != category) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": feature " + fid +
                      " has inconsistent name or category");
    }
    values[fid].insert(value);
    if (!languages[lang].emplace(fid, value).second) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": duplicate assignment for (" + lang + ", " + fid + ")");
    }
  }
  if (!have_header) throw ParseError(source_name, line_no, "missing header row");

  std::vector<WalsFeature> out;
  out.reserve(features.size());
  for (auto& [fid, f] : features) {
    const auto& vs = values[fid];
    f.value_names.assign(vs.begin(), vs.end());
    out.push_back(std::move(f));
  }
  return TypologyDatabase(std::move(out), std::move(languages), english_code);
}

TypologyDatabase load_typology(const std::filesystem::path& path, const std::string& english_code) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open typology file " + path.string());
  return parse_typology(in, path.string(), english_code);
}

void write_typology(std::ostream& out, const TypologyDatabase& db) {
  out << "language_code\tfeature_id\tfeature_name\tcategory\tvalue_label\n";
  for (const auto& lang : db.languages()) {
    for (const auto& [fid, value] : db.assignments(lang)) {
      const auto& f = db.feature(fid);
      out << lang << '\t' << fid << '\t' << f.name << '\t' << f.category << '\t' << value << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Filtering

TypologyDatabase filter_features(const TypologyDatabase& db) {
  std::vector<WalsFeature> kept;
  std::set<std::string, std::less<>> kept_ids;
  const auto langs = db.languages();
  for (const auto& f : db.features()) {
    if (std::find(kExcludedCategories.begin(), kExcludedCategories.end(), f.category) !=
        kExcludedCategories.end()) {
      continue;
    }
    std::set<std::string> seen;
    std::size_t documented = 0;
    for (const auto& lang : langs) {
      if (auto v = db.value(lang, f.id)) {
        ++documented;
        seen.insert(*v);
      }
    }
    if (documented <= 1 || seen.size() <= 1) continue;
    WalsFeature g = f;
    g.value_names.assign(seen.begin(), seen.end());
    kept.push_back(std::move(g));
    kept_ids.insert(f.id);
  }

  std::map<std::string, Assignments, std::less<>> languages;
  for (const auto& lang : langs) {
    Assignments a;
    for (const auto& [fid, value] : db.assignments(lang)) {
      if (kept_ids.count(fid)) a.emplace(fid, value);
    }
    languages.emplace(lang, std::move(a));
  }
  return TypologyDatabase(std::move(kept), std::move(languages), db.english_code());
}

// ---------------------------------------------------------------------------
// Layout and encoding

FeatureLayout::FeatureLayout(FeatureMode mode, std::vector<FeatureSlot> slots,
                             std::size_t binarized_size)
    : mode_(mode), slots_(std::move(slots)), binarized_size_(binarized_size) {}

std::uint64_t FeatureLayout::hash() const {
  Fnv1a h;
  h.update(to_string(mode_));
  for (const auto& s : slots_) {
    h.update("\n");
    h.update(s.description);
  }
  return h.digest();
}

void FeatureLayout::write_manifest(std::ostream& out) const {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    out << i << '\t' << slots_[i].description << '\n';
  }
}

FeatureEncoder::FeatureEncoder(TypologyDatabase db) : db_(std::move(db)) {
  std::vector<FeatureSlot> slots;
  const auto& features = db_.features();
  block_offset_.reserve(features.size());
  for (const auto& f : features) {
    block_offset_.push_back(slots.size());
    for (const auto& v : f.value_names) {
      slots.push_back({f.id, v, false, f.id + " " + f.name + ": " + v});
    }
  }
  const std::size_t binarized = slots.size();
  reg_layout_ = std::make_shared<FeatureLayout>(FeatureMode::Reg, slots, binarized);

  if (db_.has_english()) {
    const auto& eng = db_.assignments(db_.english_code());
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto it = eng.find(features[i].id);
      if (it == eng.end()) continue;
      divergence_feature_.push_back(i);
      english_value_.push_back(it->second);
      slots.push_back({features[i].id, "", true,
                       features[i].id + " " + features[i].name + ": Different from English"});
    }
    regca_layout_ = std::make_shared<FeatureLayout>(FeatureMode::RegCA, std::move(slots), binarized);
  }
}

std::shared_ptr<const FeatureLayout> FeatureEncoder::layout(FeatureMode mode) const {
  if (mode == FeatureMode::Reg) return reg_layout_;
  if (!regca_layout_) {
    throw ConfigError("English (" + db_.english_code() + ") is not documented; RegCA is unavailable");
  }
  return regca_layout_;
}

Eigen::VectorXd FeatureEncoder::binarize(const Assignments& assignments) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reg_layout_->size()));
  const auto& features = db_.features();
  for (const auto& [fid, value] : assignments) {
    const auto fi = db_.feature_position(fid);
    if (!fi) continue;  // filtered-out features carry no slots
    const auto k = features[*fi].value_index(value);
    if (!k) throw DataError("value '" + value + "' of " + fid + " has no slot in the layout");
    out(static_cast<Eigen::Index>(block_offset_[*fi] + *k)) = 1.0;
  }
  return out;
}

Eigen::VectorXd FeatureEncoder::divergence(const Assignments& assignments) const {
  if (!regca_layout_) {
    throw ConfigError("English (" + db_.english_code() + ") is not documented; no divergence features");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(divergence_feature_.size()));
  const auto& features = db_.features();
  for (std::size_t j = 0; j < divergence_feature_.size(); ++j) {
    const auto it = assignments.find(features[divergence_feature_[j]].id);
    if (it != assignments.end() && it->second != english_value_[j]) {
      out(static_cast<Eigen::Index>(j)) = 1.0;
    }
  }
  return out;
}

EncodedFeatureVector FeatureEncoder::encode_assignments(const Assignments& assignments,
                                                        FeatureMode mode) const {
  EncodedFeatureVector enc;
  enc.mode = mode;
  enc.layout = layout(mode);
  if (mode == FeatureMode::Reg) {
    enc.values = binarize(assignments);
  } else {
    const Eigen::VectorXd bin = binarize(assignments);
    const Eigen::VectorXd div = divergence(assignments);
    enc.values.resize(bin.size() + div.size());
    enc.values << bin, div;
  }
  return enc;
}

EncodedFeatureVector FeatureEncoder::encode(std::string_view lang, FeatureMode mode) const {
  return encode_assignments(db_.assignments(lang), mode);
}

EncodedFeatureVector binarize(const TypologyDatabase& db, std::string_view lang) {
  return FeatureEncoder(db).encode(lang, FeatureMode::Reg);
}

Eigen::VectorXd divergence_encode(const TypologyDatabase& db, std::string_view lang) {
  return FeatureEncoder(db).divergence(db.assignments(lang));
}

EncodedFeatureVector encode(const TypologyDatabase& db, std::string_view lang, FeatureMode mode) {
  return FeatureEncoder(db).encode(lang, mode);
}

double typological_cosine(const TypologyDatabase& db, std::string_view l1, std::string_view l2) {
  const FeatureEncoder enc(db);
  return cosine_similarity(enc.encode(l1, FeatureMode::Reg).values,
                           enc.encode(l2, FeatureMode::Reg).values);
}

}  // namespace typoesl
