#pragma once

#include "typoesl/error_types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace typoesl {

using ErrorCounts = std::array<std::int64_t, kNumErrorTypes>;

struct Document {
  std::string doc_id;
  std::string native_language;
  std::int64_t word_count = 1;
  ErrorCounts error_counts{};

  std::int64_t total_errors() const;
  std::int64_t count(ErrorType e) const { return error_counts[index_of(e)]; }
};

/// How per-language targets are formed from documents.
enum class Pooling {
  PooledCounts,     // sum counts over documents, then normalize
  MeanOfDocuments,  // average the per-document fraction vectors
};

std::string_view to_string(Pooling pooling);
Pooling parse_pooling(std::string_view text);

/// Error-annotated documents grouped by native language. Immutable.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DataError on duplicate doc ids or word_count < 1.
  explicit Corpus(std::vector<Document> documents);

  std::vector<std::string> languages() const;
  bool has_language(std::string_view lang) const;
  /// Documents of one language, in input order.
  std::vector<const Document*> documents(std::string_view lang) const;
  const std::vector<Document>& all_documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  double mean_word_count() const;
  /// Corpus-wide count per error type.
  ErrorCounts type_totals() const;

 private:
  std::vector<Document> documents_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> by_language_;
};

/// One JSON object per line:
///   {"doc_id": str, "native_language": str, "word_count": int >= 1,
///    "errors": {CODE: int >= 0, ...}, "spans": [...] (optional, ignored)}
Corpus parse_corpus(std::istream& in, const std::string& source_name);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);

/// Throws EmptySampleError for a document without structural errors.
ErrorDistribution doc_error_fractions(const Document& doc);

ErrorDistribution language_error_distribution(const Corpus& corpus, std::string_view lang,
                                              Pooling pooling = Pooling::PooledCounts);

/// Target distribution for every language with at least one error.
std::map<std::string, ErrorDistribution, std::less<>> language_targets(
    const Corpus& corpus, Pooling pooling = Pooling::PooledCounts);

}  // namespace typoesl
