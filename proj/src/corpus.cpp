#include "typoesl/corpus.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/util.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

namespace typoesl {

std::int64_t Document::total_errors() const {
  return std::accumulate(error_counts.begin(), error_counts.end(), std::int64_t{0});
}

std::string_view to_string(Pooling pooling) {
  return pooling == Pooling::PooledCounts ? "pooled" : "mean-of-documents";
}

Pooling parse_pooling(std::string_view text) {
  if (text == "pooled") return Pooling::PooledCounts;
  if (text == "mean" || text == "mean-of-documents") return Pooling::MeanOfDocuments;
  throw ConfigError("unknown pooling '" + std::string(text) + "'");
}

Corpus::Corpus(std::vector<Document> documents) : documents_(std::move(documents)) {
  std::set<std::string, std::less<>> ids;
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    const auto& d = documents_[i];
    if (!ids.insert(d.doc_id).second) throw DataError("duplicate doc_id " + d.doc_id);
    if (d.word_count < 1) throw DataError("document " + d.doc_id + " has word_count < 1");
    for (auto c : d.error_counts) {
      if (c < 0) throw DataError("document " + d.doc_id + " has a negative error count");
    }
    by_language_[d.native_language].push_back(i);
  }
}

std::vector<std::string> Corpus::languages() const {
  std::vector<std::string> out;
  for (const auto& [lang, _] : by_language_) out.push_back(lang);
  return out;
}

bool Corpus::has_language(std::string_view lang) const {
  return by_language_.find(lang) != by_language_.end();
}

std::vector<const Document*> Corpus::documents(std::string_view lang) const {
  const auto it = by_language_.find(lang);
  if (it == by_language_.end()) throw LookupError("language " + std::string(lang) + " not in corpus");
  std::vector<const Document*> out;
  out.reserve(it->second.size());
  for (auto i : it->second) out.push_back(&documents_[i]);
  return out;
}

double Corpus::mean_word_count() const {
  if (documents_.empty()) return 0.0;
  double total = 0.0;
  for (const auto& d : documents_) total += static_cast<double>(d.word_count);
  return total / static_cast<double>(documents_.size());
}

ErrorCounts Corpus::type_totals() const {
  ErrorCounts out{};
  for (const auto& d : documents_) {
    for (std::size_t e = 0; e < kNumErrorTypes; ++e) out[e] += d.error_counts[e];
  }
  return out;
}

Corpus parse_corpus(std::istream& in, const std::string& source_name) {
  using nlohmann::json;
  std::vector<Document> docs;
  std::set<std::string, std::less<>> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    const auto where = source_name + ":" + std::to_string(line_no) + ": ";
    Document d;
    try {
      d.doc_id = rec.at("doc_id").get<std::string>();
      d.native_language = rec.at("native_language").get<std::string>();
      d.word_count = rec.at("word_count").get<std::int64_t>();
      for (const auto& [code, value] : rec.at("errors").items()) {
        const auto type = parse_error_code(code);
        if (!type) throw DataError(where + "unknown error code '" + code + "'");
        const auto n = value.get<std::int64_t>();
        if (n < 0) throw DataError(where + "negative count for " + code);
        d.error_counts[index_of(*type)] += n;
      }
    } catch (const json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (d.word_count < 1) throw DataError(where + "word_count must be >= 1");
    if (!ids.insert(d.doc_id).second) throw DataError(where + "duplicate doc_id " + d.doc_id);
    docs.push_back(std::move(d));
  }
  return Corpus(std::move(docs));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in, path.string());
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  using nlohmann::ordered_json;
  for (const auto& d : corpus.all_documents()) {
    ordered_json rec;
    rec["doc_id"] = d.doc_id;
    rec["native_language"] = d.native_language;
    rec["word_count"] = d.word_count;
    ordered_json errors = ordered_json::object();
    for (const auto& info : kErrorTypes) {
      const auto n = d.count(info.type);
      if (n > 0) errors[std::string(info.code)] = n;
    }
    rec["errors"] = std::move(errors);
    out << rec.dump() << '\n';
  }
}

ErrorDistribution doc_error_fractions(const Document& doc) {
  if (doc.total_errors() == 0) {
    throw EmptySampleError("document " + doc.doc_id + " has no structural errors");
  }
  ErrorVector v;
  for (std::size_t e = 0; e < kNumErrorTypes; ++e) {
    v(static_cast<Eigen::Index>(e)) = static_cast<double>(doc.error_counts[e]);
  }
  return ErrorDistribution::normalized(v);
}

ErrorDistribution language_error_distribution(const Corpus& corpus, std::string_view lang,
                                              Pooling pooling) {
  const auto docs = corpus.documents(lang);
  ErrorVector acc = ErrorVector::Zero();
  if (pooling == Pooling::PooledCounts) {
    for (const auto* d : docs) {
      for (std::size_t e = 0; e < kNumErrorTypes; ++e) {
        acc(static_cast<Eigen::Index>(e)) += static_cast<double>(d->error_counts[e]);
      }
    }
  } else {
    for (const auto* d : docs) {
      if (d->total_errors() == 0) continue;
      acc += doc_error_fractions(*d).values();
    }
  }
  if (!(acc.sum() > 0.0)) {
    throw EmptySampleError("language " + std::string(lang) + " has no structural errors");
  }
  return ErrorDistribution::normalized(acc);
}

std::map<std::string, ErrorDistribution, std::less<>> language_targets(const Corpus& corpus,
                                                                       Pooling pooling) {
  std::map<std::string, ErrorDistribution, std::less<>> out;
  for (const auto& lang : corpus.languages()) {
    try {
      out.emplace(lang, language_error_distribution(corpus, lang, pooling));
    } catch (const EmptySampleError&) {
    }
  }
  return out;
}

}  // namespace typoesl
