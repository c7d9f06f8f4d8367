#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace typoesl {

struct ConlluToken {
  int id = 0;
  std::string form;
  std::string lemma;
  std::string upos;
  std::string xpos;
  std::string feats;
  int head = 0;  // 0 = root
  std::string deprel;
};

using ConlluSentence = std::vector<ConlluToken>;

struct ConlluDocument {
  std::vector<ConlluSentence> sentences;
  /// Value of a "# native_language = X" comment, if any.
  std::string native_language;
};

/// Standard 10-column CoNLL-U. Multiword ranges (1-2) and empty nodes (1.1)
/// are skipped. UPOS, HEAD and DEPREL must be populated on every word line.
ConlluDocument parse_conllu(std::istream& in, const std::string& source_name);
ConlluDocument load_conllu(const std::filesystem::path& path);

}  // namespace typoesl
