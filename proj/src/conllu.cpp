#include "typoesl/conllu.hpp"

#include "typoesl/errors.hpp"
#include "typoesl/util.hpp"

#include <charconv>
#include <fstream>
#include <istream>

namespace typoesl {

namespace {

bool parse_int(const std::string& s, int& out) {
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

void check_sentence(const ConlluSentence& sentence, const std::string& source, std::size_t line) {
  const int n = static_cast<int>(sentence.size());
  for (int i = 0; i < n; ++i) {
    const auto& t = sentence[static_cast<std::size_t>(i)];
    if (t.id != i + 1) throw ParseError(source, line, "token ids are not consecutive from 1");
    if (t.head < 0 || t.head > n) {
      throw ParseError(source, line, "head " + std::to_string(t.head) + " outside the sentence");
    }
  }
}

}  // namespace

ConlluDocument parse_conllu(std::istream& in, const std::string& source_name) {
  ConlluDocument doc;
  ConlluSentence current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (current.empty()) return;
    check_sentence(current, source_name, line_no);
    doc.sentences.push_back(std::move(current));
    current.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      const auto body = trim(std::string_view(line).substr(1));
      constexpr std::string_view key = "native_language";
      if (body.rfind(key, 0) == 0) {
        const auto rest = trim(body.substr(key.size()));
        if (!rest.empty() && rest.front() == '=') doc.native_language = std::string(trim(rest.substr(1)));
      }
      continue;
    }
    const auto cols = split(line, '\t');
    if (cols.size() != 10) {
      throw ParseError(source_name, line_no, "expected 10 tab-separated columns, got " +
                                                 std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string::npos || cols[0].find('.') != std::string::npos) continue;
    ConlluToken t;
    if (!parse_int(cols[0], t.id)) throw ParseError(source_name, line_no, "bad token id '" + cols[0] + "'");
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    if (!parse_int(cols[6], t.head)) throw ParseError(source_name, line_no, "bad head '" + cols[6] + "'");
    t.deprel = cols[7];
    if (t.upos.empty() || t.upos == "_") throw ParseError(source_name, line_no, "UPOS is not populated");
    if (t.deprel.empty() || t.deprel == "_") throw ParseError(source_name, line_no, "DEPREL is not populated");
    current.push_back(std::move(t));
  }
  flush();
  return doc;
}

ConlluDocument load_conllu(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_conllu(in, path.string());
}

}  // namespace typoesl
