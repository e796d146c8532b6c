#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ocralign/common.hpp"
#include "ocralign/unicode.hpp"

namespace ocralign {

// ---------------------------------------------------------------------------
// Sentences and parallel corpora
// ---------------------------------------------------------------------------

struct Sentence {
  std::vector<std::string> tokens;
  std::string raw;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
};

using Tokenizer = std::function<std::vector<std::string>(std::string_view)>;

// Maximal runs of non-whitespace. UTF-8 safe: multi-byte sequences never
// contain ASCII whitespace bytes.
inline std::vector<std::string> whitespace_tokenize(std::string_view line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) tokens.emplace_back(line.substr(start, i - start));
  }
  return tokens;
}

inline Sentence tokenize(std::string_view line, const Tokenizer& tok = whitespace_tokenize) {
  Sentence s;
  s.raw = std::string(line);
  s.tokens = tok(line);
  return s;
}

struct SentencePair {
  Sentence source;
  Sentence target;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

// Splits file contents into LF-terminated lines. "a\nb\n" -> {"a","b"},
// a missing final LF is tolerated, an empty file has no lines.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= content.size()) {
    std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) {
      if (start < content.size()) lines.push_back(content.substr(start));
      break;
    }
    lines.push_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

inline ParallelCorpus load_parallel(const std::filesystem::path& src_path,
                                    const std::filesystem::path& tgt_path,
                                    const Tokenizer& tok = whitespace_tokenize) {
  auto src_lines = read_lines(src_path);
  auto tgt_lines = read_lines(tgt_path);
  if (src_lines.size() != tgt_lines.size()) {
    throw DataError("line count mismatch " + std::to_string(src_lines.size()) + " vs " +
                    std::to_string(tgt_lines.size()) + " (" + src_path.string() + ", " +
                    tgt_path.string() + ")");
  }
  ParallelCorpus corpus;
  corpus.pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    for (const auto* side : {&src_lines[i], &tgt_lines[i]}) {
      try {
        decode_utf8(*side);
      } catch (const DataError& e) {
        throw DataError("line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    corpus.pairs.push_back({tokenize(src_lines[i], tok), tokenize(tgt_lines[i], tok)});
  }
  return corpus;
}

inline void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& src_path,
                          const std::filesystem::path& tgt_path) {
  std::vector<std::string> src, tgt;
  src.reserve(corpus.size());
  tgt.reserve(corpus.size());
  for (const auto& p : corpus.pairs) {
    src.push_back(p.source.raw);
    tgt.push_back(p.target.raw);
  }
  write_lines(src, src_path);
  write_lines(tgt, tgt_path);
}

// ---------------------------------------------------------------------------
// Alignments
// ---------------------------------------------------------------------------

struct AlignmentLink {
  int src = 0;  // 0-based source token index
  int tgt = 0;  // 0-based target token index

  auto operator<=>(const AlignmentLink&) const = default;
};

struct AlignmentSet {
  std::set<AlignmentLink> links;

  void add(AlignmentLink link) { links.insert(link); }
  void add(int src, int tgt) { links.insert({src, tgt}); }
  bool contains(AlignmentLink link) const { return links.count(link) > 0; }
  bool contains(int src, int tgt) const { return contains({src, tgt}); }
  std::size_t size() const { return links.size(); }
  bool empty() const { return links.empty(); }

  bool operator==(const AlignmentSet&) const = default;
};

// Sure links S plus possible links P, S ⊆ P by construction.
struct GoldAlignment {
  AlignmentSet sure;
  AlignmentSet possible;
};

namespace detail {

// Parses one "i-j" or "i?j" token; sep reports which one was found.
inline AlignmentLink parse_link_token(std::string_view tok, bool one_indexed, char& sep,
                                      const std::string& where) {
  std::size_t pos = tok.find_first_of("-?");
  if (pos == std::string_view::npos || pos == 0 || pos + 1 >= tok.size()) {
    throw DataError(where + ": malformed alignment token '" + std::string(tok) + "'");
  }
  sep = tok[pos];
  auto parse_index = [&](std::string_view digits) -> int {
    int value = 0;
    if (digits.empty()) throw DataError(where + ": malformed alignment token '" + std::string(tok) + "'");
    for (char c : digits) {
      if (c < '0' || c > '9') {
        throw DataError(where + ": malformed alignment token '" + std::string(tok) + "'");
      }
      value = value * 10 + (c - '0');
      if (value > 1000000000) throw DataError(where + ": alignment index out of range in '" + std::string(tok) + "'");
    }
    return value;
  };
  int src = parse_index(tok.substr(0, pos));
  int tgt = parse_index(tok.substr(pos + 1));
  if (one_indexed) {
    if (src == 0 || tgt == 0) {
      throw DataError(where + ": index 0 in one-indexed alignment token '" + std::string(tok) + "'");
    }
    --src;
    --tgt;
  }
  return {src, tgt};
}

}  // namespace detail

// Pharaoh format: whitespace-separated "i-j" tokens, one line per sentence
// pair, 0-based unless one_indexed is set.
inline std::vector<AlignmentSet> read_alignments(const std::filesystem::path& path,
                                                 bool one_indexed = false) {
  auto lines = read_lines(path);
  std::vector<AlignmentSet> sets;
  sets.reserve(lines.size());
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    AlignmentSet set;
    for (const auto& tok : whitespace_tokenize(lines[ln])) {
      char sep = 0;
      auto link = detail::parse_link_token(tok, one_indexed, sep,
                                           path.string() + ":" + std::to_string(ln + 1));
      if (sep != '-') {
        throw DataError(path.string() + ":" + std::to_string(ln + 1) +
                        ": possible-only token '" + tok + "' in a sure-only alignment file");
      }
      set.add(link);
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

// Gold format: "i-j" marks a sure link, "i?j" a possible-only link. Sure
// links are folded into the possible set so S ⊆ P always holds.
inline std::vector<GoldAlignment> read_gold(const std::filesystem::path& path,
                                            bool one_indexed = false) {
  auto lines = read_lines(path);
  std::vector<GoldAlignment> gold;
  gold.reserve(lines.size());
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    GoldAlignment g;
    for (const auto& tok : whitespace_tokenize(lines[ln])) {
      char sep = 0;
      auto link = detail::parse_link_token(tok, one_indexed, sep,
                                           path.string() + ":" + std::to_string(ln + 1));
      if (sep == '-') g.sure.add(link);
      g.possible.add(link);
    }
    gold.push_back(std::move(g));
  }
  return gold;
}

inline std::string format_alignment_line(const AlignmentSet& set) {
  std::string line;
  for (const auto& link : set.links) {  // std::set orders by (src, tgt)
    if (!line.empty()) line += ' ';
    line += std::to_string(link.src);
    line += '-';
    line += std::to_string(link.tgt);
  }
  return line;
}

inline void write_alignments(const std::vector<AlignmentSet>& sets,
                             const std::filesystem::path& path) {
  std::vector<std::string> lines;
  lines.reserve(sets.size());
  for (const auto& set : sets) lines.push_back(format_alignment_line(set));
  write_lines(lines, path);
}

}  // namespace ocralign
