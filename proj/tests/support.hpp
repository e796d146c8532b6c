// Shared test helpers: temp directories, random text generators, and the
// independent oracles the module tests check against.
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ocralign/corpus.hpp"
#include "ocralign/edit_model.hpp"
#include "ocralign/rng.hpp"

namespace testsupport {

inline std::filesystem::path fixture_dir() { return OCRALIGN_FIXTURE_DIR; }

// Fresh directory under the system temp root, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ocralign_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<std::uint64_t>(
                 std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this))));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Independent oracles
// ---------------------------------------------------------------------------

// Distance-only Levenshtein DP (two rows, no backtrace). Kept separate from
// the implementation under test on purpose.
inline std::size_t levenshtein_distance(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    prev.swap(cur);
  }
  return prev[b.size()];
}

// Plain-map IBM Model 1 EM, written independently of the library internals.
// Uniform init over each source word's co-occurring targets, NULL prepended.
class ReferenceIbm1 {
 public:
  ReferenceIbm1(const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>&
                    pairs,
                int iterations) {
    std::map<std::string, std::set<std::string>> cooc;
    for (const auto& [src, tgt] : pairs) {
      for (const auto& y : tgt) {
        cooc["<NULL>"].insert(y);
        for (const auto& x : src) cooc[x].insert(y);
      }
    }
    for (const auto& [x, ys] : cooc) {
      for (const auto& y : ys) t_[{x, y}] = 1.0 / static_cast<double>(ys.size());
    }
    for (int it = 0; it < iterations; ++it) {
      std::map<std::pair<std::string, std::string>, double> counts;
      std::map<std::string, double> totals;
      for (const auto& [src, tgt] : pairs) {
        std::vector<std::string> with_null = {"<NULL>"};
        with_null.insert(with_null.end(), src.begin(), src.end());
        for (const auto& y : tgt) {
          double denom = 0.0;
          for (const auto& x : with_null) denom += t_[{x, y}];
          for (const auto& x : with_null) {
            const double c = t_[{x, y}] / denom;
            counts[{x, y}] += c;
            totals[x] += c;
          }
        }
      }
      for (auto& [key, p] : t_) {
        const double c = counts.count(key) ? counts.at(key) : 0.0;
        p = std::max(c / totals.at(key.first), 1e-12);
      }
      std::map<std::string, double> sums;
      for (const auto& [key, p] : t_) sums[key.first] += p;
      for (auto& [key, p] : t_) p /= sums.at(key.first);
    }
  }

  double prob(const std::string& src, const std::string& tgt) const {
    auto it = t_.find({src, tgt});
    return it == t_.end() ? 0.0 : it->second;
  }

 private:
  std::map<std::pair<std::string, std::string>, double> t_;
};

// ---------------------------------------------------------------------------
// Deterministic synthetic data
// ---------------------------------------------------------------------------

// Monotone glossary corpus: every source word w<k> glosses to exactly one
// target word v<k>; sentences are index sequences drawn zipf-ishly, so
// frequent words co-occur with everything and position carries signal.
struct GlossaryCorpus {
  ocralign::ParallelCorpus corpus;
  std::vector<ocralign::AlignmentSet> gold_sets;  // diagonal links
};

inline GlossaryCorpus make_glossary_corpus(std::size_t pairs, std::size_t vocab,
                                           std::size_t min_len, std::size_t max_len,
                                           std::uint64_t seed) {
  GlossaryCorpus out;
  ocralign::SplitMix64 rng(seed);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::size_t len = min_len + rng.next_u64() % (max_len - min_len + 1);
    std::string src, tgt;
    ocralign::AlignmentSet gold;
    for (std::size_t i = 0; i < len; ++i) {
      // squared uniform -> low indices much more frequent
      const double u = rng.next_double();
      const auto k = static_cast<std::size_t>(u * u * static_cast<double>(vocab));
      if (i) {
        src += ' ';
        tgt += ' ';
      }
      src += "w" + std::to_string(k);
      tgt += "v" + std::to_string(k);
      gold.add(static_cast<int>(i), static_cast<int>(i));
    }
    out.corpus.pairs.push_back({ocralign::tokenize(src), ocralign::tokenize(tgt)});
    out.gold_sets.push_back(std::move(gold));
  }
  return out;
}

inline std::vector<ocralign::GoldAlignment> as_gold(const std::vector<ocralign::AlignmentSet>& sets) {
  std::vector<ocralign::GoldAlignment> gold;
  gold.reserve(sets.size());
  for (const auto& s : sets) gold.push_back({s, s});
  return gold;
}

// Hand-built OCR-ish error profile over the a..j + space alphabet. Insertion
// characters (x, z) and substitution targets (p, q, r) stay outside the text
// alphabet so round-trip extraction attributes every edit unambiguously.
inline ocralign::NoiseModel make_hand_noise_model() {
  using ocralign::kBeginContext;
  using ocralign::kEpsilon;
  ocralign::NoiseModel m;
  m.lines = 1000;
  for (char c : std::string("abcdefghij ")) {
    m.char_counts[static_cast<char32_t>(c)] = 10000;
  }
  auto sub = [&](char c, char d, double p) {
    m.sub[static_cast<char32_t>(c)][d == '\0' ? kEpsilon : static_cast<char32_t>(d)] = p;
  };
  sub('a', 'p', 0.030);
  sub('a', '\0', 0.010);
  sub('b', 'q', 0.025);
  sub('b', '\0', 0.005);
  sub('c', 'r', 0.040);
  sub('d', 'p', 0.020);
  sub('d', 'q', 0.010);
  sub('e', 'q', 0.015);
  sub('f', 'r', 0.020);
  sub('f', '\0', 0.010);
  sub('g', 'p', 0.010);
  sub('h', 'q', 0.030);
  sub('i', 'r', 0.012);
  sub('j', 'p', 0.008);
  sub('j', '\0', 0.004);
  sub(' ', '\0', 0.050);  // word merges
  auto ins = [&](char32_t context, char d, double p) {
    auto& dist = m.ins[context];
    dist.by_char[static_cast<char32_t>(d)] = p;
    dist.total += p;
  };
  ins(U'a', 'x', 0.006);
  ins(U'a', 'z', 0.004);
  ins(U'c', 'x', 0.010);
  ins(U'e', 'z', 0.008);
  ins(kBeginContext, 'x', 0.005);
  for (char32_t context : {U'a', U'c', U'e', U'g', U'i'}) {
    ins(context, ' ', 0.015);  // word splits
  }
  m.validate();
  return m;
}

// Random text lines over a small alphabet, for noise-model fixtures.
inline std::vector<std::string> random_lines(std::size_t count, std::size_t min_len,
                                             std::size_t max_len, std::uint64_t seed,
                                             const std::string& alphabet = "abcdefghij ") {
  ocralign::SplitMix64 rng(seed);
  std::vector<std::string> lines;
  lines.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = min_len + rng.next_u64() % (max_len - min_len + 1);
    std::string line;
    for (std::size_t k = 0; k < len; ++k) {
      line += alphabet[rng.next_u64() % alphabet.size()];
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace testsupport
