#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"

namespace ocralign {

inline constexpr double kDefaultNullProb = 0.08;  // fixed NULL mass, fast-align style
inline constexpr double kDefaultTension = 4.0;
inline constexpr double kProbFloor = 1e-12;  // normalization floor, avoids lockout

// ---------------------------------------------------------------------------
// Vocabularies and probability tables
// ---------------------------------------------------------------------------

class Vocab {
 public:
  // Returns the id, adding the token on first sight. Ids follow first
  // occurrence order, which keeps training fully deterministic.
  int add(const std::string& token) {
    auto [it, inserted] = ids_.try_emplace(token, static_cast<int>(tokens_.size()));
    if (inserted) tokens_.push_back(token);
    return it->second;
  }

  int find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? -1 : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

// t(target | source). Source id 0 is the virtual NULL word; real source
// tokens start at id 1. Only co-occurring pairs hold entries.
struct TranslationTable {
  Vocab src_vocab;  // token(0) == "<NULL>", never looked up by string
  Vocab tgt_vocab;
  std::unordered_map<std::uint64_t, double> probs;

  static std::uint64_t key(int src_id, int tgt_id) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(src_id)) << 32) |
           static_cast<std::uint32_t>(tgt_id);
  }

  double prob(int src_id, int tgt_id) const {
    auto it = probs.find(key(src_id, tgt_id));
    return it == probs.end() ? 0.0 : it->second;
  }

  // String-keyed lookups for the public surface and the model inspector.
  double prob_tokens(std::string_view src_token, std::string_view tgt_token) const {
    const int s = src_vocab.find(src_token);
    const int t = tgt_vocab.find(tgt_token);
    if (s <= 0 || t < 0) return 0.0;  // id 0 is NULL, not reachable by token
    return prob(s, t);
  }

  double prob_null(std::string_view tgt_token) const {
    const int t = tgt_vocab.find(tgt_token);
    return t < 0 ? 0.0 : prob(0, t);
  }

  // Largest |sum_t t(t|s) - 1| over source words with any mass.
  double max_row_deviation() const {
    std::vector<double> sums(src_vocab.size(), 0.0);
    std::vector<bool> seen(src_vocab.size(), false);
    for (const auto& [k, p] : probs) {
      const auto s = static_cast<std::size_t>(k >> 32);
      sums[s] += p;
      seen[s] = true;
    }
    double dev = 0.0;
    for (std::size_t s = 0; s < sums.size(); ++s) {
      if (seen[s]) dev = std::max(dev, std::abs(sums[s] - 1.0));
    }
    return dev;
  }
};

// d(i | j, n, m) over real source positions i = 1..n; rows normalize to 1.
// The NULL word is handled outside the table with a fixed probability, which
// is what lets a one-word corpus drive d(1|1,1,1) to 1.
struct DistortionTable {
  std::unordered_map<std::uint64_t, std::vector<double>> rows;

  static std::uint64_t key(int j, int n, int m) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(j)) << 42) |
           (static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)) << 21) |
           static_cast<std::uint32_t>(m);
  }

  // Uniform over real positions when the (j, n, m) context was never seen.
  double prob(int i, int j, int n, int m) const {
    auto it = rows.find(key(j, n, m));
    if (it == rows.end()) return 1.0 / static_cast<double>(n);
    return it->second[static_cast<std::size_t>(i - 1)];
  }

  double max_row_deviation() const {
    double dev = 0.0;
    for (const auto& [k, row] : rows) {
      double sum = 0.0;
      for (double p : row) sum += p;
      dev = std::max(dev, std::abs(sum - 1.0));
    }
    return dev;
  }
};

struct DiagonalPrior {
  double tension = kDefaultTension;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace detail {

struct EncodedCorpus {
  std::vector<std::vector<int>> src;  // real-word ids (>= 1)
  std::vector<std::vector<int>> tgt;  // ids >= 0
};

inline EncodedCorpus encode_corpus(const ParallelCorpus& corpus, TranslationTable& table) {
  if (corpus.empty()) throw DataError("cannot train on an empty corpus");
  table.src_vocab.add("<NULL>");
  EncodedCorpus enc;
  enc.src.reserve(corpus.size());
  enc.tgt.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) {
    std::vector<int> s, t;
    s.reserve(pair.source.size());
    t.reserve(pair.target.size());
    for (const auto& tok : pair.source.tokens) s.push_back(table.src_vocab.add(tok));
    for (const auto& tok : pair.target.tokens) t.push_back(table.tgt_vocab.add(tok));
    enc.src.push_back(std::move(s));
    enc.tgt.push_back(std::move(t));
  }
  return enc;
}

// Uniform over each source word's co-occurring targets; NULL co-occurs with
// everything. An init table, when given, seeds probabilities by token lookup
// (the usual Model-1-then-Model-2 pipeline).
inline void init_translation(const EncodedCorpus& enc, TranslationTable& table,
                             const TranslationTable* init) {
  for (std::size_t p = 0; p < enc.src.size(); ++p) {
    for (int t : enc.tgt[p]) {
      table.probs.try_emplace(TranslationTable::key(0, t), 0.0);
      for (int s : enc.src[p]) table.probs.try_emplace(TranslationTable::key(s, t), 0.0);
    }
  }
  if (init != nullptr) {
    for (auto& [k, p] : table.probs) {
      const int s = static_cast<int>(k >> 32);
      const int t = static_cast<int>(k & 0xffffffffu);
      const double q = s == 0 ? init->prob_null(table.tgt_vocab.token(t))
                              : init->prob_tokens(table.src_vocab.token(s),
                                                  table.tgt_vocab.token(t));
      p = std::max(q, kProbFloor);
    }
  } else {
    std::vector<double> fanout(table.src_vocab.size(), 0.0);
    for (const auto& [k, p] : table.probs) fanout[k >> 32] += 1.0;
    for (auto& [k, p] : table.probs) p = 1.0 / fanout[k >> 32];
    return;
  }
  // init path: renormalize rows to exact distributions
  std::vector<double> sums(table.src_vocab.size(), 0.0);
  for (const auto& [k, p] : table.probs) sums[k >> 32] += p;
  for (auto& [k, p] : table.probs) p /= sums[k >> 32];
}

// count/total per source word, floored, then renormalized to exact rows.
inline void normalize_translation(const std::unordered_map<std::uint64_t, double>& counts,
                                  TranslationTable& table) {
  std::vector<double> totals(table.src_vocab.size(), 0.0);
  for (const auto& [k, c] : counts) totals[k >> 32] += c;
  std::vector<double> sums(table.src_vocab.size(), 0.0);
  for (auto& [k, p] : table.probs) {
    auto it = counts.find(k);
    const double c = it == counts.end() ? 0.0 : it->second;
    p = std::max(totals[k >> 32] > 0.0 ? c / totals[k >> 32] : 0.0, kProbFloor);
    sums[k >> 32] += p;
  }
  for (auto& [k, p] : table.probs) p /= sums[k >> 32];
}

inline std::vector<double> normalized_row(std::vector<double> row) {
  double sum = 0.0;
  for (double& v : row) {
    v = std::max(v, kProbFloor);
    sum += v;
  }
  for (double& v : row) v /= sum;
  return row;
}

// Diagonal law: weight exp(-tension * |i/n - j/m|) over real positions,
// normalized per (j, n, m). Positions are 1-based as in the Model 2 tables.
inline std::vector<double> diagonal_row(int j, int n, int m, double tension) {
  std::vector<double> row(static_cast<std::size_t>(n));
  const double jr = static_cast<double>(j) / static_cast<double>(m);
  double sum = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double w = std::exp(-tension * std::abs(static_cast<double>(i) / n - jr));
    row[static_cast<std::size_t>(i - 1)] = w;
    sum += w;
  }
  for (double& v : row) v /= sum;
  return row;
}

}  // namespace detail

inline TranslationTable train_ibm1(const ParallelCorpus& corpus, int iterations,
                                   std::vector<double>* loglik = nullptr) {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  TranslationTable table;
  const auto enc = detail::encode_corpus(corpus, table);
  detail::init_translation(enc, table, nullptr);

  std::unordered_map<std::uint64_t, double> counts;
  counts.reserve(table.probs.size());
  std::vector<double> posterior;
  for (int it = 0; it < iterations; ++it) {
    counts.clear();
    double ll = 0.0;
    for (std::size_t p = 0; p < enc.src.size(); ++p) {
      const auto& src = enc.src[p];
      const double log_len = std::log(static_cast<double>(src.size() + 1));
      for (int t : enc.tgt[p]) {
        posterior.assign(src.size() + 1, 0.0);
        double denom = posterior[0] = table.prob(0, t);
        for (std::size_t i = 0; i < src.size(); ++i) {
          denom += posterior[i + 1] = table.prob(src[i], t);
        }
        ll += std::log(denom) - log_len;
        counts[TranslationTable::key(0, t)] += posterior[0] / denom;
        for (std::size_t i = 0; i < src.size(); ++i) {
          counts[TranslationTable::key(src[i], t)] += posterior[i + 1] / denom;
        }
      }
    }
    if (loglik != nullptr) loglik->push_back(ll);
    detail::normalize_translation(counts, table);
  }
  return table;
}

struct Ibm2Model {
  TranslationTable t;
  DistortionTable d;
  double p0 = kDefaultNullProb;
};

inline Ibm2Model train_ibm2(const ParallelCorpus& corpus, int iterations,
                            const TranslationTable* init = nullptr,
                            double p0 = kDefaultNullProb,
                            std::vector<double>* loglik = nullptr) {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  Ibm2Model model;
  model.p0 = p0;
  const auto enc = detail::encode_corpus(corpus, model.t);
  detail::init_translation(enc, model.t, init);

  std::unordered_map<std::uint64_t, double> t_counts;
  std::unordered_map<std::uint64_t, std::vector<double>> d_counts;
  std::vector<double> posterior;
  for (int it = 0; it < iterations; ++it) {
    t_counts.clear();
    d_counts.clear();
    double ll = 0.0;
    for (std::size_t p = 0; p < enc.src.size(); ++p) {
      const auto& src = enc.src[p];
      const int n = static_cast<int>(src.size());
      const int m = static_cast<int>(enc.tgt[p].size());
      for (int j = 1; j <= m; ++j) {
        const int t = enc.tgt[p][static_cast<std::size_t>(j - 1)];
        posterior.assign(src.size() + 1, 0.0);
        double denom = posterior[0] = p0 * model.t.prob(0, t);
        for (int i = 1; i <= n; ++i) {
          const double w =
              (1.0 - p0) * model.d.prob(i, j, n, m) * model.t.prob(src[static_cast<std::size_t>(i - 1)], t);
          denom += posterior[static_cast<std::size_t>(i)] = w;
        }
        ll += std::log(denom);
        t_counts[TranslationTable::key(0, t)] += posterior[0] / denom;
        if (n > 0) {
          auto& drow = d_counts[DistortionTable::key(j, n, m)];
          if (drow.empty()) drow.assign(static_cast<std::size_t>(n), 0.0);
          for (int i = 1; i <= n; ++i) {
            const double q = posterior[static_cast<std::size_t>(i)] / denom;
            t_counts[TranslationTable::key(src[static_cast<std::size_t>(i - 1)], t)] += q;
            drow[static_cast<std::size_t>(i - 1)] += q;
          }
        }
      }
    }
    if (loglik != nullptr) loglik->push_back(ll);
    detail::normalize_translation(t_counts, model.t);
    model.d.rows.clear();
    for (const auto& [k, row] : d_counts) model.d.rows[k] = detail::normalized_row(row);
  }
  return model;
}

// Model 2 with the distortion table replaced by the fixed diagonal law; only
// the translation table is learned.
inline TranslationTable train_diag_model2(const ParallelCorpus& corpus, int iterations,
                                          DiagonalPrior prior,
                                          const TranslationTable* init = nullptr,
                                          double p0 = kDefaultNullProb,
                                          std::vector<double>* loglik = nullptr) {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(prior.tension > 0.0)) throw ConfigError("diagonal tension must be > 0");
  TranslationTable table;
  const auto enc = detail::encode_corpus(corpus, table);
  detail::init_translation(enc, table, init);

  std::unordered_map<std::uint64_t, std::vector<double>> diag_cache;
  auto diag_row = [&](int j, int n, int m) -> const std::vector<double>& {
    auto [it, inserted] = diag_cache.try_emplace(DistortionTable::key(j, n, m));
    if (inserted) it->second = detail::diagonal_row(j, n, m, prior.tension);
    return it->second;
  };

  std::unordered_map<std::uint64_t, double> counts;
  std::vector<double> posterior;
  for (int it = 0; it < iterations; ++it) {
    counts.clear();
    double ll = 0.0;
    for (std::size_t p = 0; p < enc.src.size(); ++p) {
      const auto& src = enc.src[p];
      const int n = static_cast<int>(src.size());
      const int m = static_cast<int>(enc.tgt[p].size());
      for (int j = 1; j <= m; ++j) {
        const int t = enc.tgt[p][static_cast<std::size_t>(j - 1)];
        posterior.assign(src.size() + 1, 0.0);
        double denom = posterior[0] = p0 * table.prob(0, t);
        const std::vector<double>* row = n > 0 ? &diag_row(j, n, m) : nullptr;
        for (int i = 1; i <= n; ++i) {
          const double w = (1.0 - p0) * (*row)[static_cast<std::size_t>(i - 1)] *
                           table.prob(src[static_cast<std::size_t>(i - 1)], t);
          denom += posterior[static_cast<std::size_t>(i)] = w;
        }
        ll += std::log(denom);
        counts[TranslationTable::key(0, t)] += posterior[0] / denom;
        for (int i = 1; i <= n; ++i) {
          counts[TranslationTable::key(src[static_cast<std::size_t>(i - 1)], t)] +=
              posterior[static_cast<std::size_t>(i)] / denom;
        }
      }
    }
    if (loglik != nullptr) loglik->push_back(ll);
    detail::normalize_translation(counts, table);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Trained model container, Viterbi extraction, serialization
// ---------------------------------------------------------------------------

enum class AlignerKind { kIbm1, kIbm2, kDiag };

inline AlignerKind parse_aligner_kind(std::string_view s) {
  if (s == "ibm1") return AlignerKind::kIbm1;
  if (s == "ibm2") return AlignerKind::kIbm2;
  if (s == "diag") return AlignerKind::kDiag;
  throw ConfigError("aligner must be one of ibm1|ibm2|diag, got '" + std::string(s) + "'");
}

inline const char* aligner_kind_name(AlignerKind k) {
  switch (k) {
    case AlignerKind::kIbm1: return "ibm1";
    case AlignerKind::kIbm2: return "ibm2";
    case AlignerKind::kDiag: return "diag";
  }
  return "?";
}

struct AlignerModel {
  AlignerKind kind = AlignerKind::kIbm1;
  TranslationTable t;
  DistortionTable d;             // ibm2 only
  double p0 = kDefaultNullProb;  // ibm2 / diag
  double tension = kDefaultTension;  // diag only
};

// One link per target word: (argmax_i score(i, j), j). A target word aligns
// via NULL, and drops out of the set, unless a seen source token carries
// nonzero probability for it; NULL takes the word only when its score
// strictly beats every such candidate. Ties between real positions go to the
// smaller source index.
inline AlignmentSet viterbi_align(const AlignerModel& model, const SentencePair& pair) {
  AlignmentSet out;
  const int n = static_cast<int>(pair.source.size());
  const int m = static_cast<int>(pair.target.size());

  std::vector<int> src_ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    src_ids[static_cast<std::size_t>(i)] =
        model.t.src_vocab.find(pair.source.tokens[static_cast<std::size_t>(i)]);
  }

  for (int j = 1; j <= m; ++j) {
    const int tgt_id = model.t.tgt_vocab.find(pair.target.tokens[static_cast<std::size_t>(j - 1)]);
    if (tgt_id < 0) continue;  // unseen target word falls to NULL

    std::vector<double> diag_row;
    if (model.kind == AlignerKind::kDiag && n > 0) {
      diag_row = detail::diagonal_row(j, n, m, model.tension);
    }

    double best = 0.0;
    int best_i = 0;
    for (int i = 1; i <= n; ++i) {
      const int sid = src_ids[static_cast<std::size_t>(i - 1)];
      if (sid < 0) continue;  // unseen source token, never a candidate
      const double tv = model.t.prob(sid, tgt_id);
      if (tv <= 0.0) continue;
      double prior = 1.0;
      if (model.kind == AlignerKind::kIbm2) {
        prior = (1.0 - model.p0) * model.d.prob(i, j, n, m);
      } else if (model.kind == AlignerKind::kDiag) {
        prior = (1.0 - model.p0) * diag_row[static_cast<std::size_t>(i - 1)];
      }
      const double score = prior * tv;
      if (score > best) {
        best = score;
        best_i = i;
      }
    }
    const double null_score = model.kind == AlignerKind::kIbm1
                                  ? model.t.prob(0, tgt_id)
                                  : model.p0 * model.t.prob(0, tgt_id);
    if (best_i > 0 && null_score <= best) out.add(best_i - 1, j - 1);
  }
  return out;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Text format: header, flat parameters, both vocabularies (one token per
// line, ids in listed order, source ids starting at 1 below NULL), then
// "s t p" translation triples and optional "j n m i p" distortion rows.
inline void save_aligner(const AlignerModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "ocralign-aligner 1\n";
  out << "kind " << aligner_kind_name(model.kind) << '\n';
  if (model.kind != AlignerKind::kIbm1) out << "p0 " << detail::format_double(model.p0) << '\n';
  if (model.kind == AlignerKind::kDiag) {
    out << "tension " << detail::format_double(model.tension) << '\n';
  }

  out << "src_vocab " << (model.t.src_vocab.size() - 1) << '\n';
  for (std::size_t s = 1; s < model.t.src_vocab.size(); ++s) {
    out << model.t.src_vocab.token(static_cast<int>(s)) << '\n';
  }
  out << "tgt_vocab " << model.t.tgt_vocab.size() << '\n';
  for (std::size_t t = 0; t < model.t.tgt_vocab.size(); ++t) {
    out << model.t.tgt_vocab.token(static_cast<int>(t)) << '\n';
  }

  std::vector<std::uint64_t> keys;
  keys.reserve(model.t.probs.size());
  for (const auto& [k, p] : model.t.probs) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  out << "t " << keys.size() << '\n';
  for (std::uint64_t k : keys) {
    out << (k >> 32) << ' ' << (k & 0xffffffffu) << ' '
        << detail::format_double(model.t.probs.at(k)) << '\n';
  }

  if (model.kind == AlignerKind::kIbm2) {
    std::vector<std::uint64_t> dkeys;
    dkeys.reserve(model.d.rows.size());
    std::size_t entries = 0;
    for (const auto& [k, row] : model.d.rows) {
      dkeys.push_back(k);
      entries += row.size();
    }
    std::sort(dkeys.begin(), dkeys.end());
    out << "d " << entries << '\n';
    for (std::uint64_t k : dkeys) {
      const int j = static_cast<int>(k >> 42);
      const int n = static_cast<int>((k >> 21) & 0x1fffffu);
      const int m = static_cast<int>(k & 0x1fffffu);
      const auto& row = model.d.rows.at(k);
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << j << ' ' << n << ' ' << m << ' ' << (i + 1) << ' '
            << detail::format_double(row[i]) << '\n';
      }
    }
  }
  out << "end\n";
  if (!out) throw DataError("write failed: " + path.string());
}

inline AlignerModel load_aligner(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  auto fail = [&](const std::string& what) -> DataError {
    return DataError(path.string() + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line) || line != "ocralign-aligner 1") {
    throw fail("not an aligner model file");
  }

  AlignerModel model;
  bool have_kind = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string field;
    ls >> field;
    if (field == "kind") {
      std::string kind;
      ls >> kind;
      model.kind = parse_aligner_kind(kind);
      have_kind = true;
    } else if (field == "p0") {
      ls >> model.p0;
    } else if (field == "tension") {
      ls >> model.tension;
    } else if (field == "src_vocab") {
      break;
    } else {
      throw fail("unexpected field '" + field + "'");
    }
  }
  if (!have_kind) throw fail("missing kind");

  std::size_t src_count = 0;
  {
    std::istringstream ls(line);
    std::string field;
    ls >> field >> src_count;
    if (field != "src_vocab" || ls.fail()) throw fail("missing src_vocab section");
  }
  model.t.src_vocab.add("<NULL>");
  for (std::size_t i = 0; i < src_count; ++i) {
    if (!std::getline(in, line)) throw fail("truncated src_vocab");
    model.t.src_vocab.add(line);
  }
  if (model.t.src_vocab.size() != src_count + 1) throw fail("duplicate source token");

  std::size_t tgt_count = 0;
  if (!std::getline(in, line)) throw fail("missing tgt_vocab section");
  {
    std::istringstream ls(line);
    std::string field;
    ls >> field >> tgt_count;
    if (field != "tgt_vocab" || ls.fail()) throw fail("missing tgt_vocab section");
  }
  for (std::size_t i = 0; i < tgt_count; ++i) {
    if (!std::getline(in, line)) throw fail("truncated tgt_vocab");
    model.t.tgt_vocab.add(line);
  }
  if (model.t.tgt_vocab.size() != tgt_count) throw fail("duplicate target token");

  std::size_t t_count = 0;
  if (!std::getline(in, line)) throw fail("missing t section");
  {
    std::istringstream ls(line);
    std::string field;
    ls >> field >> t_count;
    if (field != "t" || ls.fail()) throw fail("missing t section");
  }
  for (std::size_t e = 0; e < t_count; ++e) {
    int s = 0, t = 0;
    double p = 0.0;
    if (!(in >> s >> t >> p)) throw fail("truncated t section");
    if (s < 0 || static_cast<std::size_t>(s) > src_count || t < 0 ||
        static_cast<std::size_t>(t) >= tgt_count || !(p >= 0.0) || !(p <= 1.0)) {
      throw fail("invalid translation entry " + std::to_string(e));
    }
    model.t.probs[TranslationTable::key(s, t)] = p;
  }
  in >> std::ws;

  if (!std::getline(in, line)) throw fail("missing end marker");
  if (line.rfind("d ", 0) == 0) {
    std::size_t d_count = 0;
    {
      std::istringstream ls(line);
      std::string field;
      ls >> field >> d_count;
      if (ls.fail()) throw fail("bad d section header");
    }
    for (std::size_t e = 0; e < d_count; ++e) {
      int j = 0, n = 0, m = 0, i = 0;
      double p = 0.0;
      if (!(in >> j >> n >> m >> i >> p)) throw fail("truncated d section");
      if (j < 1 || n < 1 || m < 1 || i < 1 || i > n || !(p >= 0.0) || !(p <= 1.0)) {
        throw fail("invalid distortion entry " + std::to_string(e));
      }
      auto& row = model.d.rows[DistortionTable::key(j, n, m)];
      if (row.empty()) row.assign(static_cast<std::size_t>(n), 0.0);
      row[static_cast<std::size_t>(i - 1)] = p;
    }
    in >> std::ws;
    if (!std::getline(in, line)) throw fail("missing end marker");
  }
  if (line != "end") throw fail("missing end marker");

  if (model.t.max_row_deviation() > 1e-6) throw fail("translation rows do not normalize");
  if (model.kind == AlignerKind::kIbm2 && model.d.max_row_deviation() > 1e-6) {
    throw fail("distortion rows do not normalize");
  }
  return model;
}

// ASCII lowercasing for the --lowercase training flag.
inline ParallelCorpus lowercase_corpus(const ParallelCorpus& corpus) {
  auto lower = [](std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
  };
  ParallelCorpus out = corpus;
  for (auto& pair : out.pairs) {
    for (auto* side : {&pair.source, &pair.target}) {
      side->raw = lower(side->raw);
      for (auto& tok : side->tokens) tok = lower(tok);
    }
  }
  return out;
}

}  // namespace ocralign
