#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"
#include "ocralign/unicode.hpp"

namespace ocralign {

// Sentinels live above the Unicode scalar range, so they can never collide
// with decoded text.
inline constexpr char32_t kEpsilon = 0xffffffffu;       // deletion outcome
inline constexpr char32_t kBeginContext = 0xfffffffeu;  // insertion at line start

// ---------------------------------------------------------------------------
// Character-level edit scripts
// ---------------------------------------------------------------------------

enum class EditOpKind : std::uint8_t { kMatch, kSubstitute, kDelete, kInsert };

struct EditOp {
  EditOpKind kind;
  // match/substitute/delete: `from` is the clean character.
  // insert: `from` is the context (previous clean character or kBeginContext).
  char32_t from;
  // match: == from; substitute/insert: the noisy character; delete: kEpsilon.
  char32_t to;

  bool operator==(const EditOp&) const = default;
};

struct EditCounts {
  std::size_t matches = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t errors() const { return substitutions + deletions + insertions; }
};

struct EditScript {
  std::vector<EditOp> ops;

  EditCounts counts() const {
    EditCounts c;
    for (const auto& op : ops) {
      switch (op.kind) {
        case EditOpKind::kMatch: ++c.matches; break;
        case EditOpKind::kSubstitute: ++c.substitutions; break;
        case EditOpKind::kDelete: ++c.deletions; break;
        case EditOpKind::kInsert: ++c.insertions; break;
      }
    }
    return c;
  }

  // Applies the ops to `clean`; by construction this reproduces the noisy
  // string the script was extracted from.
  std::u32string replay(std::u32string_view clean) const {
    std::u32string out;
    std::size_t i = 0;
    for (const auto& op : ops) {
      switch (op.kind) {
        case EditOpKind::kMatch:
        case EditOpKind::kSubstitute:
          out.push_back(op.to);
          ++i;
          break;
        case EditOpKind::kDelete:
          ++i;
          break;
        case EditOpKind::kInsert:
          out.push_back(op.to);
          break;
      }
    }
    if (i != clean.size()) throw DataError("edit script does not cover the clean string");
    return out;
  }
};

// Minimum-edit-distance transcript under unit costs. Backtrace tie order is
// Match > Substitute > Delete > Insert, which keeps scripts deterministic and
// favors the error classes that dominate OCR output.
inline EditScript char_edit_alignment(std::u32string_view clean, std::u32string_view noisy) {
  const std::size_t n = clean.size();
  const std::size_t m = noisy.size();

  enum Step : std::uint8_t { kStartCell, kDiagMatch, kDiagSub, kUpDelete, kLeftInsert };
  std::vector<std::uint8_t> step((n + 1) * (m + 1), kStartCell);
  std::vector<std::uint32_t> prev_row(m + 1), row(m + 1);
  auto cell = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };

  for (std::size_t j = 1; j <= m; ++j) {
    prev_row[j] = static_cast<std::uint32_t>(j);
    step[cell(0, j)] = kLeftInsert;
  }
  for (std::size_t i = 1; i <= n; ++i) {
    row[0] = static_cast<std::uint32_t>(i);
    step[cell(i, 0)] = kUpDelete;
    for (std::size_t j = 1; j <= m; ++j) {
      const bool eq = clean[i - 1] == noisy[j - 1];
      std::uint32_t best = eq ? prev_row[j - 1] : prev_row[j - 1] + 1;
      std::uint8_t chosen = eq ? kDiagMatch : kDiagSub;
      if (prev_row[j] + 1 < best) {
        best = prev_row[j] + 1;
        chosen = kUpDelete;
      }
      if (row[j - 1] + 1 < best) {
        best = row[j - 1] + 1;
        chosen = kLeftInsert;
      }
      row[j] = best;
      step[cell(i, j)] = chosen;
    }
    prev_row.swap(row);
  }

  EditScript script;
  script.ops.reserve(n + m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    switch (step[cell(i, j)]) {
      case kDiagMatch:
        script.ops.push_back({EditOpKind::kMatch, clean[i - 1], clean[i - 1]});
        --i;
        --j;
        break;
      case kDiagSub:
        script.ops.push_back({EditOpKind::kSubstitute, clean[i - 1], noisy[j - 1]});
        --i;
        --j;
        break;
      case kUpDelete:
        script.ops.push_back({EditOpKind::kDelete, clean[i - 1], kEpsilon});
        --i;
        break;
      case kLeftInsert:
        script.ops.push_back({EditOpKind::kInsert, i > 0 ? clean[i - 1] : kBeginContext,
                              noisy[j - 1]});
        --j;
        break;
      default:
        throw DataError("edit alignment backtrace corrupt");
    }
  }
  std::reverse(script.ops.begin(), script.ops.end());
  return script;
}

inline EditScript char_edit_alignment(std::string_view clean_utf8, std::string_view noisy_utf8) {
  return char_edit_alignment(decode_utf8(clean_utf8), decode_utf8(noisy_utf8));
}

// ---------------------------------------------------------------------------
// Noise model
// ---------------------------------------------------------------------------

// Count-based error distributions extracted from (clean, OCR) line pairs.
//
//   sub[c][d]        probability that clean character c surfaces as d
//                    (d == kEpsilon is deletion); the remaining mass is
//                    the implicit no-error probability.
//   ins[k]           insertion behavior after context character k, where
//                    k == kBeginContext is the start-of-line slot. `total`
//                    is the probability that any insertion happens there,
//                    `by_char` splits it per inserted character.
//   char_counts[c]   occurrences of c on the clean side (the denominators).
//   lines            number of line pairs seen; denominator for the
//                    begin-of-line insertion slot.
struct NoiseModel {
  struct InsertionDist {
    double total = 0.0;
    std::map<char32_t, double> by_char;
  };

  std::map<char32_t, std::map<char32_t, double>> sub;
  std::map<char32_t, InsertionDist> ins;
  std::map<char32_t, std::uint64_t> char_counts;
  std::uint64_t lines = 0;

  double sub_error_mass(char32_t c) const {
    auto it = sub.find(c);
    if (it == sub.end()) return 0.0;
    double mass = 0.0;
    for (const auto& [d, p] : it->second) mass += p;
    return mass;
  }

  // Unseen characters never err.
  double no_error(char32_t c) const { return 1.0 - sub_error_mass(c); }

  double sub_prob(char32_t c, char32_t d) const {
    auto it = sub.find(c);
    if (it == sub.end()) return 0.0;
    auto jt = it->second.find(d);
    return jt == it->second.end() ? 0.0 : jt->second;
  }

  double ins_prob(char32_t context, char32_t d) const {
    auto it = ins.find(context);
    if (it == ins.end()) return 0.0;
    auto jt = it->second.by_char.find(d);
    return jt == it->second.by_char.end() ? 0.0 : jt->second;
  }

  double ins_total(char32_t context) const {
    auto it = ins.find(context);
    return it == ins.end() ? 0.0 : it->second.total;
  }

  void validate() const;
};

// Line-aligned (clean, OCR) text for model extraction and CER measurement.
inline std::vector<std::pair<std::string, std::string>> load_edit_pairs(
    const std::filesystem::path& clean_path, const std::filesystem::path& noisy_path) {
  const auto clean_lines = read_lines(clean_path);
  const auto noisy_lines = read_lines(noisy_path);
  if (clean_lines.size() != noisy_lines.size()) {
    throw DataError("line count mismatch " + std::to_string(clean_lines.size()) + " vs " +
                    std::to_string(noisy_lines.size()) + " (" + clean_path.string() + ", " +
                    noisy_path.string() + ")");
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(clean_lines.size());
  for (std::size_t i = 0; i < clean_lines.size(); ++i) {
    try {
      decode_utf8(clean_lines[i]);
      decode_utf8(noisy_lines[i]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(i + 1) + ": " + e.what());
    }
    pairs.emplace_back(clean_lines[i], noisy_lines[i]);
  }
  return pairs;
}

inline NoiseModel extract_noise_model(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw DataError("extract_noise_model: no line pairs");

  NoiseModel model;
  std::map<char32_t, std::map<char32_t, std::uint64_t>> sub_counts;
  std::map<char32_t, std::map<char32_t, std::uint64_t>> ins_counts;

  for (const auto& [clean_utf8, noisy_utf8] : pairs) {
    const auto clean = decode_utf8(clean_utf8);
    const auto noisy = decode_utf8(noisy_utf8);
    ++model.lines;
    for (char32_t c : clean) ++model.char_counts[c];

    const auto script = char_edit_alignment(clean, noisy);
    for (const auto& op : script.ops) {
      switch (op.kind) {
        case EditOpKind::kMatch:
          break;
        case EditOpKind::kSubstitute:
        case EditOpKind::kDelete:
          ++sub_counts[op.from][op.to];
          break;
        case EditOpKind::kInsert:
          ++ins_counts[op.from][op.to];
          break;
      }
    }
  }

  for (const auto& [c, outcomes] : sub_counts) {
    const double denom = static_cast<double>(model.char_counts.at(c));
    for (const auto& [d, count] : outcomes) {
      model.sub[c][d] = static_cast<double>(count) / denom;
    }
  }
  for (const auto& [context, outcomes] : ins_counts) {
    const double denom = context == kBeginContext
                             ? static_cast<double>(model.lines)
                             : static_cast<double>(model.char_counts.at(context));
    auto& dist = model.ins[context];
    for (const auto& [d, count] : outcomes) {
      const double p = static_cast<double>(count) / denom;
      dist.by_char[d] = p;
      dist.total += p;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// CER
// ---------------------------------------------------------------------------

struct CerReport {
  double total_cer = 0.0;  // percent: 100 * errors / clean characters
  double sub_share = 0.0;  // percent of all error ops
  double del_share = 0.0;
  double ins_share = 0.0;
  std::uint64_t clean_chars = 0;
  std::uint64_t noisy_chars = 0;
  EditCounts edits;
};

inline CerReport compute_cer(const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) throw DataError("compute_cer: no line pairs");
  CerReport report;
  for (const auto& [clean_utf8, noisy_utf8] : pairs) {
    const auto clean = decode_utf8(clean_utf8);
    const auto noisy = decode_utf8(noisy_utf8);
    report.clean_chars += clean.size();
    report.noisy_chars += noisy.size();
    const auto counts = char_edit_alignment(clean, noisy).counts();
    report.edits.matches += counts.matches;
    report.edits.substitutions += counts.substitutions;
    report.edits.deletions += counts.deletions;
    report.edits.insertions += counts.insertions;
  }
  if (report.clean_chars == 0) throw DataError("compute_cer: clean side has no characters");
  const double errors = static_cast<double>(report.edits.errors());
  report.total_cer = 100.0 * errors / static_cast<double>(report.clean_chars);
  if (errors > 0) {
    report.sub_share = 100.0 * static_cast<double>(report.edits.substitutions) / errors;
    report.del_share = 100.0 * static_cast<double>(report.edits.deletions) / errors;
    report.ins_share = 100.0 * static_cast<double>(report.edits.insertions) / errors;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------
//
// JSON document, keys in codepoint order so identical models serialize to
// identical bytes:
//
//   {
//     "format": "ocralign-noise-model",
//     "version": 1,
//     "lines": <line pair count>,
//     "char_counts": { "<char>": <count>, ... },
//     "sub": { "<char>": { "<char-or-empty-for-deletion>": <prob>, ... }, ... },
//     "ins": { "<char-or-'<begin>'>": { "<char>": <prob>, ... }, ... }
//   }

namespace detail {

inline std::string model_key(char32_t c) {
  if (c == kEpsilon) return "";
  if (c == kBeginContext) return "<begin>";
  return encode_utf8(c);
}

inline char32_t model_key_char(const std::string& key, const std::string& where) {
  if (key.empty()) return kEpsilon;
  if (key == "<begin>") return kBeginContext;
  const auto cps = decode_utf8(key);
  if (cps.size() != 1) throw DataError(where + ": key '" + key + "' is not a single character");
  return cps[0];
}

}  // namespace detail

inline void NoiseModel::validate() const {
  for (const auto& [c, outcomes] : sub) {
    const std::string where = "sub." + detail::model_key(c);
    double mass = 0.0;
    for (const auto& [d, p] : outcomes) {
      if (!std::isfinite(p) || p < 0.0) {
        throw DataError(where + "." + detail::model_key(d) + ": probability out of range");
      }
      mass += p;
    }
    if (mass > 1.0 + 1e-9) {
      throw DataError(where + ": probabilities sum to " + std::to_string(mass) + " > 1");
    }
    if (!char_counts.count(c)) throw DataError(where + ": no char_counts entry");
  }
  for (const auto& [context, dist] : ins) {
    const std::string where = "ins." + detail::model_key(context);
    double total = 0.0;
    for (const auto& [d, p] : dist.by_char) {
      if (!std::isfinite(p) || p < 0.0) {
        throw DataError(where + "." + detail::model_key(d) + ": probability out of range");
      }
      total += p;
    }
    if (std::abs(total - dist.total) > 1e-9) {
      throw DataError(where + ": per-character probabilities do not sum to the stated total");
    }
    if (context != kBeginContext && !char_counts.count(context)) {
      throw DataError(where + ": no char_counts entry");
    }
  }
}

inline void save_model(const NoiseModel& model, const std::filesystem::path& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "ocralign-noise-model";
  doc["version"] = 1;
  doc["lines"] = model.lines;
  auto& counts = doc["char_counts"] = nlohmann::ordered_json::object();
  for (const auto& [c, n] : model.char_counts) counts[detail::model_key(c)] = n;
  auto& sub = doc["sub"] = nlohmann::ordered_json::object();
  for (const auto& [c, outcomes] : model.sub) {
    auto& row = sub[detail::model_key(c)] = nlohmann::ordered_json::object();
    for (const auto& [d, p] : outcomes) row[detail::model_key(d)] = p;
  }
  auto& ins = doc["ins"] = nlohmann::ordered_json::object();
  for (const auto& [context, dist] : model.ins) {
    auto& row = ins[detail::model_key(context)] = nlohmann::ordered_json::object();
    for (const auto& [d, p] : dist.by_char) row[detail::model_key(d)] = p;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

inline NoiseModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!doc.contains(field)) throw DataError(path.string() + ": missing field '" + field + "'");
    return doc.at(field);
  };
  if (require("format") != "ocralign-noise-model") {
    throw DataError(path.string() + ": format: not a noise model file");
  }
  if (require("version") != 1) throw DataError(path.string() + ": version: unsupported");

  NoiseModel model;
  try {
    model.lines = require("lines").get<std::uint64_t>();
    for (const auto& [key, value] : require("char_counts").items()) {
      model.char_counts[detail::model_key_char(key, "char_counts")] = value.get<std::uint64_t>();
    }
    for (const auto& [ckey, row] : require("sub").items()) {
      auto& outcomes = model.sub[detail::model_key_char(ckey, "sub")];
      for (const auto& [dkey, p] : row.items()) {
        outcomes[detail::model_key_char(dkey, "sub." + ckey)] = p.get<double>();
      }
    }
    for (const auto& [ckey, row] : require("ins").items()) {
      auto& dist = model.ins[detail::model_key_char(ckey, "ins")];
      for (const auto& [dkey, p] : row.items()) {
        const double v = p.get<double>();
        dist.by_char[detail::model_key_char(dkey, "ins." + ckey)] = v;
        dist.total += v;
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  try {
    model.validate();
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model;
}

}  // namespace ocralign
