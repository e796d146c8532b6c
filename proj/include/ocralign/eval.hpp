#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"
#include "ocralign/edit_model.hpp"

namespace ocralign {

// Micro-averaged precision / recall / AER against sure-possible gold sets.
// Percent fields are 0..100; the counts they were computed from ride along
// so callers can re-derive or aggregate.
struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double aer = 0.0;
  std::uint64_t a_size = 0;
  std::uint64_t s_size = 0;
  std::uint64_t p_size = 0;
  std::uint64_t a_in_s = 0;
  std::uint64_t a_in_p = 0;
  // Degenerate denominators are flagged instead of silently zeroed.
  bool no_predictions = false;  // |A| = 0, precision undefined
  bool no_sure = false;         // |S| = 0, recall undefined
  bool empty = false;           // |A| + |S| = 0, AER undefined

  struct PerSentence {
    std::uint64_t a_size = 0, s_size = 0, a_in_s = 0, a_in_p = 0;
    double aer = 0.0;
  };
  std::vector<PerSentence> per_sentence;
};

inline EvalReport evaluate(const std::vector<AlignmentSet>& pred,
                           const std::vector<GoldAlignment>& gold,
                           bool per_sentence = false) {
  if (pred.size() != gold.size()) {
    throw DataError("evaluate: " + std::to_string(pred.size()) + " predicted vs " +
                    std::to_string(gold.size()) + " gold sentences");
  }
  EvalReport r;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const auto& a = pred[k];
    const auto& g = gold[k];
    std::uint64_t in_s = 0, in_p = 0;
    for (const auto& link : a.links) {
      if (g.sure.contains(link)) ++in_s;
      if (g.possible.contains(link)) ++in_p;
    }
    r.a_size += a.size();
    r.s_size += g.sure.size();
    r.p_size += g.possible.size();
    r.a_in_s += in_s;
    r.a_in_p += in_p;
    if (per_sentence) {
      EvalReport::PerSentence ps;
      ps.a_size = a.size();
      ps.s_size = g.sure.size();
      ps.a_in_s = in_s;
      ps.a_in_p = in_p;
      const std::uint64_t denom = ps.a_size + ps.s_size;
      ps.aer = denom == 0 ? 0.0
                          : 100.0 * (1.0 - static_cast<double>(in_s + in_p) /
                                               static_cast<double>(denom));
      r.per_sentence.push_back(ps);
    }
  }

  if (r.a_size == 0) {
    r.no_predictions = true;
  } else {
    r.precision = 100.0 * static_cast<double>(r.a_in_p) / static_cast<double>(r.a_size);
  }
  if (r.s_size == 0) {
    r.no_sure = true;
  } else {
    r.recall = 100.0 * static_cast<double>(r.a_in_s) / static_cast<double>(r.s_size);
  }
  if (r.a_size + r.s_size == 0) {
    r.empty = true;
  } else {
    r.aer = 100.0 * (1.0 - static_cast<double>(r.a_in_s + r.a_in_p) /
                               static_cast<double>(r.a_size + r.s_size));
  }
  return r;
}

inline std::uint64_t count_links(const std::vector<AlignmentSet>& pred) {
  std::uint64_t total = 0;
  for (const auto& a : pred) total += a.size();
  return total;
}

// ---------------------------------------------------------------------------
// CER comparison tables (real vs. synthetic noise)
// ---------------------------------------------------------------------------

struct CerDiffRow {
  std::string label;
  double real_cer = 0.0;
  double synth_cer = 0.0;
  double diff = 0.0;
};

inline CerDiffRow cer_diff(const std::string& label,
                           const std::vector<std::pair<std::string, std::string>>& real_pairs,
                           const std::vector<std::pair<std::string, std::string>>& synth_pairs) {
  CerDiffRow row;
  row.label = label;
  row.real_cer = compute_cer(real_pairs).total_cer;
  row.synth_cer = compute_cer(synth_pairs).total_cer;
  row.diff = std::abs(row.real_cer - row.synth_cer);
  return row;
}

inline std::string format_cer_diff_table(const std::vector<CerDiffRow>& rows) {
  std::string out = "label        real CER   syn. CER   diff\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %8.1f %10.1f %6.1f\n", r.label.c_str(), r.real_cer,
                  r.synth_cer, r.diff);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

inline std::string format_eval_report(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "precision %6.1f%s\nrecall    %6.1f%s\nAER       %6.1f%s\n"
                "|A| %llu  |S| %llu  |P| %llu  |A^S| %llu  |A^P| %llu\n",
                r.precision, r.no_predictions ? " (no predicted links)" : "", r.recall,
                r.no_sure ? " (no sure links)" : "", r.aer, r.empty ? " (empty)" : "",
                static_cast<unsigned long long>(r.a_size), static_cast<unsigned long long>(r.s_size),
                static_cast<unsigned long long>(r.p_size), static_cast<unsigned long long>(r.a_in_s),
                static_cast<unsigned long long>(r.a_in_p));
  return buf;
}

// Full-precision key=value lines; never mixed with log output.
inline std::string format_eval_report_machine(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "precision=%.17g\nrecall=%.17g\naer=%.17g\n"
                "a=%llu\ns=%llu\np=%llu\na_in_s=%llu\na_in_p=%llu\n"
                "no_predictions=%d\nno_sure=%d\nempty=%d\n",
                r.precision, r.recall, r.aer, static_cast<unsigned long long>(r.a_size),
                static_cast<unsigned long long>(r.s_size), static_cast<unsigned long long>(r.p_size),
                static_cast<unsigned long long>(r.a_in_s), static_cast<unsigned long long>(r.a_in_p),
                r.no_predictions ? 1 : 0, r.no_sure ? 1 : 0, r.empty ? 1 : 0);
  return buf;
}

inline std::string format_cer_report(const CerReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "chars      CER   sub.%%   ins.%%   del.%%\n"
                "%-9llu %5.1f %7.1f %7.1f %7.1f\n",
                static_cast<unsigned long long>(r.clean_chars), r.total_cer, r.sub_share,
                r.ins_share, r.del_share);
  return buf;
}

inline std::string format_cer_report_machine(const CerReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "cer=%.17g\nsub_share=%.17g\nins_share=%.17g\ndel_share=%.17g\n"
                "clean_chars=%llu\nnoisy_chars=%llu\n"
                "matches=%llu\nsubstitutions=%llu\ndeletions=%llu\ninsertions=%llu\n",
                r.total_cer, r.sub_share, r.ins_share, r.del_share,
                static_cast<unsigned long long>(r.clean_chars),
                static_cast<unsigned long long>(r.noisy_chars),
                static_cast<unsigned long long>(r.edits.matches),
                static_cast<unsigned long long>(r.edits.substitutions),
                static_cast<unsigned long long>(r.edits.deletions),
                static_cast<unsigned long long>(r.edits.insertions));
  return buf;
}

}  // namespace ocralign
