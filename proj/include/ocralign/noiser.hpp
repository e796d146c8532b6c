#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"
#include "ocralign/edit_model.hpp"
#include "ocralign/rng.hpp"
#include "ocralign/unicode.hpp"

namespace ocralign {

enum class NoiseSides { kNone, kSource, kTarget, kBoth };

inline NoiseSides parse_sides(std::string_view s) {
  if (s == "none") return NoiseSides::kNone;
  if (s == "source") return NoiseSides::kSource;
  if (s == "target") return NoiseSides::kTarget;
  if (s == "both") return NoiseSides::kBoth;
  throw ConfigError("sides must be one of source|target|both|none, got '" + std::string(s) + "'");
}

inline const char* sides_name(NoiseSides s) {
  switch (s) {
    case NoiseSides::kNone: return "none";
    case NoiseSides::kSource: return "source";
    case NoiseSides::kTarget: return "target";
    case NoiseSides::kBoth: return "both";
  }
  return "?";
}

struct NoiseConfig {
  std::uint64_t seed = 13;  // fixed default, never time-based
  double scale = 1.0;
  NoiseSides sides = NoiseSides::kBoth;
};

// Scaling never pushes a per-character error mass above this cap. Mass that
// was already above the cap in the extracted model is left alone.
inline constexpr double kErrorMassCap = 0.95;

inline double effective_error_mass(double natural, double scale) {
  if (natural <= 0.0 || scale <= 0.0) return 0.0;
  return std::min(natural * scale, std::max(natural, kErrorMassCap));
}

namespace detail {

// Output stays a single line: an edit that would produce a newline yields a
// space instead.
inline char32_t sanitize_output(char32_t c) { return c == U'\n' ? U' ' : c; }

// One uniform draw decides both whether an event fires and which outcome it
// is (CDF walk over the scaled distribution). The draw happens whenever the
// model has mass for this slot, regardless of scale, so the same seed walks
// the same decision points at every scale and error counts grow
// monotonically as scale grows.
inline bool sample_insertion(const NoiseModel::InsertionDist& dist, double scale,
                             SplitMix64& rng, char32_t& out) {
  if (dist.total <= 0.0) return false;
  const double r = rng.next_double();
  const double eff = effective_error_mass(dist.total, scale);
  if (r >= eff) return false;
  const double factor = eff / dist.total;
  double cum = 0.0;
  for (const auto& [d, p] : dist.by_char) {
    cum += p * factor;
    if (r < cum) {
      out = sanitize_output(d);
      return true;
    }
  }
  out = sanitize_output(dist.by_char.rbegin()->first);  // guard against rounding
  return true;
}

}  // namespace detail

// Walks the clean line slot by slot: the begin-of-line insertion slot, then
// for each character its substitution/deletion decision followed by the
// insertion slot after it. Inserted characters are not themselves noised.
inline std::string apply_noise(std::string_view line, const NoiseModel& model,
                               const NoiseConfig& config, SplitMix64& rng) {
  const auto clean = decode_utf8(line);
  std::u32string out;
  out.reserve(clean.size() + 4);

  char32_t inserted = 0;
  auto ins_it = model.ins.find(kBeginContext);
  if (ins_it != model.ins.end() &&
      detail::sample_insertion(ins_it->second, config.scale, rng, inserted)) {
    out.push_back(inserted);
  }

  for (char32_t c : clean) {
    auto sub_it = model.sub.find(c);
    if (sub_it == model.sub.end() || sub_it->second.empty()) {
      out.push_back(c);  // unseen characters pass through
    } else {
      double mass = 0.0;
      for (const auto& [d, p] : sub_it->second) mass += p;
      const double r = rng.next_double();
      const double eff = effective_error_mass(mass, config.scale);
      if (r >= eff) {
        out.push_back(c);
      } else {
        const double factor = eff / mass;
        double cum = 0.0;
        char32_t outcome = kEpsilon;
        bool found = false;
        for (const auto& [d, p] : sub_it->second) {
          cum += p * factor;
          if (r < cum) {
            outcome = d;
            found = true;
            break;
          }
        }
        if (!found) outcome = sub_it->second.rbegin()->first;  // guard against rounding
        if (outcome != kEpsilon) out.push_back(detail::sanitize_output(outcome));
      }
    }
    ins_it = model.ins.find(c);
    if (ins_it != model.ins.end() &&
        detail::sample_insertion(ins_it->second, config.scale, rng, inserted)) {
      out.push_back(inserted);
    }
  }
  return encode_utf8(out);
}

namespace detail {

// Per-line generator state: hash of (seed, side, line index). Lines can be
// noised in any order, or in parallel, with identical results.
inline SplitMix64 line_rng(std::uint64_t seed, int side, std::size_t line_index) {
  return SplitMix64(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(side)),
                             static_cast<std::uint64_t>(line_index)));
}

inline Sentence noise_sentence(const Sentence& s, const NoiseModel& model,
                               const NoiseConfig& config, int side, std::size_t line_index) {
  auto rng = line_rng(config.seed, side, line_index);
  return tokenize(apply_noise(s.raw, model, config, rng));
}

}  // namespace detail

inline ParallelCorpus noise_corpus(const ParallelCorpus& corpus, const NoiseModel* src_model,
                                   const NoiseModel* tgt_model, const NoiseConfig& config) {
  const bool noise_src =
      config.sides == NoiseSides::kSource || config.sides == NoiseSides::kBoth;
  const bool noise_tgt =
      config.sides == NoiseSides::kTarget || config.sides == NoiseSides::kBoth;
  if (noise_src && src_model == nullptr) {
    throw ConfigError("sides=" + std::string(sides_name(config.sides)) +
                      " but no source-side noise model given");
  }
  if (noise_tgt && tgt_model == nullptr) {
    throw ConfigError("sides=" + std::string(sides_name(config.sides)) +
                      " but no target-side noise model given");
  }

  ParallelCorpus out;
  out.pairs.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& pair = corpus.pairs[i];
    SentencePair noised;
    noised.source = noise_src ? detail::noise_sentence(pair.source, *src_model, config, 0, i)
                              : pair.source;
    noised.target = noise_tgt ? detail::noise_sentence(pair.target, *tgt_model, config, 1, i)
                              : pair.target;
    out.pairs.push_back(std::move(noised));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CER calibration
// ---------------------------------------------------------------------------

inline constexpr double kCalibrationTolerance = 0.3;  // absolute CER points
inline constexpr int kCalibrationIterations = 25;
inline constexpr double kCalibrationMaxScale = 4096.0;

// Measures the CER that `model` produces on `sample` at a given scale, using
// the same per-line seeding (side stream 0) at every probe.
inline double measure_sample_cer(const NoiseModel& model, const std::vector<std::string>& sample,
                                 double scale, std::uint64_t seed) {
  NoiseConfig probe;
  probe.seed = seed;
  probe.scale = scale;
  std::vector<std::pair<std::string, std::string>> pairs;
  pairs.reserve(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    auto rng = detail::line_rng(seed, 0, i);
    pairs.emplace_back(sample[i], apply_noise(sample[i], model, probe, rng));
  }
  return compute_cer(pairs).total_cer;
}

// Monotone bisection for the scale that hits target_cer on the sample.
inline double calibrate_scale(const NoiseModel& model, const std::vector<std::string>& sample,
                              double target_cer, const NoiseConfig& config) {
  if (target_cer < 0.0) throw ConfigError("target CER must be non-negative");
  if (sample.empty()) throw ConfigError("calibrate_scale: empty sample");
  if (target_cer == 0.0) return 0.0;

  auto measure = [&](double scale) { return measure_sample_cer(model, sample, scale, config.seed); };

  double lo = 0.0;
  double hi = 1.0;
  double hi_cer = measure(hi);
  while (hi_cer < target_cer && hi < kCalibrationMaxScale) {
    lo = hi;
    hi *= 2.0;
    hi_cer = measure(hi);
  }
  if (hi_cer < target_cer - kCalibrationTolerance) {
    throw DataError("target CER " + std::to_string(target_cer) +
                    " unreachable; max achievable is about " + std::to_string(hi_cer));
  }

  double best_scale = hi;
  double best_gap = std::abs(hi_cer - target_cer);
  for (int it = 0; it < kCalibrationIterations && best_gap > kCalibrationTolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double cer = measure(mid);
    const double gap = std::abs(cer - target_cer);
    if (gap < best_gap) {
      best_gap = gap;
      best_scale = mid;
    }
    if (cer < target_cer) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (best_gap > kCalibrationTolerance) {
    throw DataError("calibration did not converge: closest CER is off by " +
                    std::to_string(best_gap));
  }
  return best_scale;
}

// ---------------------------------------------------------------------------
// Mixed-CER corpora
// ---------------------------------------------------------------------------

// Partitions the corpus into contiguous blocks by `shares` and noises block i
// at the scale calibrated to targets[i]. Per-line seeds use global line
// indices, so the block structure does not change any line's random stream.
inline ParallelCorpus make_mixed_corpus(const ParallelCorpus& corpus, const NoiseModel& model,
                                        const std::vector<double>& targets,
                                        const std::vector<double>& shares,
                                        const NoiseConfig& config) {
  if (targets.size() != shares.size()) {
    throw ConfigError("make_mixed_corpus: " + std::to_string(targets.size()) + " targets vs " +
                      std::to_string(shares.size()) + " shares");
  }
  if (targets.empty()) throw ConfigError("make_mixed_corpus: no targets");
  double share_sum = 0.0;
  for (double s : shares) {
    if (s < 0.0) throw ConfigError("make_mixed_corpus: negative share");
    share_sum += s;
  }
  if (std::abs(share_sum - 1.0) > 1e-9) {
    throw ConfigError("make_mixed_corpus: shares sum to " + std::to_string(share_sum) +
                      ", expected 1");
  }

  const bool noise_src =
      config.sides == NoiseSides::kSource || config.sides == NoiseSides::kBoth;
  const bool noise_tgt =
      config.sides == NoiseSides::kTarget || config.sides == NoiseSides::kBoth;

  ParallelCorpus out = corpus;
  if (config.sides == NoiseSides::kNone) return out;

  const std::size_t n = corpus.size();
  double cum = 0.0;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    cum += shares[k];
    const std::size_t end =
        k + 1 == targets.size() ? n : static_cast<std::size_t>(std::llround(cum * static_cast<double>(n)));
    if (end <= begin) continue;

    std::vector<std::string> sample;
    for (std::size_t i = begin; i < end; ++i) {
      if (noise_src) sample.push_back(corpus.pairs[i].source.raw);
      if (noise_tgt) sample.push_back(corpus.pairs[i].target.raw);
    }
    NoiseConfig block = config;
    block.scale = calibrate_scale(model, sample, targets[k], config);
    for (std::size_t i = begin; i < end; ++i) {
      if (noise_src) {
        out.pairs[i].source = detail::noise_sentence(corpus.pairs[i].source, model, block, 0, i);
      }
      if (noise_tgt) {
        out.pairs[i].target = detail::noise_sentence(corpus.pairs[i].target, model, block, 1, i);
      }
    }
    begin = end;
  }
  return out;
}

}  // namespace ocralign
