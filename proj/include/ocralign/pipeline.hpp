#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ocralign/aligners.hpp"
#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"
#include "ocralign/edit_model.hpp"
#include "ocralign/eval.hpp"
#include "ocralign/noiser.hpp"

namespace ocralign {

// End-to-end run: extract -> noise -> train -> align -> evaluate. Everything
// is keyed off a flat key = value config file; flags in the CLI override
// single keys. Relative paths resolve against the config file's directory.
struct PipelineConfig {
  std::uint64_t seed = 13;

  std::string ocr_clean;  // post-corrected side of the OCR pairs
  std::string ocr_noisy;  // raw OCR side
  std::string train_src;
  std::string train_tgt;
  std::string test_src;
  std::string test_tgt;
  std::string gold;
  std::string out_dir;

  NoiseSides sides = NoiseSides::kBoth;
  double scale = 1.0;
  std::optional<double> target_cer;

  std::string aligner = "diag";
  int iterations = 5;
  int m1_init_iterations = 5;  // 0 disables the Model 1 warm start
  double p0 = kDefaultNullProb;
  double tension = kDefaultTension;
  std::string train_on = "both";  // clean | synthetic | both
  bool lowercase = false;

  std::filesystem::path base_dir = ".";

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace detail

inline void apply_config_entry(PipelineConfig& config, const std::string& key,
                               const std::string& value) {
  try {
    if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "ocr_clean") {
      config.ocr_clean = value;
    } else if (key == "ocr_noisy") {
      config.ocr_noisy = value;
    } else if (key == "train_src") {
      config.train_src = value;
    } else if (key == "train_tgt") {
      config.train_tgt = value;
    } else if (key == "test_src") {
      config.test_src = value;
    } else if (key == "test_tgt") {
      config.test_tgt = value;
    } else if (key == "gold") {
      config.gold = value;
    } else if (key == "out_dir") {
      config.out_dir = value;
    } else if (key == "sides") {
      config.sides = parse_sides(value);
    } else if (key == "scale") {
      config.scale = std::stod(value);
    } else if (key == "target_cer") {
      config.target_cer = std::stod(value);
    } else if (key == "aligner") {
      parse_aligner_kind(value);  // validate early
      config.aligner = value;
    } else if (key == "iterations") {
      config.iterations = std::stoi(value);
    } else if (key == "m1_init_iterations") {
      config.m1_init_iterations = std::stoi(value);
    } else if (key == "p0") {
      config.p0 = std::stod(value);
    } else if (key == "tension") {
      config.tension = std::stod(value);
    } else if (key == "train_on") {
      if (value != "clean" && value != "synthetic" && value != "both") {
        throw ConfigError("train_on must be clean|synthetic|both");
      }
      config.train_on = value;
    } else if (key == "lowercase") {
      config.lowercase = detail::parse_bool(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw ConfigError(key + ": cannot parse value '" + value + "'");
  } catch (const std::out_of_range&) {
    throw ConfigError(key + ": value out of range '" + value + "'");
  }
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  PipelineConfig config;
  config.base_dir = path.has_parent_path() ? path.parent_path() : ".";
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    const auto stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(ln) + ": expected key = value");
    }
    const auto key = detail::trim(stripped.substr(0, eq));
    const auto value = detail::trim(stripped.substr(eq + 1));
    try {
      apply_config_entry(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(ln) + ": " + e.what());
    }
  }
  return config;
}

inline void validate_pipeline_config(const PipelineConfig& config) {
  std::vector<std::pair<const char*, const std::string*>> required = {
      {"ocr_clean", &config.ocr_clean}, {"ocr_noisy", &config.ocr_noisy},
      {"train_src", &config.train_src}, {"train_tgt", &config.train_tgt},
      {"test_src", &config.test_src},   {"test_tgt", &config.test_tgt},
      {"gold", &config.gold},           {"out_dir", &config.out_dir}};
  for (const auto& [key, value] : required) {
    if (value->empty()) throw ConfigError(std::string("config is missing ") + key);
  }
  for (const auto& [key, value] : required) {
    if (std::string(key) == "out_dir") continue;
    if (!std::filesystem::exists(config.resolve(*value))) {
      throw ConfigError(std::string(key) + ": no such file " + *value);
    }
  }
  if (config.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (config.m1_init_iterations < 0) throw ConfigError("m1_init_iterations must be >= 0");
  if (config.scale < 0.0) throw ConfigError("scale must be >= 0");
  if (config.target_cer && *config.target_cer < 0.0) throw ConfigError("target_cer must be >= 0");
}

// Normalized view of every effective setting; this is what the manifest
// records, so a manifest plus the input files pins the whole run.
inline std::vector<std::pair<std::string, std::string>> config_entries(
    const PipelineConfig& c) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("aligner", c.aligner);
  entries.emplace_back("gold", c.gold);
  entries.emplace_back("iterations", std::to_string(c.iterations));
  entries.emplace_back("lowercase", c.lowercase ? "true" : "false");
  entries.emplace_back("m1_init_iterations", std::to_string(c.m1_init_iterations));
  entries.emplace_back("ocr_clean", c.ocr_clean);
  entries.emplace_back("ocr_noisy", c.ocr_noisy);
  entries.emplace_back("out_dir", c.out_dir);
  entries.emplace_back("p0", num(c.p0));
  entries.emplace_back("scale", num(c.scale));
  entries.emplace_back("seed", std::to_string(c.seed));
  entries.emplace_back("sides", sides_name(c.sides));
  if (c.target_cer) entries.emplace_back("target_cer", num(*c.target_cer));
  entries.emplace_back("tension", num(c.tension));
  entries.emplace_back("test_src", c.test_src);
  entries.emplace_back("test_tgt", c.test_tgt);
  entries.emplace_back("train_on", c.train_on);
  entries.emplace_back("train_src", c.train_src);
  entries.emplace_back("train_tgt", c.train_tgt);
  return entries;
}

inline std::string hash_file_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(content)));
  return buf;
}

struct PipelineResult {
  EvalReport report;
  std::filesystem::path report_path;
  std::filesystem::path manifest_path;
};

inline PipelineResult run_pipeline(const PipelineConfig& config, std::ostream& log) {
  validate_pipeline_config(config);
  const auto out_dir = config.resolve(config.out_dir);
  std::filesystem::create_directories(out_dir);

  std::string stage = "extract";
  try {
    // extract
    const auto ocr_pairs =
        load_edit_pairs(config.resolve(config.ocr_clean), config.resolve(config.ocr_noisy));
    const auto model = extract_noise_model(ocr_pairs);
    save_model(model, out_dir / "noise_model.json");
    const auto cer = compute_cer(ocr_pairs);
    log << "extract: " << ocr_pairs.size() << " OCR line pairs\n" << format_cer_report(cer);

    // noise
    stage = "noise";
    auto train = load_parallel(config.resolve(config.train_src), config.resolve(config.train_tgt));
    NoiseConfig noise_cfg;
    noise_cfg.seed = config.seed;
    noise_cfg.scale = config.scale;
    noise_cfg.sides = config.sides;
    if (config.target_cer) {
      std::vector<std::string> sample;
      const bool src_side =
          config.sides == NoiseSides::kSource || config.sides == NoiseSides::kBoth;
      const bool tgt_side =
          config.sides == NoiseSides::kTarget || config.sides == NoiseSides::kBoth;
      for (const auto& pair : train.pairs) {
        if (src_side) sample.push_back(pair.source.raw);
        if (tgt_side) sample.push_back(pair.target.raw);
      }
      noise_cfg.scale = calibrate_scale(model, sample, *config.target_cer, noise_cfg);
      log << "noise: calibrated scale " << noise_cfg.scale << " for target CER "
          << *config.target_cer << '\n';
    }
    const auto synth = noise_corpus(train, &model, &model, noise_cfg);
    save_parallel(synth, out_dir / "synth.src", out_dir / "synth.tgt");
    log << "noise: wrote " << synth.size() << " synthetic pairs (sides "
        << sides_name(config.sides) << ", scale " << noise_cfg.scale << ")\n";

    // train
    stage = "train";
    ParallelCorpus train_data;
    if (config.train_on == "clean") {
      train_data = train;
    } else if (config.train_on == "synthetic") {
      train_data = synth;
    } else {
      train_data = train;
      train_data.pairs.insert(train_data.pairs.end(), synth.pairs.begin(), synth.pairs.end());
    }
    if (config.lowercase) train_data = lowercase_corpus(train_data);

    AlignerModel aligner;
    aligner.kind = parse_aligner_kind(config.aligner);
    aligner.p0 = config.p0;
    aligner.tension = config.tension;
    if (aligner.kind == AlignerKind::kIbm1) {
      aligner.t = train_ibm1(train_data, config.iterations);
    } else {
      TranslationTable warm;
      const TranslationTable* init = nullptr;
      if (config.m1_init_iterations > 0) {
        warm = train_ibm1(train_data, config.m1_init_iterations);
        init = &warm;
      }
      if (aligner.kind == AlignerKind::kIbm2) {
        auto m2 = train_ibm2(train_data, config.iterations, init, config.p0);
        aligner.t = std::move(m2.t);
        aligner.d = std::move(m2.d);
      } else {
        aligner.t = train_diag_model2(train_data, config.iterations, {config.tension}, init,
                                      config.p0);
      }
    }
    save_aligner(aligner, out_dir / "aligner.model");
    log << "train: " << config.aligner << " on " << train_data.size() << " pairs ("
        << config.train_on << ")\n";

    // align
    stage = "align";
    auto test = load_parallel(config.resolve(config.test_src), config.resolve(config.test_tgt));
    if (config.lowercase) test = lowercase_corpus(test);
    std::vector<AlignmentSet> pred;
    pred.reserve(test.size());
    for (const auto& pair : test.pairs) pred.push_back(viterbi_align(aligner, pair));
    write_alignments(pred, out_dir / "test.align");
    log << "align: " << count_links(pred) << " links over " << test.size() << " pairs\n";

    // evaluate
    stage = "evaluate";
    const auto gold = read_gold(config.resolve(config.gold));
    PipelineResult result;
    result.report = evaluate(pred, gold);
    result.report_path = out_dir / "report.txt";
    {
      std::ofstream rep(result.report_path, std::ios::binary);
      rep << format_eval_report_machine(result.report);
      if (!rep) throw DataError("write failed: " + result.report_path.string());
    }
    log << "evaluate: " << format_eval_report(result.report);

    // manifest
    stage = "manifest";
    result.manifest_path = out_dir / "manifest.txt";
    {
      std::ofstream man(result.manifest_path, std::ios::binary);
      man << "ocralign-manifest 1\n";
      man << "version " << kVersion << '\n';
      for (const auto& [key, value] : config_entries(config)) {
        man << "config " << key << ' ' << value << '\n';
      }
      for (const auto& [role, rel] :
           std::vector<std::pair<const char*, const std::string*>>{
               {"ocr_clean", &config.ocr_clean},
               {"ocr_noisy", &config.ocr_noisy},
               {"train_src", &config.train_src},
               {"train_tgt", &config.train_tgt},
               {"test_src", &config.test_src},
               {"test_tgt", &config.test_tgt},
               {"gold", &config.gold}}) {
        man << "input " << role << ' ' << *rel << " fnv1a64 "
            << hash_file_hex(config.resolve(*rel)) << '\n';
      }
      for (const char* name : {"noise_model.json", "synth.src", "synth.tgt", "aligner.model",
                               "test.align", "report.txt"}) {
        man << "output " << name << " fnv1a64 " << hash_file_hex(out_dir / name) << '\n';
      }
      if (!man) throw DataError("write failed: " + result.manifest_path.string());
    }
    return result;
  } catch (const ConfigError& e) {
    throw ConfigError("stage " + stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError("stage " + stage + ": " + e.what());
  }
}

}  // namespace ocralign
