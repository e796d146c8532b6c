// Command-line front end: every stage of the noise-simulation and alignment
// pipeline as a subcommand. Exit codes: 0 success, 1 bad flags/config,
// 2 bad data or runtime failure. Logs go to stderr; machine-readable output
// goes to stdout or to the requested files.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ocralign/aligners.hpp"
#include "ocralign/bias.hpp"
#include "ocralign/common.hpp"
#include "ocralign/corpus.hpp"
#include "ocralign/edit_model.hpp"
#include "ocralign/eval.hpp"
#include "ocralign/noiser.hpp"
#include "ocralign/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ocralign;

// "2:0.33,5:0.33,10:0.34" -> targets and shares
void parse_mixed_cer(const std::string& spec, std::vector<double>& targets,
                     std::vector<double>& shares) {
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    const auto item = spec.substr(start, comma == std::string::npos ? spec.size() - start
                                                                    : comma - start);
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--mixed-cer: expected CER:SHARE, got '" + item + "'");
    }
    try {
      targets.push_back(std::stod(item.substr(0, colon)));
      shares.push_back(std::stod(item.substr(colon + 1)));
    } catch (const std::exception&) {
      throw ConfigError("--mixed-cer: cannot parse '" + item + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (targets.empty()) throw ConfigError("--mixed-cer: empty specification");
}

struct ExtractArgs {
  std::string clean, noisy, out;
  bool machine = false;
};

void run_extract(const ExtractArgs& args) {
  const auto pairs = load_edit_pairs(args.clean, args.noisy);
  const auto model = extract_noise_model(pairs);
  save_model(model, args.out);
  const auto cer = compute_cer(pairs);
  if (args.machine) {
    std::cerr << format_cer_report(cer);
    std::cout << format_cer_report_machine(cer);
  } else {
    std::cout << format_cer_report(cer);
  }
  std::cerr << "wrote noise model to " << args.out << '\n';
}

struct ApplyNoiseArgs {
  std::string src, tgt, out_src, out_tgt;
  std::string src_model, tgt_model;
  std::string sides = "both";
  std::uint64_t seed = 13;
  double scale = 1.0;
  std::optional<double> target_cer;
  std::string mixed_cer;
};

void run_apply_noise(const ApplyNoiseArgs& args) {
  NoiseConfig config;
  config.seed = args.seed;
  config.scale = args.scale;
  config.sides = parse_sides(args.sides);
  const bool src_side = config.sides == NoiseSides::kSource || config.sides == NoiseSides::kBoth;
  const bool tgt_side = config.sides == NoiseSides::kTarget || config.sides == NoiseSides::kBoth;

  const auto corpus = load_parallel(args.src, args.tgt);

  std::optional<NoiseModel> src_model, tgt_model;
  if (!args.src_model.empty()) src_model = load_model(args.src_model);
  if (!args.tgt_model.empty()) tgt_model = load_model(args.tgt_model);

  ParallelCorpus out;
  if (!args.mixed_cer.empty()) {
    std::vector<double> targets, shares;
    parse_mixed_cer(args.mixed_cer, targets, shares);
    // The mixture applies one model to every selected side.
    const NoiseModel* model = nullptr;
    if (src_side && tgt_side) {
      if (!src_model || !tgt_model || args.src_model != args.tgt_model) {
        throw ConfigError("--mixed-cer with sides=both needs --src-model and --tgt-model "
                          "pointing at the same model file");
      }
      model = &*src_model;
    } else if (src_side) {
      if (!src_model) throw ConfigError("--mixed-cer with sides=source needs --src-model");
      model = &*src_model;
    } else if (tgt_side) {
      if (!tgt_model) throw ConfigError("--mixed-cer with sides=target needs --tgt-model");
      model = &*tgt_model;
    } else {
      throw ConfigError("--mixed-cer with sides=none does nothing");
    }
    out = make_mixed_corpus(corpus, *model, targets, shares, config);
  } else {
    if (args.target_cer) {
      // Calibrate each selected side against its own model.
      if (src_side) {
        if (!src_model) throw ConfigError("sides include source but no --src-model given");
        std::vector<std::string> sample;
        for (const auto& p : corpus.pairs) sample.push_back(p.source.raw);
        NoiseConfig side_cfg = config;
        side_cfg.scale = calibrate_scale(*src_model, sample, *args.target_cer, config);
        side_cfg.sides = NoiseSides::kSource;
        out = noise_corpus(corpus, &*src_model, nullptr, side_cfg);
        std::cerr << "source scale " << side_cfg.scale << " for CER " << *args.target_cer << '\n';
      } else {
        out = corpus;
      }
      if (tgt_side) {
        if (!tgt_model) throw ConfigError("sides include target but no --tgt-model given");
        std::vector<std::string> sample;
        for (const auto& p : corpus.pairs) sample.push_back(p.target.raw);
        NoiseConfig side_cfg = config;
        side_cfg.scale = calibrate_scale(*tgt_model, sample, *args.target_cer, config);
        side_cfg.sides = NoiseSides::kTarget;
        out = noise_corpus(src_side ? out : corpus, nullptr, &*tgt_model, side_cfg);
        std::cerr << "target scale " << side_cfg.scale << " for CER " << *args.target_cer << '\n';
      } else if (!src_side) {
        out = corpus;
      }
    } else {
      out = noise_corpus(corpus, src_model ? &*src_model : nullptr,
                         tgt_model ? &*tgt_model : nullptr, config);
    }
  }
  save_parallel(out, args.out_src, args.out_tgt);
  std::cerr << "wrote " << out.size() << " pairs to " << args.out_src << ", " << args.out_tgt
            << '\n';
}

struct MakeTestsetsArgs {
  std::string src, tgt, src_model, tgt_model, out_dir;
  std::uint64_t seed = 13;
  double scale = 1.0;
  std::optional<double> target_cer;
};

void run_make_testsets(const MakeTestsetsArgs& args) {
  const auto corpus = load_parallel(args.src, args.tgt);
  const auto src_model = load_model(args.src_model);
  const auto tgt_model = load_model(args.tgt_model);
  fs::create_directories(args.out_dir);

  NoiseConfig src_cfg, tgt_cfg;
  src_cfg.seed = tgt_cfg.seed = args.seed;
  src_cfg.scale = tgt_cfg.scale = args.scale;
  if (args.target_cer) {
    std::vector<std::string> src_sample, tgt_sample;
    for (const auto& p : corpus.pairs) {
      src_sample.push_back(p.source.raw);
      tgt_sample.push_back(p.target.raw);
    }
    src_cfg.scale = calibrate_scale(src_model, src_sample, *args.target_cer, src_cfg);
    tgt_cfg.scale = calibrate_scale(tgt_model, tgt_sample, *args.target_cer, tgt_cfg);
    std::cerr << "calibrated scales: source " << src_cfg.scale << ", target " << tgt_cfg.scale
              << " for CER " << *args.target_cer << '\n';
  }

  src_cfg.sides = NoiseSides::kSource;
  tgt_cfg.sides = NoiseSides::kTarget;
  const auto noisy_src = noise_corpus(corpus, &src_model, nullptr, src_cfg);
  const auto noisy_tgt = noise_corpus(corpus, nullptr, &tgt_model, tgt_cfg);

  const auto out = fs::path(args.out_dir);
  const auto src_name = fs::path(args.src).filename().string();
  const auto tgt_name = fs::path(args.tgt).filename().string();

  // clean sides are byte-for-byte copies of the inputs
  auto copy_clean = [&](const std::string& from, const fs::path& to) {
    fs::copy_file(from, to, fs::copy_options::overwrite_existing);
  };
  auto save_side = [&](const ParallelCorpus& c, bool source, const fs::path& to) {
    std::vector<std::string> lines;
    lines.reserve(c.size());
    for (const auto& p : c.pairs) lines.push_back(source ? p.source.raw : p.target.raw);
    write_lines(lines, to);
  };

  copy_clean(args.src, out / (src_name + ".cc"));
  copy_clean(args.tgt, out / (tgt_name + ".cc"));
  copy_clean(args.src, out / (src_name + ".cn"));
  save_side(noisy_tgt, false, out / (tgt_name + ".cn"));
  save_side(noisy_src, true, out / (src_name + ".nc"));
  copy_clean(args.tgt, out / (tgt_name + ".nc"));
  save_side(noisy_src, true, out / (src_name + ".nn"));
  save_side(noisy_tgt, false, out / (tgt_name + ".nn"));
  std::cerr << "wrote clean-clean, clean-noisy, noisy-clean, noisy-noisy test sets to "
            << args.out_dir << '\n';
}

struct TrainArgs {
  std::string src, tgt, out;
  std::string model = "diag";
  int iterations = 5;
  int m1_init_iterations = 5;
  double p0 = kDefaultNullProb;
  double tension = kDefaultTension;
  bool lowercase = false;
};

void run_train(const TrainArgs& args) {
  auto corpus = load_parallel(args.src, args.tgt);
  if (args.lowercase) corpus = lowercase_corpus(corpus);

  AlignerModel model;
  model.kind = parse_aligner_kind(args.model);
  model.p0 = args.p0;
  model.tension = args.tension;
  if (model.kind == AlignerKind::kIbm1) {
    model.t = train_ibm1(corpus, args.iterations);
  } else {
    TranslationTable warm;
    const TranslationTable* init = nullptr;
    if (args.m1_init_iterations > 0) {
      warm = train_ibm1(corpus, args.m1_init_iterations);
      init = &warm;
    }
    if (model.kind == AlignerKind::kIbm2) {
      auto m2 = train_ibm2(corpus, args.iterations, init, args.p0);
      model.t = std::move(m2.t);
      model.d = std::move(m2.d);
    } else {
      model.t = train_diag_model2(corpus, args.iterations, {args.tension}, init, args.p0);
    }
  }
  save_aligner(model, args.out);
  std::cerr << "trained " << args.model << " on " << corpus.size() << " pairs, wrote "
            << args.out << '\n';
}

struct AlignArgs {
  std::string model, src, tgt, out;
  bool lowercase = false;
};

void run_align(const AlignArgs& args) {
  const auto model = load_aligner(args.model);
  auto corpus = load_parallel(args.src, args.tgt);
  if (args.lowercase) corpus = lowercase_corpus(corpus);
  std::vector<AlignmentSet> pred;
  pred.reserve(corpus.size());
  for (const auto& pair : corpus.pairs) pred.push_back(viterbi_align(model, pair));
  write_alignments(pred, args.out);
  std::cerr << "wrote " << count_links(pred) << " links over " << corpus.size() << " pairs to "
            << args.out << '\n';
}

struct RescoreArgs {
  std::string matrices, out;
  double lambda = 1.0;
  double tension = kDefaultTension;
  double threshold = 1e-3;
  std::string formula = "prose";
};

void run_rescore(const RescoreArgs& args) {
  rescore_corpus(args.matrices, args.lambda, args.tension, args.threshold, args.out,
                 parse_bias_formula(args.formula));
  std::cerr << "wrote rescored alignments to " << args.out << '\n';
}

struct EvaluateArgs {
  std::string pred, gold;
  bool one_indexed = false;
  bool per_sentence = false;
  bool machine = false;
};

void run_evaluate(const EvaluateArgs& args) {
  const auto pred = read_alignments(args.pred, args.one_indexed);
  const auto gold = read_gold(args.gold, args.one_indexed);
  const auto report = evaluate(pred, gold, args.per_sentence);
  if (args.machine) {
    std::cout << format_eval_report_machine(report);
  } else {
    std::cout << format_eval_report(report);
  }
  if (args.per_sentence) {
    for (std::size_t k = 0; k < report.per_sentence.size(); ++k) {
      const auto& ps = report.per_sentence[k];
      if (args.machine) {
        std::printf("sentence=%zu a=%llu s=%llu a_in_s=%llu a_in_p=%llu aer=%.17g\n", k,
                    static_cast<unsigned long long>(ps.a_size),
                    static_cast<unsigned long long>(ps.s_size),
                    static_cast<unsigned long long>(ps.a_in_s),
                    static_cast<unsigned long long>(ps.a_in_p), ps.aer);
      } else {
        std::printf("sent %4zu  |A| %3llu  |S| %3llu  AER %6.1f\n", k,
                    static_cast<unsigned long long>(ps.a_size),
                    static_cast<unsigned long long>(ps.s_size), ps.aer);
      }
    }
  }
}

struct PipelineArgs {
  std::string config;
  std::vector<std::string> overrides;
};

void run_pipeline_cmd(const PipelineArgs& args) {
  auto config = load_pipeline_config(args.config);
  for (const auto& item : args.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + item + "'");
    apply_config_entry(config, detail::trim(item.substr(0, eq)),
                       detail::trim(item.substr(eq + 1)));
  }
  const auto result = run_pipeline(config, std::cerr);
  std::cout << format_eval_report_machine(result.report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OCR-noise simulation, word alignment and AER evaluation toolkit"};
  app.set_version_flag("--version", std::string("ocralign ") + kVersion);
  app.require_subcommand(1);

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand(
      "extract-noise", "Extract a character noise model from clean/OCR line pairs");
  extract->add_option("clean", extract_args.clean, "post-corrected text, one line per sentence")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("noisy", extract_args.noisy, "raw OCR text, line-aligned with clean")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("-o,--out", extract_args.out, "noise model output path")->required();
  extract->add_flag("--report", extract_args.machine,
                    "print the CER report as machine-readable key=value lines");
  extract->callback([&] { run_extract(extract_args); });

  ApplyNoiseArgs noise_args;
  auto* noise = app.add_subcommand("apply-noise", "Noise a parallel corpus with a noise model");
  noise->add_option("--src", noise_args.src)->required()->check(CLI::ExistingFile);
  noise->add_option("--tgt", noise_args.tgt)->required()->check(CLI::ExistingFile);
  noise->add_option("--out-src", noise_args.out_src)->required();
  noise->add_option("--out-tgt", noise_args.out_tgt)->required();
  noise->add_option("--src-model", noise_args.src_model)->check(CLI::ExistingFile);
  noise->add_option("--tgt-model", noise_args.tgt_model)->check(CLI::ExistingFile);
  noise->add_option("--sides", noise_args.sides, "source|target|both|none")
      ->default_val("both");
  noise->add_option("--seed", noise_args.seed)->default_val(13);
  noise->add_option("--scale", noise_args.scale, "multiplier on all error probabilities")
      ->default_val(1.0);
  auto* target_opt =
      noise->add_option("--target-cer", noise_args.target_cer, "calibrate scale to this CER");
  noise
      ->add_option("--mixed-cer", noise_args.mixed_cer,
                   "contiguous blocks at mixed CER, e.g. 2:0.33,5:0.33,10:0.34")
      ->excludes(target_opt);
  noise->callback([&] { run_apply_noise(noise_args); });

  MakeTestsetsArgs testsets_args;
  auto* testsets = app.add_subcommand(
      "make-testsets", "Write clean-clean, clean-noisy, noisy-clean, noisy-noisy test sets");
  testsets->add_option("--src", testsets_args.src)->required()->check(CLI::ExistingFile);
  testsets->add_option("--tgt", testsets_args.tgt)->required()->check(CLI::ExistingFile);
  testsets->add_option("--src-model", testsets_args.src_model)
      ->required()
      ->check(CLI::ExistingFile);
  testsets->add_option("--tgt-model", testsets_args.tgt_model)
      ->required()
      ->check(CLI::ExistingFile);
  testsets->add_option("--out-dir", testsets_args.out_dir)->required();
  testsets->add_option("--seed", testsets_args.seed)->default_val(13);
  testsets->add_option("--scale", testsets_args.scale)->default_val(1.0);
  testsets->add_option("--target-cer", testsets_args.target_cer);
  testsets->callback([&] { run_make_testsets(testsets_args); });

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train a statistical word aligner");
  train->add_option("--src", train_args.src)->required()->check(CLI::ExistingFile);
  train->add_option("--tgt", train_args.tgt)->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", train_args.out)->required();
  train->add_option("--model", train_args.model, "ibm1|ibm2|diag")->default_val("diag");
  train->add_option("--iterations", train_args.iterations)->default_val(5);
  train->add_option("--m1-init-iterations", train_args.m1_init_iterations,
                    "Model 1 warm-start iterations for ibm2/diag (0 disables)")
      ->default_val(5);
  train->add_option("--p0", train_args.p0, "NULL alignment mass (ibm2/diag)")
      ->default_val(kDefaultNullProb);
  train->add_option("--tension", train_args.tension, "diagonal tension (diag)")
      ->default_val(kDefaultTension);
  train->add_flag("--lowercase", train_args.lowercase, "ASCII-lowercase all tokens");
  train->callback([&] { run_train(train_args); });

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Viterbi-align a corpus with a trained model");
  align->add_option("--model", align_args.model)->required()->check(CLI::ExistingFile);
  align->add_option("--src", align_args.src)->required()->check(CLI::ExistingFile);
  align->add_option("--tgt", align_args.tgt)->required()->check(CLI::ExistingFile);
  align->add_option("-o,--out", align_args.out)->required();
  align->add_flag("--lowercase", align_args.lowercase);
  align->callback([&] { run_align(align_args); });

  RescoreArgs rescore_args;
  auto* rescore_cmd = app.add_subcommand(
      "rescore", "Apply diagonal bias to dumped score matrices and extract alignments");
  rescore_cmd->add_option("--matrices", rescore_args.matrices)
      ->required()
      ->check(CLI::ExistingFile);
  rescore_cmd->add_option("-o,--out", rescore_args.out)->required();
  rescore_cmd->add_option("--lambda", rescore_args.lambda, "bias weight in [0,1]")
      ->default_val(1.0);
  rescore_cmd->add_option("--tension", rescore_args.tension)->default_val(kDefaultTension);
  rescore_cmd->add_option("--threshold", rescore_args.threshold)->default_val(1e-3);
  rescore_cmd->add_option("--formula", rescore_args.formula, "prose|printed")
      ->default_val("prose");
  rescore_cmd->callback([&] { run_rescore(rescore_args); });

  EvaluateArgs eval_args;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Precision, recall, AER against sure/possible gold");
  evaluate_cmd->add_option("--pred", eval_args.pred)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--gold", eval_args.gold)->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_flag("--one-indexed", eval_args.one_indexed,
                         "input files use 1-based indices");
  evaluate_cmd->add_flag("--per-sentence", eval_args.per_sentence);
  evaluate_cmd->add_flag("--machine-readable", eval_args.machine);
  evaluate_cmd->callback([&] { run_evaluate(eval_args); });

  PipelineArgs pipeline_args;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "Run extract -> noise -> train -> align -> evaluate");
  pipeline_cmd->add_option("--config", pipeline_args.config)
      ->required()
      ->check(CLI::ExistingFile);
  pipeline_cmd->add_option("--set", pipeline_args.overrides,
                           "override a config key, e.g. --set seed=7 (repeatable)");
  pipeline_cmd->callback([&] { run_pipeline_cmd(pipeline_args); });

  try {
    app.parse(argc, argv);
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const ocralign::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ocralign::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
