// semigen: command-line front end for data generation, LM training, model
// training, decoding, evaluation, corruption and scale sweeps.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "semigen/checkpoint.hpp"
#include "semigen/data.hpp"
#include "semigen/errors.hpp"
#include "semigen/eval.hpp"
#include "semigen/experiment.hpp"
#include "semigen/lm.hpp"
#include "semigen/noise.hpp"

namespace fs = std::filesystem;
using namespace semigen;

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

Json read_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config '" + path + "' is not valid JSON");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
}

std::vector<Sentence> load_all(const std::vector<std::string>& paths) {
  std::vector<Sentence> lines;
  for (const auto& p : paths) {
    auto part = load_lines(p);
    lines.insert(lines.end(), part.begin(), part.end());
  }
  return lines;
}

int cmd_gen_data(const std::string& config_path, const std::vector<std::string>& sets,
                 const fs::path& out_dir) {
  const ExperimentConfig cfg = parse_config(resolve_config(read_config(config_path), sets));
  const ParallelCorpus corpus = generate_synthetic(cfg.synthetic);
  const DataSplit split = make_split(corpus, cfg.split, cfg.split_seed);
  fs::create_directories(out_dir);
  write_parallel(out_dir / "corpus.src", out_dir / "corpus.tgt", corpus);
  write_parallel(out_dir / "labeled.src", out_dir / "labeled.tgt", split.labeled);
  write_lines(out_dir / "unlabeled.src", split.unlabeled_src);
  write_lines(out_dir / "unlabeled.tgt", split.unlabeled_tgt);
  write_parallel(out_dir / "dev.src", out_dir / "dev.tgt", split.dev);
  write_parallel(out_dir / "test.src", out_dir / "test.tgt", split.test);
  const Json manifest{{"config_hash", config_hash(cfg.resolved)},
                      {"synthetic", cfg.resolved["data"]["synthetic"]},
                      {"split", cfg.resolved["data"]["split"]},
                      {"corpus_size", corpus.size()},
                      {"indices",
                       {{"labeled", split.labeled_index},
                        {"unlabeled_src", split.unlabeled_src_index},
                        {"unlabeled_tgt", split.unlabeled_tgt_index},
                        {"dev", split.dev_index},
                        {"test", split.test_index}}}};
  write_text(out_dir / "split.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << corpus.size() << " examples to " << out_dir.string() << '\n';
  return kOk;
}

int cmd_lm_train(const std::vector<std::string>& inputs, const fs::path& out) {
  const auto lines = load_all(inputs);
  if (lines.empty()) throw FormatError("lm-train: the target corpus is empty");
  const Vocab vocab = Vocab::build(lines);
  std::vector<TokenIds> ids;
  ids.reserve(lines.size());
  for (const auto& l : lines) ids.push_back(vocab.encode(l));
  const NGramModel lm = NGramModel::train(ids, vocab.size());
  std::ofstream file(out, std::ios::binary);
  if (!file) throw FormatError("cannot write '" + out.string() + "'");
  lm.save(file, vocab);
  std::cout << "trigram LM over " << lines.size() << " sentences, V=" << vocab.size() << '\n';
  return kOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& sets,
              const std::string& out_dir) {
  std::vector<std::string> overrides = sets;
  if (!out_dir.empty()) overrides.push_back("output.dir=" + Json(out_dir).dump());
  const ExperimentConfig cfg = parse_config(resolve_config(read_config(config_path), overrides));
  const ExperimentResult r = run_experiment(cfg, cfg.output_dir, &std::cerr);
  std::cout << r.report.dump(2) << '\n';
  return kOk;
}

int cmd_generate(const fs::path& checkpoint, const fs::path& input, const fs::path& out,
                 std::size_t max_len) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const auto lines = load_lines(input);
  std::vector<TokenIds> ids;
  ids.reserve(lines.size());
  for (const auto& l : lines) {
    if (l.empty()) throw FormatError("generate: empty source line in '" + input.string() + "'");
    ids.push_back(ckpt.src_vocab.encode(l));
  }
  std::vector<Sentence> hyps;
  for (const auto& h : greedy_translate(ckpt.model, ids, max_len)) {
    hyps.push_back(ckpt.tgt_vocab.decode(h));
  }
  write_lines(out, hyps);
  return kOk;
}

int cmd_evaluate(const fs::path& hyp_path, const fs::path& ref_path) {
  const auto hyps = load_lines(hyp_path);
  const auto refs = load_lines(ref_path);
  if (hyps.size() != refs.size()) {
    throw FormatError("evaluate: " + std::to_string(hyps.size()) + " hypotheses for " +
                      std::to_string(refs.size()) + " references");
  }
  if (refs.empty()) throw FormatError("evaluate: no references");
  const BleuStats st = bleu_stats<std::string>(hyps, refs);
  const Json out{{"bleu", st.score},
                 {"precisions", st.precisions},
                 {"brevity_penalty", st.brevity_penalty},
                 {"hyp_len", st.hyp_len},
                 {"ref_len", st.ref_len},
                 {"token_accuracy", token_accuracy<std::string>(hyps, refs)},
                 {"sentences", refs.size()}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

int cmd_corrupt(const fs::path& input, const fs::path& out, const NoiseConfig& noise,
                std::uint64_t seed) {
  noise.validate();
  const auto lines = load_lines(input);
  std::mt19937_64 rng(seed);
  std::vector<Sentence> noisy;
  noisy.reserve(lines.size());
  for (const auto& l : lines) {
    noisy.push_back(l.empty() ? l : corrupt(std::span<const std::string>(l), noise, rng));
  }
  write_lines(out, noisy);
  return kOk;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets,
              const SweepSpec& spec, const fs::path& out_dir, const std::string& plot_only) {
  std::vector<SweepRow> rows;
  if (!plot_only.empty()) {
    std::ifstream in(plot_only);
    if (!in) throw FormatError("cannot open '" + plot_only + "'");
    rows = read_sweep_csv(in);
    fs::create_directories(out_dir);
    for (const char* column : {"test_bleu", "dev_ppl"}) {
      write_text(out_dir / (std::string(column) + ".svg"), sweep_svg(rows, column));
    }
    return kOk;
  }
  rows = run_sweep(read_config(config_path), sets, spec, out_dir, &std::cerr);
  write_sweep_csv(std::cout, rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semigen: semi-supervised seq2seq text generation with three training routes"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus and its split");
  gen->add_option("--config,-c", config_path, "JSON config (data.synthetic, data.split)");
  gen->add_option("--set", sets, "Override a config key, e.g. data.synthetic.size=1000");
  gen->add_option("--out,-o", out, "Output directory")->required();

  std::vector<std::string> lm_inputs;
  auto* lm = app.add_subcommand("lm-train", "Train the trigram LM on target-side text");
  lm->add_option("inputs", lm_inputs, "Target-side text files")->required()->check(
      CLI::ExistingFile);
  lm->add_option("--out,-o", out, "Output LM file")->required();

  auto* train = app.add_subcommand("train", "Train a model from a config");
  train->add_option("--config,-c", config_path, "JSON config");
  train->add_option("--set", sets, "Override a config key (key=value, value is JSON)");
  train->add_option("--out,-o", out, "Output directory (overrides output.dir)");

  std::string checkpoint;
  std::string input;
  std::size_t max_len = 60;
  auto* generate = app.add_subcommand("generate", "Greedy-decode a source file");
  generate->add_option("--checkpoint", checkpoint, "Model checkpoint")->required()->check(
      CLI::ExistingFile);
  generate->add_option("--input,-i", input, "Source text, one example per line")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out,-o", out, "Hypothesis file")->required();
  generate->add_option("--max-len", max_len, "Decode length cap")->check(CLI::PositiveNumber);

  std::string hyp_path;
  std::string ref_path;
  auto* evaluate = app.add_subcommand("evaluate", "Score hypotheses against references (JSON)");
  evaluate->add_option("--hyp", hyp_path, "Hypothesis file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--ref", ref_path, "Reference file")->required()->check(CLI::ExistingFile);

  NoiseConfig noise;
  std::uint64_t seed = 1;
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Apply word-level noise to a text file");
  corrupt_cmd->add_option("--input,-i", input, "Text file")->required()->check(CLI::ExistingFile);
  corrupt_cmd->add_option("--out,-o", out, "Output file")->required();
  corrupt_cmd->add_option("--delete", noise.p_delete, "Deletion probability");
  corrupt_cmd->add_option("--duplicate", noise.p_duplicate, "Duplication probability");
  corrupt_cmd->add_option("--swap", noise.p_swap, "Swap-with-next probability");
  corrupt_cmd->add_option("--seed", seed, "RNG seed");

  SweepSpec spec;
  std::string plot_only;
  auto* sweep = app.add_subcommand("sweep", "Run presets over a data-scale axis");
  sweep->add_option("--config,-c", config_path, "Base JSON config");
  sweep->add_option("--set", sets, "Override a config key");
  sweep->add_option("--axis", spec.axis, "labeled or unlabeled")
      ->check(CLI::IsMember({"labeled", "unlabeled"}));
  sweep->add_option("--values", spec.values, "Scale points")->delimiter(',');
  sweep->add_option("--seeds", spec.seeds, "Seeds per point")->delimiter(',');
  sweep->add_option("--presets", spec.presets, "Presets to compare")->delimiter(',');
  sweep->add_option("--jobs,-j", spec.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  sweep->add_option("--out,-o", out, "Output directory")->required();
  sweep->add_option("--plot-only", plot_only, "Regenerate the SVG plots from an existing CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_gen_data(config_path, sets, out);
    if (*lm) return cmd_lm_train(lm_inputs, out);
    if (*train) return cmd_train(config_path, sets, out);
    if (*generate) return cmd_generate(checkpoint, input, out, max_len);
    if (*evaluate) return cmd_evaluate(hyp_path, ref_path);
    if (*corrupt_cmd) return cmd_corrupt(input, out, noise, seed);
    if (*sweep) {
      if (plot_only.empty() && (spec.axis.empty() || spec.values.empty())) {
        throw ConfigError("sweep needs --axis and --values (or --plot-only)");
      }
      return cmd_sweep(config_path, sets, spec, out, plot_only);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const SizingError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
