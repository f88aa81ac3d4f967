#include "semigen/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "semigen/checkpoint.hpp"
#include "semigen/errors.hpp"
#include "semigen/eval.hpp"
#include "semigen/lm.hpp"

namespace semigen {

namespace {

constexpr const char* kVersion = "0.1.0";

// Walks a resolved config against the defaults and rejects unknown keys.
void check_keys(const Json& value, const Json& reference, const std::string& prefix) {
  if (!value.is_object()) return;
  for (const auto& [key, child] : value.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!reference.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    if (reference[key].is_object()) {
      if (!child.is_object()) throw ConfigError("config key '" + path + "' must be an object");
      check_keys(child, reference[key], path);
    }
  }
}

class Reader {
 public:
  explicit Reader(const Json& root) : root_(root) {}

  template <typename T>
  T get(const std::string& dotted) const {
    const Json* node = &root_;
    std::size_t start = 0;
    while (start <= dotted.size()) {
      const std::size_t dot = dotted.find('.', start);
      const std::string key =
          dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      if (!node->is_object() || !node->contains(key)) {
        throw ConfigError("missing config key '" + dotted + "'");
      }
      node = &(*node)[key];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    try {
      if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
        if (node->is_number_integer() && node->get<long long>() < 0) {
          throw ConfigError("config key '" + dotted + "' must be nonnegative");
        }
        if (!node->is_number_integer() && !node->is_number_unsigned()) {
          throw ConfigError("config key '" + dotted + "' must be an integer");
        }
      }
      return node->get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError("config key '" + dotted + "': " + e.what());
    }
  }

 private:
  const Json& root_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<TokenIds> encode_all(const Vocab& vocab, std::span<const Sentence> lines) {
  std::vector<TokenIds> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(vocab.encode(l));
  return out;
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

SplitMetrics evaluate_split(const Seq2SeqModel& model, const Vocab& tgt_vocab,
                            const std::vector<TokenIds>& src, const std::vector<TokenIds>& tgt,
                            const std::vector<Sentence>& refs, std::size_t max_len) {
  SplitMetrics m;
  if (src.empty()) return m;
  m.ppl = perplexity(model, src, tgt);
  std::vector<Sentence> hyps;
  for (const auto& h : greedy_translate(model, src, max_len)) hyps.push_back(tgt_vocab.decode(h));
  m.bleu = bleu<std::string>(hyps, refs);
  m.token_acc = token_accuracy<std::string>(hyps, refs);
  return m;
}

Json metrics_json(const SplitMetrics& m) {
  return {{"ppl", m.ppl}, {"bleu", m.bleu}, {"token_acc", m.token_acc}};
}

}  // namespace

Json default_config() {
  const SynthTaskSpec synth;
  const TrainConfig t;
  const ModelConfig m;
  return {
      {"preset", ""},
      {"seed", 1},
      {"data",
       {{"synthetic",
         {{"entities", synth.entities},
          {"relations", synth.relations},
          {"values", synth.values},
          {"min_triples", synth.min_triples},
          {"max_triples", synth.max_triples},
          {"grammar", synth.grammar},
          {"size", 2000},
          {"seed", synth.seed}}},
        {"src", ""},
        {"tgt", ""},
        {"split",
         {{"labeled", 500},
          {"unlabeled_src", 0},
          {"unlabeled_tgt", 0},
          {"dev", 100},
          {"test", 100},
          {"seed", 1}}},
        {"min_count", 1}}},
      {"model",
       {{"embed_dim", m.embed_dim},
        {"hidden_dim", m.hidden_dim},
        {"enc_layers", m.enc_layers},
        {"dec_layers", m.dec_layers},
        {"init_scale", m.init_scale},
        {"forget_bias", m.forget_bias}}},
      {"train",
       {{"alpha", t.alpha},
        {"all_use_rl", t.all_use_rl},
        {"route_weights", t.route_weights},
        {"learning_rate", t.learning_rate},
        {"clip_norm", t.clip_norm},
        {"dropout", t.dropout},
        {"rollout_dropout", t.rollout_dropout},
        {"batch_size", t.batch_size},
        {"max_steps", t.max_steps},
        {"eval_every", t.eval_every},
        {"patience", t.patience},
        {"max_decode_len", t.max_decode_len},
        {"rl_baseline", t.rl_baseline},
        {"target_dev_accuracy", t.target_dev_accuracy},
        {"log_wall_time", t.log_wall_time},
        {"noise",
         {{"delete", t.noise.p_delete},
          {"duplicate", t.noise.p_duplicate},
          {"swap", t.noise.p_swap}}}}},
      {"lm", {{"source", "file"}, {"path", ""}}},
      {"output", {{"dir", "run"}}},
  };
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"r1", "r1+lm", "r12+lm", "r123+lm"};
  return names;
}

Json preset_patch(const std::string& name) {
  auto routes = [](double a, double b, double c, bool rl) {
    return Json{{"train", {{"route_weights", {a, b, c}}, {"all_use_rl", rl}}}};
  };
  if (name == "r1") return routes(1.0, 0.0, 0.0, false);
  if (name == "r1+lm") return routes(1.0, 0.0, 0.0, true);
  if (name == "r12+lm") return routes(0.5, 0.5, 0.0, true);
  if (name == "r123+lm") return routes(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, true);
  throw ConfigError("unknown preset '" + name + "' (expected r1, r1+lm, r12+lm or r123+lm)");
}

Json resolve_config(const Json& file_config, const std::vector<std::string>& overrides) {
  if (!file_config.is_object() && !file_config.is_null()) {
    throw ConfigError("config file must contain a JSON object");
  }
  Json patch = Json::object();
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    const std::string key = o.substr(0, eq);
    const std::string text = o.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* node = &patch;
    std::size_t start = 0;
    for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
      node = &(*node)[key.substr(start, dot - start)];
      start = dot + 1;
    }
    (*node)[key.substr(start)] = std::move(value);
  }

  std::string preset;
  if (file_config.is_object() && file_config.contains("preset")) {
    preset = file_config["preset"].get<std::string>();
  }
  if (patch.contains("preset")) preset = patch["preset"].get<std::string>();

  Json resolved = default_config();
  const Json reference = resolved;
  if (file_config.is_object()) check_keys(file_config, reference, "");
  check_keys(patch, reference, "");
  if (!preset.empty()) resolved.merge_patch(preset_patch(preset));
  if (file_config.is_object()) resolved.merge_patch(file_config);
  resolved.merge_patch(patch);
  resolved["preset"] = preset;
  return resolved;
}

std::string config_hash(const Json& resolved) {
  const std::string text = resolved.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return hex64(h);
}

ExperimentConfig parse_config(const Json& resolved) {
  check_keys(resolved, default_config(), "");
  const Reader r(resolved);
  ExperimentConfig c;
  c.resolved = resolved;
  c.preset = r.get<std::string>("preset");
  c.seed = r.get<std::uint64_t>("seed");

  auto& s = c.synthetic;
  s.entities = r.get<std::size_t>("data.synthetic.entities");
  s.relations = r.get<std::size_t>("data.synthetic.relations");
  s.values = r.get<std::size_t>("data.synthetic.values");
  s.min_triples = r.get<std::size_t>("data.synthetic.min_triples");
  s.max_triples = r.get<std::size_t>("data.synthetic.max_triples");
  s.grammar = r.get<int>("data.synthetic.grammar");
  s.size = r.get<std::size_t>("data.synthetic.size");
  s.seed = r.get<std::uint64_t>("data.synthetic.seed");
  c.src_path = r.get<std::string>("data.src");
  c.tgt_path = r.get<std::string>("data.tgt");
  if (c.src_path.empty() != c.tgt_path.empty()) {
    throw ConfigError("data.src and data.tgt must be given together");
  }
  if (c.src_path.empty()) s.validate();
  c.split.labeled = r.get<std::size_t>("data.split.labeled");
  c.split.unlabeled_src = r.get<std::size_t>("data.split.unlabeled_src");
  c.split.unlabeled_tgt = r.get<std::size_t>("data.split.unlabeled_tgt");
  c.split.dev = r.get<std::size_t>("data.split.dev");
  c.split.test = r.get<std::size_t>("data.split.test");
  c.split_seed = r.get<std::uint64_t>("data.split.seed");
  c.min_count = r.get<std::size_t>("data.min_count");
  if (c.min_count == 0) throw ConfigError("data.min_count must be positive");

  c.model.embed_dim = r.get<std::size_t>("model.embed_dim");
  c.model.hidden_dim = r.get<std::size_t>("model.hidden_dim");
  c.model.enc_layers = r.get<std::size_t>("model.enc_layers");
  c.model.dec_layers = r.get<std::size_t>("model.dec_layers");
  c.model.init_scale = r.get<double>("model.init_scale");
  c.model.forget_bias = r.get<double>("model.forget_bias");
  if (c.model.embed_dim == 0 || c.model.hidden_dim == 0 || c.model.enc_layers == 0 ||
      c.model.dec_layers == 0) {
    throw ConfigError("model dimensions and layer counts must be positive");
  }

  auto& t = c.train;
  t.alpha = r.get<double>("train.alpha");
  t.all_use_rl = r.get<bool>("train.all_use_rl");
  const auto weights = r.get<std::vector<double>>("train.route_weights");
  if (weights.size() != 3) throw ConfigError("train.route_weights must have 3 entries");
  std::copy(weights.begin(), weights.end(), t.route_weights.begin());
  t.learning_rate = r.get<double>("train.learning_rate");
  t.clip_norm = r.get<double>("train.clip_norm");
  t.dropout = r.get<double>("train.dropout");
  t.rollout_dropout = r.get<bool>("train.rollout_dropout");
  t.batch_size = r.get<std::size_t>("train.batch_size");
  t.max_steps = r.get<std::size_t>("train.max_steps");
  t.eval_every = r.get<std::size_t>("train.eval_every");
  t.patience = r.get<std::size_t>("train.patience");
  t.max_decode_len = r.get<std::size_t>("train.max_decode_len");
  t.rl_baseline = r.get<bool>("train.rl_baseline");
  t.target_dev_accuracy = r.get<double>("train.target_dev_accuracy");
  t.log_wall_time = r.get<bool>("train.log_wall_time");
  t.noise.p_delete = r.get<double>("train.noise.delete");
  t.noise.p_duplicate = r.get<double>("train.noise.duplicate");
  t.noise.p_swap = r.get<double>("train.noise.swap");
  t.seed = c.seed;
  t.validate();

  c.lm.kind = r.get<std::string>("lm.source");
  c.lm.path = r.get<std::string>("lm.path");
  if (c.lm.kind != "file" && c.lm.kind != "split") {
    throw ConfigError("lm.source must be \"file\" or \"split\"");
  }
  if (t.uses_rl() && c.lm.kind == "file") {
    if (c.lm.path.empty()) {
      throw ConfigError("preset '" + c.preset + "' uses the LM reward but lm.path is not set");
    }
    if (!std::filesystem::exists(c.lm.path)) {
      throw ConfigError("lm.path '" + c.lm.path + "' does not exist");
    }
  }
  c.output_dir = r.get<std::string>("output.dir");
  return c;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                std::ostream* log) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  result.config_hash = config_hash(cfg.resolved);

  Json manifest{{"config_hash", result.config_hash},
                {"seed", cfg.seed},
                {"versions",
                 {{"semigen", kVersion},
                  {"checkpoint_format", kCheckpointMagic},
                  {"lm_format", "semigen-ngram v1"},
                  {"compiler", __VERSION__}}},
                {"config", cfg.resolved}};
  write_json(out_dir / "manifest.json", manifest);

  const ParallelCorpus corpus = cfg.src_path.empty()
                                    ? generate_synthetic(cfg.synthetic)
                                    : load_parallel(cfg.src_path, cfg.tgt_path);
  const DataSplit split = make_split(corpus, cfg.split, cfg.split_seed);

  // Vocabularies cover only text the trainer may see.
  std::vector<Sentence> src_text = sources(split.labeled);
  src_text.insert(src_text.end(), split.unlabeled_src.begin(), split.unlabeled_src.end());
  std::vector<Sentence> tgt_text = targets(split.labeled);
  tgt_text.insert(tgt_text.end(), split.unlabeled_tgt.begin(), split.unlabeled_tgt.end());
  const Vocab src_vocab = Vocab::build(src_text, cfg.min_count);
  const Vocab tgt_vocab = Vocab::build(tgt_text, cfg.min_count);

  TrainingData data;
  data.labeled_src = encode_all(src_vocab, sources(split.labeled));
  data.labeled_tgt = encode_all(tgt_vocab, targets(split.labeled));
  data.source_pool = encode_all(src_vocab, src_text);
  data.target_pool = encode_all(tgt_vocab, tgt_text);
  data.dev_src = encode_all(src_vocab, sources(split.dev));
  data.dev_tgt = encode_all(tgt_vocab, targets(split.dev));
  data.dev_refs = targets(split.dev);

  std::optional<NGramModel> lm;
  if (cfg.train.uses_rl()) {
    if (cfg.lm.kind == "file") {
      std::ifstream in(cfg.lm.path);
      if (!in) throw ConfigError("cannot open lm.path '" + cfg.lm.path + "'");
      lm.emplace(NGramModel::load(in, tgt_vocab));
    } else {
      lm.emplace(NGramModel::train(data.target_pool, tgt_vocab.size()));
      std::ofstream out(out_dir / "lm.arpa");
      lm->save(out, tgt_vocab);
    }
  }

  ModelConfig mc = cfg.model;
  mc.src_vocab = src_vocab.size();
  mc.tgt_vocab = tgt_vocab.size();
  Seq2SeqModel model(mc, cfg.seed);

  {
    std::ofstream metrics(out_dir / "metrics.csv", std::ios::binary);
    if (!metrics) throw FormatError("cannot write metrics.csv");
    result.train = train(model, data, tgt_vocab, lm ? &*lm : nullptr, cfg.train, &metrics);
  }
  if (log != nullptr) {
    for (const auto& w : result.train.warnings) *log << "warning: " << w << '\n';
  }
  save_checkpoint(out_dir / "model.ckpt", model, src_vocab, tgt_vocab);

  const std::size_t max_len = cfg.train.max_decode_len;
  result.dev = evaluate_split(model, tgt_vocab, data.dev_src, data.dev_tgt, data.dev_refs, max_len);
  result.test = evaluate_split(model, tgt_vocab, encode_all(src_vocab, sources(split.test)),
                               encode_all(tgt_vocab, targets(split.test)), targets(split.test),
                               max_len);

  const auto& tr = result.train;
  result.report = manifest;
  result.report["preset"] = cfg.preset;
  result.report["vocab"] = {{"src", src_vocab.size()}, {"tgt", tgt_vocab.size()}};
  result.report["split"] = {{"labeled", split.labeled.size()},
                            {"unlabeled_src", split.unlabeled_src.size()},
                            {"unlabeled_tgt", split.unlabeled_tgt.size()},
                            {"dev", split.dev.size()},
                            {"test", split.test.size()}};
  result.report["steps"] = tr.steps;
  result.report["best_step"] = tr.best_step;
  result.report["best_dev_loss"] = tr.best_dev_loss;
  result.report["early_stopped"] = tr.early_stopped;
  result.report["route_counts"] = tr.route_counts;
  result.report["warnings"] = tr.warnings;
  result.report["dev"] = metrics_json(result.dev);
  result.report["test"] = metrics_json(result.test);
  result.report["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(out_dir / "report.json", result.report);
  return result;
}

// --- sweeps -------------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "preset,axis,scale,seed,best_step,dev_ppl,dev_bleu,test_bleu,test_acc,test_ppl\n";
  for (const auto& r : rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%llu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.preset.c_str(), r.axis.c_str(), r.scale,
                  static_cast<unsigned long long>(r.seed), r.best_step, r.dev_ppl, r.dev_bleu,
                  r.test_bleu, r.test_acc, r.test_ppl);
    out << buf;
  }
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("sweep CSV is empty");
  std::vector<SweepRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) {
      throw FormatError("sweep CSV line " + std::to_string(lineno) + ": expected 10 fields, got " +
                        std::to_string(f.size()));
    }
    try {
      rows.push_back({f[0], f[1], std::stoul(f[2]), std::stoull(f[3]), std::stoul(f[4]),
                      std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8]),
                      std::stod(f[9])});
    } catch (const std::exception&) {
      throw FormatError("sweep CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return rows;
}

std::string sweep_svg(const std::vector<SweepRow>& rows, const std::string& column) {
  auto pick = [&](const SweepRow& r) {
    if (column == "test_bleu") return r.test_bleu;
    if (column == "test_acc") return r.test_acc;
    if (column == "test_ppl") return r.test_ppl;
    if (column == "dev_bleu") return r.dev_bleu;
    if (column == "dev_ppl") return r.dev_ppl;
    throw ContractError("sweep_svg: unknown column '" + column + "'");
  };
  // preset -> scale -> (sum, n)
  std::map<std::string, std::map<std::size_t, std::pair<double, std::size_t>>> series;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t xmin = 0;
  std::size_t xmax = 0;
  bool first = true;
  for (const auto& r : rows) {
    auto& cell = series[r.preset][r.scale];
    cell.first += pick(r);
    ++cell.second;
    xmin = first ? r.scale : std::min(xmin, r.scale);
    xmax = first ? r.scale : std::max(xmax, r.scale);
    first = false;
  }
  first = true;
  for (const auto& [_, pts] : series) {
    for (const auto& [__, c] : pts) {
      const double v = c.first / static_cast<double>(c.second);
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  lo = std::min(lo, 0.0);
  const double W = 640, H = 400, L = 70, R = 150, T = 30, B = 50;
  auto sx = [&](std::size_t x) {
    return xmax == xmin ? L + (W - L - R) / 2
                        : L + (W - L - R) * static_cast<double>(x - xmin) /
                                  static_cast<double>(xmax - xmin);
  };
  auto sy = [&](double y) { return H - B - (H - T - B) * (y - lo) / (hi - lo); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", L,
                H - B, W - R, H - B);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n", L, T,
                L, H - B);
  svg << buf;
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.3g</text>\n", L - 6,
                  sy(v) + 4, v);
    svg << buf;
  }
  std::map<std::size_t, bool> ticks;
  for (const auto& [_, pts] : series) {
    for (const auto& [x, __] : pts) ticks[x] = true;
  }
  for (const auto& [x, _] : ticks) {
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%zu</text>\n",
                  sx(x), H - B + 18, x);
    svg << buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">scale</text>\n",
                L + (W - L - R) / 2, H - 10);
  svg << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"18\">%s (mean over seeds)</text>\n", L,
                column.c_str());
  svg << buf;
  std::size_t k = 0;
  for (const auto& [preset, pts] : series) {
    const char* color = colors[k % 5];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, c] : pts) {
      std::snprintf(buf, sizeof buf, "%.1f,%.1f ", sx(x), sy(c.first / static_cast<double>(c.second)));
      svg << buf;
    }
    svg << "\"/>\n";
    for (const auto& [x, c] : pts) {
      std::snprintf(buf, sizeof buf, "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n",
                    sx(x), sy(c.first / static_cast<double>(c.second)), color);
      svg << buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", W - R + 10,
                  T + 16.0 * static_cast<double>(k) + 10, color, preset.c_str());
    svg << buf;
    ++k;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<SweepRow> run_sweep(const Json& file_config, const std::vector<std::string>& overrides,
                                const SweepSpec& spec, const std::filesystem::path& out_dir,
                                std::ostream* log) {
  if (spec.axis != "labeled" && spec.axis != "unlabeled") {
    throw ConfigError("sweep axis must be 'labeled' or 'unlabeled'");
  }
  if (spec.values.empty() || spec.seeds.empty() || spec.presets.empty()) {
    throw ConfigError("sweep needs at least one value, seed and preset");
  }
  struct Point {
    std::string preset;
    std::size_t scale;
    std::uint64_t seed;
    ExperimentConfig cfg;
    std::filesystem::path dir;
  };
  std::vector<Point> points;
  for (const auto& preset : spec.presets) {
    for (auto value : spec.values) {
      for (auto seed : spec.seeds) {
        std::vector<std::string> o = overrides;
        o.push_back("preset=\"" + preset + "\"");
        o.push_back("seed=" + std::to_string(seed));
        if (spec.axis == "labeled") {
          o.push_back("data.split.labeled=" + std::to_string(value));
        } else {
          o.push_back("data.split.unlabeled_src=" + std::to_string(value));
          o.push_back("data.split.unlabeled_tgt=" + std::to_string(value));
        }
        // Validate every point before the first run starts.
        ExperimentConfig cfg = parse_config(resolve_config(file_config, o));
        const std::string name = preset + "_" + spec.axis + std::to_string(value) + "_s" +
                                 std::to_string(seed);
        points.push_back({preset, value, seed, std::move(cfg), out_dir / name});
      }
    }
  }
  std::filesystem::create_directories(out_dir);

  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      const auto& p = points[i];
      try {
        const ExperimentResult r = run_experiment(p.cfg, p.dir);
        rows[i] = {p.preset,       spec.axis,     p.scale,       p.seed,
                   r.train.best_step, r.dev.ppl,  r.dev.bleu,    r.test.bleu,
                   r.test.token_acc,  r.test.ppl};
        if (log != nullptr) {
          std::lock_guard lock(log_mutex);
          *log << p.dir.filename().string() << ": test BLEU " << r.test.bleu << ", dev PPL "
               << r.dev.ppl << '\n';
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(spec.jobs, points.size()));
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  {
    std::ofstream csv(out_dir / "sweep.csv", std::ios::binary);
    if (!csv) throw FormatError("cannot write sweep.csv");
    write_sweep_csv(csv, rows);
  }
  for (const char* column : {"test_bleu", "dev_ppl"}) {
    std::ofstream svg(out_dir / (std::string(column) + ".svg"), std::ios::binary);
    svg << sweep_svg(rows, column);
  }
  return rows;
}

}  // namespace semigen
