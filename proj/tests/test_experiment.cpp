#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "semigen/checkpoint.hpp"
#include "semigen/errors.hpp"
#include "semigen/experiment.hpp"
#include "support.hpp"

using namespace semigen;
using namespace semigen::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("semigen_test_exp_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// A run small enough for unit tests.
std::vector<std::string> tiny_run() {
  return {"data.synthetic.size=120", "data.split.labeled=40", "data.split.unlabeled_src=20",
          "data.split.unlabeled_tgt=20", "data.split.dev=10", "data.split.test=10",
          "model.embed_dim=8", "model.hidden_dim=8", "train.batch_size=4",
          "train.max_steps=12", "train.eval_every=6", "train.max_decode_len=20",
          "train.log_wall_time=false", "lm.source=\"split\""};
}

}  // namespace

TEST_CASE("checkpoints round-trip parameters and vocabularies") {
  const fs::path dir = temp_dir("ckpt");
  const Vocab src = Vocab::from_tokens({"<pad>", "<s>", "</s>", "<unk>", "a", "b", "c"});
  const Vocab tgt = Vocab::from_tokens({"<pad>", "<s>", "</s>", "<unk>", "x", "y"});
  Seq2SeqModel m(tiny_config(src.size(), tgt.size()), 3);
  save_checkpoint(dir / "m.ckpt", m, src, tgt);
  const Checkpoint back = load_checkpoint(dir / "m.ckpt");
  CHECK(back.model.config() == m.config());
  CHECK(fingerprint(back.model) == fingerprint(m));
  CHECK(back.src_vocab.tokens() == src.tokens());
  CHECK(back.tgt_vocab.hash() == tgt.hash());
  const std::vector<TokenIds> xs{{4, 5}, {6}};
  CHECK(greedy_translate(back.model, xs, 5) == greedy_translate(m, xs, 5));
  CHECK(slurp(dir / "m.ckpt").rfind(kCheckpointMagic, 0) == 0);

  const std::string bytes = slurp(dir / "m.ckpt");
  {
    std::ofstream out(dir / "bad_magic.ckpt", std::ios::binary);
    out << "XXXXXXXX" << bytes.substr(8);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "bad_magic.ckpt"), FormatError);
  {
    std::ofstream out(dir / "short.ckpt", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 16);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), FormatError);
  {
    std::ofstream out(dir / "long.ckpt", std::ios::binary);
    out << bytes << "x";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "long.ckpt"), FormatError);
  {
    std::string edited = bytes;
    const auto pos = edited.find("\"x\"");
    REQUIRE(pos != std::string::npos);
    edited[pos + 1] = 'z';
    std::ofstream out(dir / "hash.ckpt", std::ios::binary);
    out << edited;
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "hash.ckpt"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("presets set the route weights and the RL flag") {
  const Json r1 = resolve_config(Json{{"preset", "r1"}});
  CHECK(r1["train"]["route_weights"] == Json::array({1.0, 0.0, 0.0}));
  CHECK(r1["train"]["all_use_rl"] == false);
  const Json r1lm = resolve_config(Json{{"preset", "r1+lm"}});
  CHECK(r1lm["train"]["route_weights"] == Json::array({1.0, 0.0, 0.0}));
  CHECK(r1lm["train"]["all_use_rl"] == true);
  const Json r12 = resolve_config(Json{{"preset", "r12+lm"}});
  CHECK(r12["train"]["route_weights"] == Json::array({0.5, 0.5, 0.0}));
  const Json r123 = resolve_config(Json{{"preset", "r123+lm"}});
  const auto w = r123["train"]["route_weights"].get<std::vector<double>>();
  CHECK(w[0] == w[1]);
  CHECK(w[1] == w[2]);
  CHECK(r123["train"]["all_use_rl"] == true);
  CHECK_THROWS_AS(resolve_config(Json{{"preset", "r9"}}), ConfigError);
  CHECK(preset_names().size() == 4);
}

TEST_CASE("resolution order: defaults, preset, file, overrides") {
  const Json file{{"preset", "r123+lm"},
                  {"train", {{"all_use_rl", false}, {"alpha", 0.5}}},
                  {"seed", 4}};
  const Json a = resolve_config(file);
  CHECK(a["train"]["all_use_rl"] == false);  // file beats preset
  CHECK(a["train"]["alpha"] == 0.5);
  CHECK(a["train"]["learning_rate"] == 1.0);  // default kept
  const Json b = resolve_config(file, {"train.alpha=0.25", "seed=9", "output.dir=out/x"});
  CHECK(b["train"]["alpha"] == 0.25);
  CHECK(b["seed"] == 9);
  CHECK(b["output"]["dir"] == "out/x");  // non-JSON text falls back to a string
  const Json c = resolve_config(file, {"preset=\"r1\""});
  CHECK(c["preset"] == "r1");
  CHECK(c["train"]["route_weights"] == Json::array({1.0, 0.0, 0.0}));
  CHECK(c["train"]["all_use_rl"] == false);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(resolve_config(Json{{"trian", {{"alpha", 1}}}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json::object(), {"train.alhpa=1"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json::object(), {"novalue"}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Json::array()), ConfigError);
  CHECK_THROWS_AS(parse_config(resolve_config(Json::object(), {"train.alpha=\"big\""})),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(resolve_config(Json::object(), {"train.batch_size=-3"})),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(resolve_config(Json::object(), {"data.synthetic.size=0"})),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(resolve_config(Json::object(), {"train.route_weights=[1,0]"})),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(resolve_config(Json::object(), {"lm.source=\"web\""})),
                  ConfigError);
}

TEST_CASE("an RL preset without an LM path fails before training") {
  for (const char* preset : {"r1+lm", "r12+lm", "r123+lm"}) {
    CAPTURE(preset);
    try {
      parse_config(resolve_config(Json{{"preset", preset}}));
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("lm.path") != std::string::npos);
    }
    CHECK_THROWS_AS(
        parse_config(resolve_config(Json{{"preset", preset}}, {"lm.path=/no/such/file"})),
        ConfigError);
    CHECK_NOTHROW(parse_config(resolve_config(Json{{"preset", preset}}, {"lm.source=\"split\""})));
  }
  CHECK_NOTHROW(parse_config(resolve_config(Json{{"preset", "r1"}})));
}

TEST_CASE("config hash is stable and sensitive") {
  const Json a = resolve_config(Json{{"preset", "r1"}});
  CHECK(config_hash(a) == config_hash(resolve_config(Json{{"preset", "r1"}})));
  CHECK(config_hash(a) != config_hash(resolve_config(Json{{"preset", "r1"}}, {"seed=2"})));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("an experiment writes its artifacts and reproduces its metrics") {
  const fs::path dir = temp_dir("run");
  std::vector<std::string> o = tiny_run();
  o.push_back("preset=\"r123+lm\"");
  const ExperimentConfig cfg = parse_config(resolve_config(Json::object(), o));
  const ExperimentResult a = run_experiment(cfg, dir / "a");
  const ExperimentResult b = run_experiment(cfg, dir / "b");
  for (const char* f : {"manifest.json", "metrics.csv", "model.ckpt", "report.json", "lm.arpa"}) {
    CHECK(fs::exists(dir / "a" / f));
  }
  CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
  CHECK(slurp(dir / "a" / "model.ckpt") == slurp(dir / "b" / "model.ckpt"));
  CHECK(slurp(dir / "a" / "lm.arpa") == slurp(dir / "b" / "lm.arpa"));
  CHECK(a.test.bleu == b.test.bleu);

  const Json report = Json::parse(slurp(dir / "a" / "report.json"));
  CHECK(report["config_hash"] == config_hash(cfg.resolved));
  CHECK(report["seed"] == 1);
  CHECK(report["steps"] == 12);
  CHECK(report["split"]["labeled"] == 40);
  CHECK(report.contains("test"));
  CHECK(report["config"] == cfg.resolved);

  // The manifest alone reproduces the run.
  const Json manifest = Json::parse(slurp(dir / "a" / "manifest.json"));
  const ExperimentConfig again = parse_config(manifest["config"]);
  run_experiment(again, dir / "c");
  CHECK(slurp(dir / "c" / "metrics.csv") == slurp(dir / "a" / "metrics.csv"));

  // The checkpoint decodes the same way as the in-memory model it came from.
  const Checkpoint ckpt = load_checkpoint(dir / "a" / "model.ckpt");
  CHECK(ckpt.model.config().hidden_dim == 8);
  fs::remove_all(dir);
}

TEST_CASE("sweeps record every point and their plots regenerate from the CSV") {
  const fs::path dir = temp_dir("sweep");
  SweepSpec spec;
  spec.axis = "labeled";
  spec.values = {20, 30};
  spec.seeds = {1, 2};
  spec.jobs = 2;
  const auto rows = run_sweep(Json::object(), tiny_run(), spec, dir);
  CHECK(rows.size() == 2 * 2 * 2);
  std::set<std::tuple<std::string, std::size_t, std::uint64_t>> keys;
  for (const auto& r : rows) keys.insert({r.preset, r.scale, r.seed});
  CHECK(keys.size() == rows.size());
  CHECK(fs::exists(dir / "r1_labeled20_s1" / "report.json"));
  CHECK(fs::exists(dir / "r123+lm_labeled30_s2" / "metrics.csv"));

  std::ifstream csv(dir / "sweep.csv");
  const auto back = read_sweep_csv(csv);
  REQUIRE(back.size() == rows.size());
  CHECK(sweep_svg(back, "test_bleu") == slurp(dir / "test_bleu.svg"));
  CHECK(sweep_svg(back, "dev_ppl") == slurp(dir / "dev_ppl.svg"));

  SweepSpec bad = spec;
  bad.axis = "sideways";
  CHECK_THROWS_AS(run_sweep(Json::object(), tiny_run(), bad, dir), ConfigError);
  fs::remove_all(dir);
}
