#include "semigen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "semigen/errors.hpp"

namespace semigen {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace {

using nlohmann::json;

json config_json(const ModelConfig& c) {
  return {{"src_vocab", c.src_vocab},   {"tgt_vocab", c.tgt_vocab},
          {"embed_dim", c.embed_dim},   {"hidden_dim", c.hidden_dim},
          {"enc_layers", c.enc_layers}, {"dec_layers", c.dec_layers},
          {"init_scale", c.init_scale}, {"forget_bias", c.forget_bias}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.src_vocab = j.at("src_vocab").get<std::size_t>();
  c.tgt_vocab = j.at("tgt_vocab").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.enc_layers = j.at("enc_layers").get<std::size_t>();
  c.dec_layers = j.at("dec_layers").get<std::size_t>();
  c.init_scale = j.at("init_scale").get<double>();
  c.forget_bias = j.at("forget_bias").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model,
                     const Vocab& src_vocab, const Vocab& tgt_vocab) {
  json header;
  header["format"] = kCheckpointMagic;
  header["config"] = config_json(model.config());
  header["src_tokens"] = src_vocab.tokens();
  header["tgt_tokens"] = tgt_vocab.tokens();
  header["src_hash"] = src_vocab.hash();
  header["tgt_hash"] = tgt_vocab.hash();
  json params = json::array();
  for (const auto& p : model.params()) {
    params.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
  }
  header["params"] = std::move(params);
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint '" + path.string() + "'");
  out.write(kCheckpointMagic, 8);
  const std::uint64_t n = text.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.params()) {
    const auto& v = p.value.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw FormatError("failed writing checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint '" + path.string() + "'");
  char magic[8];
  std::uint64_t n = 0;
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw FormatError("'" + path.string() + "' is not a checkpoint (bad magic tag)");
  }
  if (!in.read(reinterpret_cast<char*>(&n), sizeof n) || n > (1u << 30)) {
    throw FormatError("checkpoint header length is corrupt");
  }
  std::string text(n, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(n))) {
    throw FormatError("checkpoint header is truncated");
  }
  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  try {
    Vocab src = Vocab::from_tokens(header.at("src_tokens").get<std::vector<std::string>>());
    Vocab tgt = Vocab::from_tokens(header.at("tgt_tokens").get<std::vector<std::string>>());
    if (src.hash() != header.at("src_hash").get<std::uint64_t>() ||
        tgt.hash() != header.at("tgt_hash").get<std::uint64_t>()) {
      throw FormatError("checkpoint vocabulary hash mismatch");
    }
    const ModelConfig cfg = config_from(header.at("config"));
    if (cfg.src_vocab != src.size() || cfg.tgt_vocab != tgt.size()) {
      throw FormatError("checkpoint config does not match its vocabularies");
    }
    Seq2SeqModel model(cfg, 0);
    const auto& listed = header.at("params");
    if (listed.size() != model.params().size()) {
      throw FormatError("checkpoint lists " + std::to_string(listed.size()) +
                        " parameters, model has " + std::to_string(model.params().size()));
    }
    for (std::size_t i = 0; i < listed.size(); ++i) {
      const auto& p = model.params()[i];
      const auto& entry = listed[i];
      if (entry.at("name").get<std::string>() != p.name ||
          entry.at("rows").get<std::size_t>() != p.value.rows() ||
          entry.at("cols").get<std::size_t>() != p.value.cols()) {
        throw FormatError("checkpoint parameter " + std::to_string(i) + " ('" +
                          entry.at("name").get<std::string>() + "') does not match '" + p.name +
                          "' " + p.value.shape().str());
      }
      Tensor t = p.value;
      auto v = t.mutable_values();
      if (!in.read(reinterpret_cast<char*>(v.data()),
                   static_cast<std::streamsize>(v.size() * sizeof(double)))) {
        throw FormatError("checkpoint data is truncated at '" + p.name + "'");
      }
    }
    if (in.peek() != std::char_traits<char>::eof()) {
      throw FormatError("checkpoint has trailing bytes");
    }
    return {std::move(model), std::move(src), std::move(tgt)};
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
}

}  // namespace semigen
