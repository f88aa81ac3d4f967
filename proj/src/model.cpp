#include "semigen/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace semigen {

namespace {

constexpr double kMaskedScore = -1e9;

LstmParams make_lstm(std::size_t input_dim, std::size_t hidden_dim) {
  return {Tensor::zeros(input_dim, 4 * hidden_dim, true),
          Tensor::zeros(hidden_dim, 4 * hidden_dim, true), Tensor::zeros(1, 4 * hidden_dim, true),
          input_dim, hidden_dim};
}

EncoderParams make_encoder(const ModelConfig& c) {
  EncoderParams enc;
  for (std::size_t l = 0; l < c.enc_layers; ++l) {
    const std::size_t in = l == 0 ? c.embed_dim : 2 * c.hidden_dim;
    enc.fwd.push_back(make_lstm(in, c.hidden_dim));
    enc.bwd.push_back(make_lstm(in, c.hidden_dim));
  }
  enc.bridge_weights = Tensor::zeros(2 * c.hidden_dim, c.dec_layers * c.hidden_dim, true);
  enc.bridge_bias = Tensor::zeros(1, c.dec_layers * c.hidden_dim, true);
  return enc;
}

DecoderParams make_decoder(const ModelConfig& c) {
  DecoderParams dec;
  for (std::size_t l = 0; l < c.dec_layers; ++l) {
    dec.layers.push_back(make_lstm(l == 0 ? c.embed_dim : c.hidden_dim, c.hidden_dim));
  }
  dec.attention = Tensor::zeros(2 * c.hidden_dim, c.hidden_dim, true);
  dec.combine_weights = Tensor::zeros(3 * c.hidden_dim, c.hidden_dim, true);
  dec.combine_bias = Tensor::zeros(1, c.hidden_dim, true);
  dec.output_weights = Tensor::zeros(c.hidden_dim, c.tgt_vocab, true);
  dec.output_bias = Tensor::zeros(1, c.tgt_vocab, true);
  return dec;
}

bool is_forget_bias(const std::string& name) {
  return name.size() >= 5 && name.compare(name.size() - 5, 5, ".bias") == 0 &&
         name.find("layer") != std::string::npos;
}

Tensor column(std::span<const double> values) {
  return Tensor::from(values.size(), 1, {values.begin(), values.end()});
}

// Keeps rows whose position is past their length at the previous state.
LstmState masked(const LstmState& next, const LstmState& prev, std::span<const double> keep_new) {
  std::vector<double> keep_old(keep_new.size());
  for (std::size_t i = 0; i < keep_new.size(); ++i) keep_old[i] = 1.0 - keep_new[i];
  Tensor m_new = column(keep_new);
  Tensor m_old = column(keep_old);
  return {add(scale_rows(next.h, m_new), scale_rows(prev.h, m_old)),
          add(scale_rows(next.c, m_new), scale_rows(prev.c, m_old))};
}

Tensor maybe_dropout(const Tensor& x, const RunContext& ctx) {
  if (!ctx.training || ctx.dropout <= 0.0) return x;
  if (ctx.rng == nullptr) throw ContractError("dropout in training mode needs an rng");
  return dropout(x, ctx.dropout, true, *ctx.rng);
}

std::vector<int> column_ids(std::span<const TokenIds> batch, std::size_t t) {
  std::vector<int> ids(batch.size(), kPad);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (t < batch[b].size()) ids[b] = batch[b][t];
  }
  return ids;
}

int sample_row(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return static_cast<int>(i);
  }
  return last_positive;
}

int argmax_row(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

const char* to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::enc_s:
      return "enc_s";
    case ParamGroup::enc_t:
      return "enc_t";
    case ParamGroup::dec_t:
      return "dec_t";
  }
  return "?";
}

LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& prev) {
  const std::size_t h = p.hidden_dim;
  Tensor gates = add_row(add(matmul(x, p.input_weights), matmul(prev.h, p.recurrent_weights)), p.bias);
  Tensor in_gate = sigmoid(slice_cols(gates, 0, h));
  Tensor forget_gate = sigmoid(slice_cols(gates, h, h));
  Tensor cell_in = tanh(slice_cols(gates, 2 * h, h));
  Tensor out_gate = sigmoid(slice_cols(gates, 3 * h, h));
  Tensor c = add(mul(forget_gate, prev.c), mul(in_gate, cell_in));
  return {mul(out_gate, tanh(c)), c};
}

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config.src_vocab == 0 || config.tgt_vocab == 0 || config.embed_dim == 0 ||
      config.hidden_dim == 0 || config.enc_layers == 0 || config.dec_layers == 0) {
    throw ContractError("model config: all dimensions must be positive");
  }
  src_embedding = Tensor::zeros(config.src_vocab, config.embed_dim, true);
  tgt_embedding = Tensor::zeros(config.tgt_vocab, config.embed_dim, true);
  enc_s = make_encoder(config);
  enc_t = make_encoder(config);
  dec_t = make_decoder(config);
  register_params();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-config.init_scale, config.init_scale);
  const std::size_t h = config.hidden_dim;
  for (auto& p : params_) {
    auto v = p.value.mutable_values();
    for (auto& x : v) x = init(rng);
    if (is_forget_bias(p.name)) {
      std::fill(v.begin() + static_cast<std::ptrdiff_t>(h),
                v.begin() + static_cast<std::ptrdiff_t>(2 * h), config.forget_bias);
    }
  }
}

void Seq2SeqModel::register_params() {
  params_.clear();
  auto add_lstm = [this](const std::string& prefix, ParamGroup g, const LstmParams& p) {
    params_.push_back({prefix + ".input_weights", g, p.input_weights});
    params_.push_back({prefix + ".recurrent_weights", g, p.recurrent_weights});
    params_.push_back({prefix + ".bias", g, p.bias});
  };
  auto add_encoder = [&](const std::string& prefix, ParamGroup g, const EncoderParams& e) {
    for (std::size_t l = 0; l < e.fwd.size(); ++l) {
      add_lstm(prefix + ".layer" + std::to_string(l) + ".fwd", g, e.fwd[l]);
      add_lstm(prefix + ".layer" + std::to_string(l) + ".bwd", g, e.bwd[l]);
    }
    params_.push_back({prefix + ".bridge.weights", g, e.bridge_weights});
    params_.push_back({prefix + ".bridge.bias", g, e.bridge_bias});
  };
  params_.push_back({"src_embedding", ParamGroup::enc_s, src_embedding});
  add_encoder("enc_s", ParamGroup::enc_s, enc_s);
  add_encoder("enc_t", ParamGroup::enc_t, enc_t);
  params_.push_back({"tgt_embedding", ParamGroup::dec_t, tgt_embedding});
  for (std::size_t l = 0; l < dec_t.layers.size(); ++l) {
    add_lstm("dec_t.layer" + std::to_string(l), ParamGroup::dec_t, dec_t.layers[l]);
  }
  params_.push_back({"dec_t.attention", ParamGroup::dec_t, dec_t.attention});
  params_.push_back({"dec_t.combine.weights", ParamGroup::dec_t, dec_t.combine_weights});
  params_.push_back({"dec_t.combine.bias", ParamGroup::dec_t, dec_t.combine_bias});
  params_.push_back({"dec_t.output.weights", ParamGroup::dec_t, dec_t.output_weights});
  params_.push_back({"dec_t.output.bias", ParamGroup::dec_t, dec_t.output_bias});
}

std::vector<Tensor> Seq2SeqModel::group_params(std::initializer_list<ParamGroup> groups) const {
  std::vector<Tensor> out;
  for (const auto& p : params_) {
    if (std::find(groups.begin(), groups.end(), p.group) != groups.end()) out.push_back(p.value);
  }
  return out;
}

const Tensor& Seq2SeqModel::param(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.value;
  }
  throw std::out_of_range("model: no parameter named '" + name + "'");
}

Seq2SeqModel Seq2SeqModel::clone() const {
  Seq2SeqModel copy(config_, 0);
  copy.copy_values_from(*this);
  return copy;
}

void Seq2SeqModel::copy_values_from(const Seq2SeqModel& other) {
  if (!(other.config_ == config_)) throw ContractError("copy_values_from: config mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto src = other.params_[i].value.values();
    auto dst = params_[i].value.mutable_values();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

void Seq2SeqModel::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

EncoderOutput encode(const Seq2SeqModel& model, std::span<const TokenIds> batch, Side side,
                     const RunContext& ctx) {
  if (batch.empty()) throw ContractError("encode: empty batch");
  const auto& cfg = model.config();
  const std::size_t vocab = side == Side::source ? cfg.src_vocab : cfg.tgt_vocab;
  EncoderOutput out;
  std::size_t steps = 0;
  for (const auto& seq : batch) {
    if (seq.empty()) throw ContractError("encode: empty token sequence");
    for (int id : seq) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
        throw std::out_of_range("encode: token id " + std::to_string(id) +
                                " outside vocabulary of size " + std::to_string(vocab));
      }
    }
    out.lengths.push_back(seq.size());
    steps = std::max(steps, seq.size());
  }
  const std::size_t B = batch.size();
  const std::size_t h = cfg.hidden_dim;
  const Tensor& table = side == Side::source ? model.src_embedding : model.tgt_embedding;
  const EncoderParams& enc = side == Side::source ? model.enc_s : model.enc_t;

  // keep[t][b] = 1 while position t is inside row b.
  std::vector<std::vector<double>> keep(steps, std::vector<double>(B, 1.0));
  std::vector<bool> ragged(steps, false);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < B; ++b) {
      if (t >= out.lengths[b]) {
        keep[t][b] = 0.0;
        ragged[t] = true;
      }
    }
  }

  std::vector<Tensor> inputs;
  inputs.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    auto ids = column_ids(batch, t);
    inputs.push_back(lookup(table, ids));
  }

  LstmState fwd_final;
  LstmState bwd_final;
  for (std::size_t l = 0; l < enc.fwd.size(); ++l) {
    std::vector<Tensor> fwd_out(steps);
    std::vector<Tensor> bwd_out(steps);
    LstmState st{Tensor::zeros(B, h), Tensor::zeros(B, h)};
    for (std::size_t t = 0; t < steps; ++t) {
      LstmState next = lstm_step(enc.fwd[l], inputs[t], st);
      st = ragged[t] ? masked(next, st, keep[t]) : next;
      fwd_out[t] = st.h;
    }
    fwd_final = st;
    st = {Tensor::zeros(B, h), Tensor::zeros(B, h)};
    for (std::size_t t = steps; t-- > 0;) {
      LstmState next = lstm_step(enc.bwd[l], inputs[t], st);
      st = ragged[t] ? masked(next, st, keep[t]) : next;
      bwd_out[t] = st.h;
    }
    bwd_final = st;
    for (std::size_t t = 0; t < steps; ++t) {
      const Tensor both[] = {fwd_out[t], bwd_out[t]};
      inputs[t] = maybe_dropout(concat_cols(both), ctx);
    }
  }
  out.states = std::move(inputs);
  out.memory = concat_rows(out.states);

  std::vector<double> bias(B * steps, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = out.lengths[b]; t < steps; ++t) bias[b * steps + t] = kMaskedScore;
  }
  out.mask_bias = Tensor::from(B, steps, std::move(bias));

  const Tensor finals[] = {fwd_final.h, bwd_final.h};
  Tensor bridge = tanh(add_row(matmul(concat_cols(finals), enc.bridge_weights), enc.bridge_bias));
  for (std::size_t l = 0; l < cfg.dec_layers; ++l) {
    out.init.push_back({slice_cols(bridge, l * h, h), Tensor::zeros(B, h)});
  }
  return out;
}

AttentionMemory prepare_attention(const Seq2SeqModel& model, const EncoderOutput& enc) {
  return {enc.memory, matmul(enc.memory, model.dec_t.attention), enc.mask_bias};
}

AttentionStep attend(const Tensor& prev_state, const AttentionMemory& mem) {
  Tensor scores = add(seq_dot(prev_state, mem.keys), mem.mask_bias);
  Tensor weights = softmax_rows(scores);
  return {scores, weights, seq_mix(weights, mem.memory)};
}

DecodeStep decode_step(const Seq2SeqModel& model, std::span<const int> prev_tokens,
                       const DecoderState& state, const AttentionMemory& mem,
                       const RunContext& ctx) {
  const auto& dec = model.dec_t;
  if (state.layers.size() != dec.layers.size()) {
    throw DimensionError("decode_step: state has " + std::to_string(state.layers.size()) +
                         " layers, decoder has " + std::to_string(dec.layers.size()));
  }
  AttentionStep att = attend(state.layers.back().h, mem);
  Tensor x = lookup(model.tgt_embedding, prev_tokens);
  DecoderState next;
  for (std::size_t l = 0; l < dec.layers.size(); ++l) {
    next.layers.push_back(lstm_step(dec.layers[l], x, state.layers[l]));
    x = maybe_dropout(next.layers.back().h, ctx);
  }
  const Tensor parts[] = {x, att.context};
  Tensor combined = tanh(add_row(matmul(concat_cols(parts), dec.combine_weights), dec.combine_bias));
  Tensor logits = add_row(matmul(combined, dec.output_weights), dec.output_bias);
  return {softmax_rows(logits), log_softmax_rows(logits), std::move(att), std::move(next)};
}

DecodeTrace decode_teacher_forced(const Seq2SeqModel& model, std::span<const TokenIds> targets,
                                  const EncoderOutput& enc, const RunContext& ctx) {
  if (targets.size() != enc.batch()) {
    throw DimensionError("decode_teacher_forced: " + std::to_string(targets.size()) +
                         " targets for a batch of " + std::to_string(enc.batch()));
  }
  std::size_t steps = 0;
  for (const auto& y : targets) {
    if (y.empty()) throw ContractError("decode_teacher_forced: empty target sequence");
    steps = std::max(steps, y.size());
  }
  AttentionMemory mem = prepare_attention(model, enc);
  DecoderState state{enc.init};
  DecodeTrace trace;
  std::vector<int> prev(targets.size(), kBos);
  for (std::size_t t = 0; t < steps; ++t) {
    if (t > 0) prev = column_ids(targets, t - 1);
    DecodeStep step = decode_step(model, prev, state, mem, ctx);
    trace.probs.push_back(step.probs);
    trace.log_probs.push_back(step.log_probs);
    trace.attention.push_back(std::move(step.attention));
    state = std::move(step.state);
  }
  return trace;
}

Rollout decode_autoregressive(const Seq2SeqModel& model, const EncoderOutput& enc,
                              DecodeMode mode, std::size_t max_len, std::mt19937_64& rng,
                              const RunContext& ctx) {
  if (max_len == 0) throw ContractError("decode_autoregressive: max_len must be >= 1");
  const std::size_t B = enc.batch();
  const std::size_t V = model.config().tgt_vocab;
  AttentionMemory mem = prepare_attention(model, enc);
  DecoderState state{enc.init};
  Rollout out;
  out.tokens.assign(B, {});
  std::vector<bool> done(B, false);
  std::vector<int> prev(B, kBos);
  for (std::size_t t = 0; t < max_len; ++t) {
    DecodeStep step = decode_step(model, prev, state, mem, ctx);
    std::size_t active = 0;
    for (std::size_t b = 0; b < B; ++b) {
      if (done[b]) {
        prev[b] = kPad;
        continue;
      }
      std::span<const double> row = step.probs.values().subspan(b * V, V);
      const int tok = mode == DecodeMode::greedy
                          ? argmax_row(step.log_probs.values().subspan(b * V, V))
                          : sample_row(row, rng);
      out.tokens[b].push_back(tok);
      prev[b] = tok;
      if (tok == kEos) {
        done[b] = true;
      } else {
        ++active;
      }
    }
    out.trace.probs.push_back(step.probs);
    out.trace.log_probs.push_back(step.log_probs);
    out.trace.attention.push_back(std::move(step.attention));
    state = std::move(step.state);
    if (active == 0) break;
  }
  return out;
}

std::vector<TokenIds> greedy_translate(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                                       std::size_t max_len, std::size_t batch_size) {
  NoGradScope no_grad;
  std::mt19937_64 unused(0);
  const RunContext eval{};
  std::vector<TokenIds> out;
  out.reserve(sources.size());
  for (std::size_t start = 0; start < sources.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, sources.size() - start);
    auto chunk = sources.subspan(start, n);
    EncoderOutput enc = encode(model, chunk, Side::source, eval);
    Rollout r = decode_autoregressive(model, enc, DecodeMode::greedy, max_len, unused, eval);
    for (auto& toks : r.tokens) {
      if (!toks.empty() && toks.back() == kEos) toks.pop_back();
      out.push_back(std::move(toks));
    }
  }
  return out;
}

}  // namespace semigen
