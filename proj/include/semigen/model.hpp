#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "semigen/tensor.hpp"
#include "semigen/vocab.hpp"

namespace semigen {

/// Parameter ownership, following the three networks that the training
/// routes update: source encoder, target encoder and target decoder.
enum class ParamGroup { enc_s, enc_t, dec_t };

const char* to_string(ParamGroup group);

enum class Side { source, target };

struct ModelConfig {
  std::size_t src_vocab = 0;
  std::size_t tgt_vocab = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 64;
  std::size_t enc_layers = 1;
  std::size_t dec_layers = 1;
  double init_scale = 0.08;
  double forget_bias = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

/// Gate layout along the 4*hidden axis is [input, forget, cell, output].
struct LstmParams {
  Tensor input_weights;      // input_dim x 4h
  Tensor recurrent_weights;  // h x 4h
  Tensor bias;               // 1 x 4h
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// One LSTM transition for a batch: x is B x input_dim.
LstmState lstm_step(const LstmParams& p, const Tensor& x, const LstmState& prev);

struct EncoderParams {
  std::vector<LstmParams> fwd;
  std::vector<LstmParams> bwd;
  Tensor bridge_weights;  // 2h x (dec_layers * h)
  Tensor bridge_bias;     // 1 x (dec_layers * h)
};

struct DecoderParams {
  std::vector<LstmParams> layers;
  Tensor attention;        // 2h x h, bilinear score h'^T W^T h_j
  Tensor combine_weights;  // 3h x h
  Tensor combine_bias;     // 1 x h
  Tensor output_weights;   // h x V
  Tensor output_bias;      // 1 x V
};

struct NamedParam {
  std::string name;
  ParamGroup group;
  Tensor value;
};

/// Encoder-decoder with separate source and target encoders and one shared
/// attentional decoder. The target encoder embeds through tgt_embedding,
/// which belongs to the decoder group.
class Seq2SeqModel {
 public:
  Seq2SeqModel(const ModelConfig& config, std::uint64_t seed);

  Seq2SeqModel(const Seq2SeqModel&) = delete;
  Seq2SeqModel& operator=(const Seq2SeqModel&) = delete;
  Seq2SeqModel(Seq2SeqModel&&) = default;
  Seq2SeqModel& operator=(Seq2SeqModel&&) = default;

  const ModelConfig& config() const { return config_; }

  /// All parameters in canonical order. Entries alias the member tensors.
  const std::vector<NamedParam>& params() const { return params_; }
  std::vector<Tensor> group_params(std::initializer_list<ParamGroup> groups) const;
  const Tensor& param(const std::string& name) const;

  /// Independent deep copy.
  Seq2SeqModel clone() const;
  /// Overwrites parameter values from a model with the same config.
  void copy_values_from(const Seq2SeqModel& other);
  void zero_grad();

  Tensor src_embedding;
  Tensor tgt_embedding;
  EncoderParams enc_s;
  EncoderParams enc_t;
  DecoderParams dec_t;

 private:
  void register_params();

  ModelConfig config_;
  std::vector<NamedParam> params_;
};

/// Dropout settings and randomness for one forward pass.
struct RunContext {
  bool training = false;
  double dropout = 0.0;
  std::mt19937_64* rng = nullptr;
};

struct EncoderOutput {
  /// H: one B x 2h tensor per position (forward and backward concatenated).
  std::vector<Tensor> states;
  /// Position-major stack of states, (T*B) x 2h.
  Tensor memory;
  /// B x T additive mask: 0 at valid positions, a large negative at padding.
  Tensor mask_bias;
  std::vector<std::size_t> lengths;
  /// Decoder initial state, one entry per decoder layer.
  std::vector<LstmState> init;

  std::size_t batch() const { return lengths.size(); }
  std::size_t steps() const { return states.size(); }
};

EncoderOutput encode(const Seq2SeqModel& model, std::span<const TokenIds> batch, Side side,
                     const RunContext& ctx);

struct AttentionStep {
  Tensor scores;   // B x T
  Tensor weights;  // B x T
  Tensor context;  // B x 2h
};

/// Encoder memory with keys already projected through the bilinear matrix.
struct AttentionMemory {
  Tensor memory;
  Tensor keys;  // (T*B) x h
  Tensor mask_bias;
};

AttentionMemory prepare_attention(const Seq2SeqModel& model, const EncoderOutput& enc);
AttentionStep attend(const Tensor& prev_state, const AttentionMemory& mem);

struct DecoderState {
  std::vector<LstmState> layers;
};

struct DecodeStep {
  Tensor probs;      // B x V
  Tensor log_probs;  // B x V
  AttentionStep attention;
  DecoderState state;
};

DecodeStep decode_step(const Seq2SeqModel& model, std::span<const int> prev_tokens,
                       const DecoderState& state, const AttentionMemory& mem,
                       const RunContext& ctx);

/// Per-step outputs of a batched decode; step t is B x V.
struct DecodeTrace {
  std::vector<Tensor> probs;
  std::vector<Tensor> log_probs;
  std::vector<AttentionStep> attention;
};

/// Teacher forcing: step 0 consumes BOS, step t consumes targets[b][t-1].
/// Rows shorter than the longest target are fed PAD past their end.
DecodeTrace decode_teacher_forced(const Seq2SeqModel& model, std::span<const TokenIds> targets,
                                  const EncoderOutput& enc, const RunContext& ctx);

enum class DecodeMode { greedy, sample };

struct Rollout {
  /// Emitted ids per row, including the terminating EOS when one was produced.
  std::vector<TokenIds> tokens;
  DecodeTrace trace;
};

Rollout decode_autoregressive(const Seq2SeqModel& model, const EncoderOutput& enc,
                              DecodeMode mode, std::size_t max_len, std::mt19937_64& rng,
                              const RunContext& ctx);

/// Greedy decode of source sentences in eval mode, EOS stripped.
std::vector<TokenIds> greedy_translate(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                                       std::size_t max_len, std::size_t batch_size = 32);

}  // namespace semigen
