#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "semigen/lm.hpp"
#include "semigen/model.hpp"
#include "semigen/noise.hpp"
#include "semigen/tensor.hpp"

namespace semigen {

// --- losses ------------------------------------------------------------------

/// Mean over the batch of each sequence's mean token NLL:
///   -(1/B) sum_b (1/|Y_b|) sum_t log p_t[b, y_bt]
/// log_probs[t] is B x V; the longest gold sequence must have exactly
/// log_probs.size() tokens.
Tensor cross_entropy(std::span<const Tensor> log_probs, std::span<const TokenIds> gold);

/// REINFORCE surrogate with rewards held constant:
///   -(1/B) sum_b (1/|Y'_b|) sum_t r_bt log p_t[b, y'_bt]
Tensor reinforce_loss(std::span<const Tensor> log_probs, std::span<const TokenIds> sampled,
                      std::span<const std::vector<double>> rewards);

/// Appends EOS to each sequence.
std::vector<TokenIds> with_eos(std::span<const TokenIds> seqs);

// --- configuration -------------------------------------------------------------

struct TrainConfig {
  double alpha = 0.2;
  bool all_use_rl = false;
  std::array<double, 3> route_weights{1.0, 0.0, 0.0};
  double learning_rate = 1.0;
  double clip_norm = 5.0;
  double dropout = 0.3;
  /// Dropout during the sampled rollouts of the RL term.
  bool rollout_dropout = true;
  std::size_t batch_size = 16;
  std::size_t max_steps = 5000;
  std::size_t eval_every = 100;
  std::size_t patience = 10;
  std::size_t max_decode_len = 60;
  bool rl_baseline = false;
  /// Stop once dev token accuracy reaches this value; 0 disables.
  double target_dev_accuracy = 0.0;
  /// When false the wall_ms column is written as 0 so the log is reproducible.
  bool log_wall_time = true;
  std::uint64_t seed = 1;
  NoiseConfig noise;

  /// Throws ConfigError on invalid values.
  void validate() const;
  bool uses_rl() const { return all_use_rl || route_weights[2] > 0.0; }
};

struct LossBundle {
  double ce = 0.0;
  double rl = 0.0;
  double combined = 0.0;
  double grad_norm = 0.0;
};

// --- routes --------------------------------------------------------------------

/// Runs single route updates on a shared model. Route 1: source -> ENC_S ->
/// DEC_T -> target. Route 2: corrupted target -> ENC_T -> DEC_T -> clean
/// target. Route 3: source -> ENC_S -> DEC_T -> sampled output scored by
/// the LM.
class RouteTrainer {
 public:
  RouteTrainer(Seq2SeqModel& model, const NGramModel* lm, const TrainConfig& cfg,
               std::mt19937_64& rng);

  LossBundle train_route1(std::span<const TokenIds> sources, std::span<const TokenIds> targets);
  LossBundle train_route2(std::span<const TokenIds> targets);
  LossBundle train_route3(std::span<const TokenIds> sources);

  /// Route-3 loss for a fixed sample, rebuilt by teacher forcing along it.
  /// No parameter update; used to check gradients against the rollout graph.
  Tensor route3_loss_for_sample(std::span<const TokenIds> sources,
                                std::span<const TokenIds> sampled) const;

  /// Rollout tokens from the last RL term computed.
  const std::vector<TokenIds>& last_sample() const { return last_sample_; }
  /// Running mean reward used as baseline (0 until the first RL term).
  double baseline() const { return baseline_mean_; }

  /// Skip the update after backward, leaving gradients in place.
  void set_apply_updates(bool on) { apply_updates_ = on; }

 private:
  struct RlTerm {
    Tensor loss;
    double value = 0.0;
  };
  RlTerm rl_term(const EncoderOutput& enc, const RunContext& ctx);
  LossBundle finish(Tape& tape, const Tensor& loss, double ce, double rl,
                    std::initializer_list<ParamGroup> groups);
  std::vector<std::vector<double>> rewards_for(std::span<const TokenIds> sampled);
  RunContext context() const;

  Seq2SeqModel& model_;
  const NGramModel* lm_;
  TrainConfig cfg_;
  std::mt19937_64& rng_;
  std::vector<TokenIds> last_sample_;
  double baseline_mean_ = 0.0;
  std::size_t baseline_count_ = 0;
  bool apply_updates_ = true;
};

// --- training loop ---------------------------------------------------------------

/// Id-encoded training data. Route 2 draws from the target pool (labeled
/// and unlabeled targets), route 3 from the source pool.
struct TrainingData {
  std::vector<TokenIds> labeled_src;
  std::vector<TokenIds> labeled_tgt;
  std::vector<TokenIds> target_pool;
  std::vector<TokenIds> source_pool;
  std::vector<TokenIds> dev_src;
  std::vector<TokenIds> dev_tgt;
  /// Raw dev references for BLEU/accuracy on surface tokens.
  std::vector<Sentence> dev_refs;
};

struct MetricsRow {
  std::size_t step = 0;
  std::array<std::size_t, 3> route_counts{};
  double train_ce = 0.0;
  double train_rl = 0.0;
  double dev_ppl = 0.0;
  double dev_bleu = 0.0;
  double dev_token_acc = 0.0;
  long long wall_ms = 0;
};

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRow& row);

struct TrainResult {
  std::vector<MetricsRow> log;
  std::size_t steps = 0;
  std::size_t best_step = 0;
  double best_dev_loss = 0.0;
  double best_dev_accuracy = 0.0;
  std::array<std::size_t, 3> route_counts{};
  bool early_stopped = false;
  std::vector<std::string> warnings;
};

/// Main loop: per step an i.i.d. route draw, then one update.
/// Evaluates every eval_every steps, keeps the best-dev-loss parameters and
/// restores them into model at the end.
TrainResult train(Seq2SeqModel& model, const TrainingData& data, const Vocab& tgt_vocab,
                  const NGramModel* lm, const TrainConfig& cfg, std::ostream* metrics = nullptr);

}  // namespace semigen
