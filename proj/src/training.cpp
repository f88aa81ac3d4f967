#include "semigen/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "semigen/errors.hpp"
#include "semigen/eval.hpp"

namespace semigen {

namespace {

std::size_t longest(std::span<const TokenIds> seqs) {
  std::size_t n = 0;
  for (const auto& s : seqs) n = std::max(n, s.size());
  return n;
}

// sum_t sum_b weight(b, t) * log_probs[t](b, seq_b[t]).
Tensor weighted_log_likelihood(std::span<const Tensor> log_probs, std::span<const TokenIds> seqs,
                               const std::function<double(std::size_t, std::size_t)>& weight,
                               const char* what) {
  const std::size_t batch = seqs.size();
  if (batch == 0) throw ContractError(std::string(what) + ": empty batch");
  for (const auto& s : seqs) {
    if (s.empty()) throw ContractError(std::string(what) + ": empty sequence");
  }
  if (longest(seqs) != log_probs.size()) {
    throw ContractError(std::string(what) + ": " + std::to_string(log_probs.size()) +
                        " distributions for sequences of length " + std::to_string(longest(seqs)));
  }
  Tensor total;
  bool first = true;
  std::vector<int> ids(batch);
  std::vector<double> w(batch);
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    if (log_probs[t].rows() != batch) {
      throw DimensionError(std::string(what) + ": distribution rows " +
                           std::to_string(log_probs[t].rows()) + " for batch " +
                           std::to_string(batch));
    }
    for (std::size_t b = 0; b < batch; ++b) {
      const bool inside = t < seqs[b].size();
      ids[b] = inside ? seqs[b][t] : -1;
      w[b] = inside ? weight(b, t) : 0.0;
    }
    Tensor term = weighted_pick_sum(log_probs[t], ids, w);
    total = first ? term : add(total, term);
    first = false;
  }
  return total;
}

}  // namespace

Tensor cross_entropy(std::span<const Tensor> log_probs, std::span<const TokenIds> gold) {
  const double batch = static_cast<double>(gold.size());
  return weighted_log_likelihood(
      log_probs, gold,
      [&](std::size_t b, std::size_t) {
        return -1.0 / (static_cast<double>(gold[b].size()) * batch);
      },
      "cross_entropy");
}

Tensor reinforce_loss(std::span<const Tensor> log_probs, std::span<const TokenIds> sampled,
                      std::span<const std::vector<double>> rewards) {
  if (rewards.size() != sampled.size()) {
    throw ContractError("reinforce_loss: reward rows do not match the sample batch");
  }
  for (std::size_t b = 0; b < sampled.size(); ++b) {
    if (rewards[b].size() != sampled[b].size()) {
      throw ContractError("reinforce_loss: " + std::to_string(rewards[b].size()) +
                          " rewards for a sequence of length " +
                          std::to_string(sampled[b].size()));
    }
  }
  const double batch = static_cast<double>(sampled.size());
  return weighted_log_likelihood(
      log_probs, sampled,
      [&](std::size_t b, std::size_t t) {
        return -rewards[b][t] / (static_cast<double>(sampled[b].size()) * batch);
      },
      "reinforce_loss");
}

std::vector<TokenIds> with_eos(std::span<const TokenIds> seqs) {
  std::vector<TokenIds> out(seqs.begin(), seqs.end());
  for (auto& s : out) s.push_back(kEos);
  return out;
}

void TrainConfig::validate() const {
  if (alpha < 0.0) throw ConfigError("train: alpha must be >= 0");
  double total = 0.0;
  for (double w : route_weights) {
    if (w < 0.0) throw ConfigError("train: route weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("train: route weights must sum to 1");
  if (learning_rate <= 0.0) throw ConfigError("train: learning_rate must be positive");
  if (clip_norm < 0.0) throw ConfigError("train: clip_norm must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("train: dropout must be in [0, 1)");
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (max_steps == 0) throw ConfigError("train: max_steps must be positive");
  if (eval_every == 0) throw ConfigError("train: eval_every must be positive");
  if (max_decode_len == 0) throw ConfigError("train: max_decode_len must be positive");
  noise.validate();
}

RouteTrainer::RouteTrainer(Seq2SeqModel& model, const NGramModel* lm, const TrainConfig& cfg,
                           std::mt19937_64& rng)
    : model_(model), lm_(lm), cfg_(cfg), rng_(rng) {}

RunContext RouteTrainer::context() const {
  return {cfg_.dropout > 0.0, cfg_.dropout, &rng_};
}

std::vector<std::vector<double>> RouteTrainer::rewards_for(std::span<const TokenIds> sampled) {
  if (lm_ == nullptr) throw ContractError("RL loss requested without a language model");
  std::vector<std::vector<double>> rewards;
  rewards.reserve(sampled.size());
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : sampled) {
    rewards.push_back(sequence_rewards(*lm_, s));
    for (double r : rewards.back()) {
      sum += r;
      ++n;
    }
  }
  if (cfg_.rl_baseline) {
    const double b = baseline_mean_;
    for (auto& row : rewards) {
      for (auto& r : row) r -= b;
    }
  }
  baseline_mean_ = (baseline_mean_ * static_cast<double>(baseline_count_) + sum) /
                   static_cast<double>(baseline_count_ + n);
  baseline_count_ += n;
  return rewards;
}

RouteTrainer::RlTerm RouteTrainer::rl_term(const EncoderOutput& enc, const RunContext& ctx) {
  RunContext rollout_ctx = ctx;
  if (!cfg_.rollout_dropout) rollout_ctx.training = false;
  Rollout r = decode_autoregressive(model_, enc, DecodeMode::sample, cfg_.max_decode_len, rng_,
                                    rollout_ctx);
  auto rewards = rewards_for(r.tokens);
  Tensor loss = reinforce_loss(r.trace.log_probs, r.tokens, rewards);
  last_sample_ = std::move(r.tokens);
  return {loss, loss.item()};
}

LossBundle RouteTrainer::finish(Tape& tape, const Tensor& loss, double ce, double rl,
                                std::initializer_list<ParamGroup> groups) {
  LossBundle out{ce, rl, loss.item(), 0.0};
  tape.backward(loss);
  if (!apply_updates_) return out;
  auto params = model_.group_params(groups);
  out.grad_norm = sgd_step(params, cfg_.learning_rate, cfg_.clip_norm);
  model_.zero_grad();
  return out;
}

LossBundle RouteTrainer::train_route1(std::span<const TokenIds> sources,
                                      std::span<const TokenIds> targets) {
  if (sources.size() != targets.size() || sources.empty()) {
    throw ContractError("train_route1: need a nonempty batch of aligned pairs");
  }
  Tape tape;
  TapeScope scope(tape);
  const RunContext ctx = context();
  EncoderOutput enc = encode(model_, sources, Side::source, ctx);
  auto gold = with_eos(targets);
  DecodeTrace trace = decode_teacher_forced(model_, gold, enc, ctx);
  Tensor ce = cross_entropy(trace.log_probs, gold);
  Tensor loss = ce;
  double rl = 0.0;
  if (cfg_.all_use_rl) {
    RlTerm term = rl_term(enc, ctx);
    rl = term.value;
    loss = add(ce, scale(term.loss, cfg_.alpha));
  }
  return finish(tape, loss, ce.item(), rl, {ParamGroup::enc_s, ParamGroup::dec_t});
}

LossBundle RouteTrainer::train_route2(std::span<const TokenIds> targets) {
  if (targets.empty()) throw ContractError("train_route2: empty batch");
  std::vector<TokenIds> noisy;
  noisy.reserve(targets.size());
  for (const auto& y : targets) noisy.push_back(corrupt(std::span<const int>(y), cfg_.noise, rng_));
  Tape tape;
  TapeScope scope(tape);
  const RunContext ctx = context();
  EncoderOutput enc = encode(model_, noisy, Side::target, ctx);
  auto gold = with_eos(targets);
  DecodeTrace trace = decode_teacher_forced(model_, gold, enc, ctx);
  Tensor ce = cross_entropy(trace.log_probs, gold);
  Tensor loss = ce;
  double rl = 0.0;
  if (cfg_.all_use_rl) {
    RlTerm term = rl_term(enc, ctx);
    rl = term.value;
    loss = add(ce, scale(term.loss, cfg_.alpha));
  }
  return finish(tape, loss, ce.item(), rl, {ParamGroup::enc_t, ParamGroup::dec_t});
}

LossBundle RouteTrainer::train_route3(std::span<const TokenIds> sources) {
  if (sources.empty()) throw ContractError("train_route3: empty batch");
  Tape tape;
  TapeScope scope(tape);
  const RunContext ctx = context();
  EncoderOutput enc = encode(model_, sources, Side::source, ctx);
  RlTerm term = rl_term(enc, ctx);
  return finish(tape, term.loss, 0.0, term.value, {ParamGroup::enc_s, ParamGroup::dec_t});
}

Tensor RouteTrainer::route3_loss_for_sample(std::span<const TokenIds> sources,
                                            std::span<const TokenIds> sampled) const {
  if (lm_ == nullptr) throw ContractError("route3_loss_for_sample: no language model");
  const RunContext ctx = context();
  EncoderOutput enc = encode(model_, sources, Side::source, ctx);
  DecodeTrace trace = decode_teacher_forced(model_, sampled, enc, ctx);
  std::vector<std::vector<double>> rewards;
  for (const auto& s : sampled) rewards.push_back(sequence_rewards(*lm_, s));
  return reinforce_loss(trace.log_probs, sampled, rewards);
}

void write_metrics_header(std::ostream& out) {
  out << "step,route1,route2,route3,train_ce,train_rl,dev_ppl,dev_bleu,dev_token_acc,wall_ms\n";
}

void write_metrics_row(std::ostream& out, const MetricsRow& row) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.10g,%.10g,%.10g,%.10g,%.10g,%lld\n", row.step,
                row.route_counts[0], row.route_counts[1], row.route_counts[2], row.train_ce,
                row.train_rl, row.dev_ppl, row.dev_bleu, row.dev_token_acc, row.wall_ms);
  out << buf;
  out.flush();
}

TrainResult train(Seq2SeqModel& model, const TrainingData& data, const Vocab& tgt_vocab,
                  const NGramModel* lm, const TrainConfig& cfg, std::ostream* metrics) {
  cfg.validate();
  if (cfg.uses_rl() && lm == nullptr) {
    throw ConfigError("train: RL is enabled but no language model was provided");
  }
  TrainResult result;
  std::array<double, 3> weights = cfg.route_weights;
  const std::array<std::size_t, 3> pool_sizes{data.labeled_src.size(), data.target_pool.size(),
                                              data.source_pool.size()};
  for (std::size_t r = 0; r < 3; ++r) {
    if (weights[r] > 0.0 && pool_sizes[r] == 0) {
      result.warnings.push_back("route " + std::to_string(r + 1) +
                                " has an empty data pool; its weight is set to 0");
      weights[r] = 0.0;
    }
  }
  const double total = weights[0] + weights[1] + weights[2];
  if (total <= 0.0) throw ConfigError("train: no route has both positive weight and data");
  for (auto& w : weights) w /= total;
  if (data.labeled_src.size() != data.labeled_tgt.size()) {
    throw ContractError("train: labeled source/target counts differ");
  }

  std::mt19937_64 rng(cfg.seed);
  RouteTrainer routes(model, lm, cfg, rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool has_dev = !data.dev_src.empty();
  std::optional<Seq2SeqModel> best;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t evals_without_gain = 0;

  double ce_sum = 0.0;
  std::size_t ce_n = 0;
  double rl_sum = 0.0;
  std::size_t rl_n = 0;
  const auto t0 = std::chrono::steady_clock::now();
  if (metrics != nullptr) write_metrics_header(*metrics);

  std::vector<TokenIds> batch_a;
  std::vector<TokenIds> batch_b;
  auto draw = [&](const std::vector<TokenIds>& pool, std::vector<TokenIds>& out,
                  const std::vector<TokenIds>* partner, std::vector<TokenIds>* partner_out) {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.clear();
    if (partner_out != nullptr) partner_out->clear();
    for (std::size_t i = 0; i < cfg.batch_size; ++i) {
      const std::size_t k = pick(rng);
      out.push_back(pool[k]);
      if (partner_out != nullptr) partner_out->push_back((*partner)[k]);
    }
  };

  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const double u = unit(rng);
    std::size_t route = u < weights[0] ? 0 : u < weights[0] + weights[1] ? 1 : 2;
    while (weights[route] <= 0.0) route = (route + 2) % 3;  // guards u rounding at the edges
    LossBundle loss;
    if (route == 0) {
      draw(data.labeled_src, batch_a, &data.labeled_tgt, &batch_b);
      loss = routes.train_route1(batch_a, batch_b);
    } else if (route == 1) {
      draw(data.target_pool, batch_a, nullptr, nullptr);
      loss = routes.train_route2(batch_a);
    } else {
      draw(data.source_pool, batch_a, nullptr, nullptr);
      loss = routes.train_route3(batch_a);
    }
    ++result.route_counts[route];
    if (route != 2) {
      ce_sum += loss.ce;
      ++ce_n;
    }
    if (route == 2 || cfg.all_use_rl) {
      rl_sum += loss.rl;
      ++rl_n;
    }
    result.steps = step;

    if (step % cfg.eval_every != 0 && step != cfg.max_steps) continue;
    MetricsRow row;
    row.step = step;
    row.route_counts = result.route_counts;
    row.train_ce = ce_n ? ce_sum / static_cast<double>(ce_n) : 0.0;
    row.train_rl = rl_n ? rl_sum / static_cast<double>(rl_n) : 0.0;
    ce_sum = rl_sum = 0.0;
    ce_n = rl_n = 0;
    bool stop = false;
    if (has_dev) {
      const CorpusLoss dev = teacher_forced_loss(model, data.dev_src, data.dev_tgt);
      row.dev_ppl = std::exp(dev.mean());
      auto hyp_ids = greedy_translate(model, data.dev_src, cfg.max_decode_len);
      std::vector<Sentence> hyps;
      hyps.reserve(hyp_ids.size());
      for (const auto& h : hyp_ids) hyps.push_back(tgt_vocab.decode(h));
      row.dev_bleu = bleu<std::string>(hyps, data.dev_refs);
      row.dev_token_acc = token_accuracy<std::string>(hyps, data.dev_refs);
      result.best_dev_accuracy = std::max(result.best_dev_accuracy, row.dev_token_acc);
      if (dev.mean() < best_loss) {
        best_loss = dev.mean();
        result.best_step = step;
        if (best) {
          best->copy_values_from(model);
        } else {
          best.emplace(model.clone());
        }
        evals_without_gain = 0;
      } else if (++evals_without_gain >= cfg.patience && cfg.patience > 0) {
        result.early_stopped = true;
        stop = true;
      }
      if (cfg.target_dev_accuracy > 0.0 && row.dev_token_acc >= cfg.target_dev_accuracy) {
        stop = true;
      }
    }
    if (cfg.log_wall_time) {
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
    result.log.push_back(row);
    if (metrics != nullptr) write_metrics_row(*metrics, row);
    if (stop) break;
  }
  if (best) {
    model.copy_values_from(*best);
    result.best_dev_loss = best_loss;
  } else {
    result.best_step = result.steps;
  }
  return result;
}

}  // namespace semigen
