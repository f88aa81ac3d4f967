#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "semigen/model.hpp"
#include "semigen/vocab.hpp"

namespace semigen {

struct BleuStats {
  std::array<std::size_t, 4> matches{};
  std::array<std::size_t, 4> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::array<double, 4> precisions{};
  double brevity_penalty = 1.0;
  /// In [0, 100].
  double score = 0.0;
};

/// Corpus BLEU with clipped n-gram counts, multi-bleu style: the score is 0
/// when any order has zero matched n-grams (no smoothing).
template <typename Token>
BleuStats bleu_stats(std::span<const std::vector<Token>> hypotheses,
                     std::span<const std::vector<Token>> references, int max_order = 4);

template <typename Token>
double bleu(std::span<const std::vector<Token>> hypotheses,
            std::span<const std::vector<Token>> references, int max_order = 4) {
  return bleu_stats(hypotheses, references, max_order).score;
}

/// Positionwise matches over the common prefix length, divided by the total
/// number of reference tokens.
template <typename Token>
double token_accuracy(std::span<const std::vector<Token>> hypotheses,
                      std::span<const std::vector<Token>> references);

struct CorpusLoss {
  double total_nll = 0.0;
  std::size_t tokens = 0;

  double mean() const { return tokens == 0 ? 0.0 : total_nll / static_cast<double>(tokens); }
};

/// Teacher-forced negative log-likelihood in eval mode. Targets are given
/// without EOS; one EOS is appended to each and scored.
CorpusLoss teacher_forced_loss(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                               std::span<const TokenIds> targets, std::size_t batch_size = 32);

/// exp(mean per-token cross entropy), natural base.
double perplexity(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                  std::span<const TokenIds> targets, std::size_t batch_size = 32);

}  // namespace semigen
