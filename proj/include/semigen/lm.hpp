#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "semigen/vocab.hpp"

namespace semigen {

struct Interpolation {
  double lambda3 = 0.7;
  double lambda2 = 0.2;
  double lambda1 = 0.09;
};

/// Interpolated trigram model over token ids. Sentences are counted with two
/// leading BOS and one trailing EOS. Immutable once trained.
///
///   PL(w1,w2,w3) = l3 c(w1w2w3)/c(w1w2) + l2 c(w2w3)/c(w2) + l1 c(w3)/N + eps
///
/// where a term with a zero denominator contributes nothing, N counts every
/// padded token and eps = 0.01 / V. The result is clamped to at most 1.
class NGramModel {
 public:
  static NGramModel train(std::span<const TokenIds> corpus, std::size_t vocab_size,
                          Interpolation weights = {});

  double trigram_prob(int w1, int w2, int w3) const;

  std::uint64_t count(int w) const;
  std::uint64_t count(int w1, int w2) const;
  std::uint64_t count(int w1, int w2, int w3) const;

  std::uint64_t total_tokens() const { return total_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const Interpolation& weights() const { return weights_; }
  double epsilon() const { return epsilon_; }

  /// ARPA-like text listing: header, then "count<TAB>tokens" per n-gram order.
  void save(std::ostream& out, const Vocab& vocab) const;
  /// Reads a saved model, re-keying tokens through vocab (unknown -> UNK).
  static NGramModel load(std::istream& in, const Vocab& vocab);

  using Table = std::unordered_map<std::uint64_t, std::uint64_t>;

 private:
  NGramModel() = default;
  void validate() const;

  Table unigrams_;
  Table bigrams_;
  Table trigrams_;
  std::uint64_t total_ = 0;
  std::size_t vocab_size_ = 0;
  Interpolation weights_;
  double epsilon_ = 0.0;
};

/// Per-token LM reward: for each position t of ys, the mean of ln PL over the
/// three trigrams covering t, computed on ys padded with two BOS before and
/// two EOS after. Output length equals ys.size().
std::vector<double> sequence_rewards(const NGramModel& lm, std::span<const int> ys);

}  // namespace semigen
