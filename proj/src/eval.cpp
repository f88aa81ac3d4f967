#include "semigen/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "semigen/training.hpp"

namespace semigen {

namespace {

template <typename Token>
std::map<std::vector<Token>, std::size_t> ngram_counts(const std::vector<Token>& s, int n) {
  std::map<std::vector<Token>, std::size_t> counts;
  const auto len = static_cast<std::ptrdiff_t>(s.size());
  for (std::ptrdiff_t i = 0; i + n <= len; ++i) {
    ++counts[std::vector<Token>(s.begin() + i, s.begin() + i + n)];
  }
  return counts;
}

template <typename Token>
void check_lengths(const char* what, std::span<const std::vector<Token>> h,
                   std::span<const std::vector<Token>> r) {
  if (h.size() != r.size()) {
    throw ContractError(std::string(what) + ": " + std::to_string(h.size()) +
                        " hypotheses for " + std::to_string(r.size()) + " references");
  }
}

}  // namespace

template <typename Token>
BleuStats bleu_stats(std::span<const std::vector<Token>> hypotheses,
                     std::span<const std::vector<Token>> references, int max_order) {
  check_lengths("bleu", hypotheses, references);
  if (references.empty()) throw ContractError("bleu: no references");
  if (max_order < 1 || max_order > 4) throw ContractError("bleu: max_order must be in [1, 4]");
  BleuStats st;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& hyp = hypotheses[i];
    const auto& ref = references[i];
    st.hyp_len += hyp.size();
    st.ref_len += ref.size();
    for (int n = 1; n <= max_order; ++n) {
      auto hc = ngram_counts(hyp, n);
      auto rc = ngram_counts(ref, n);
      const auto k = static_cast<std::size_t>(n - 1);
      for (const auto& [gram, c] : hc) {
        st.totals[k] += c;
        auto it = rc.find(gram);
        if (it != rc.end()) st.matches[k] += std::min(c, it->second);
      }
    }
  }
  double log_sum = 0.0;
  bool zero = st.hyp_len == 0;
  for (int n = 0; n < max_order; ++n) {
    const auto k = static_cast<std::size_t>(n);
    st.precisions[k] =
        st.totals[k] == 0 ? 0.0
                          : static_cast<double>(st.matches[k]) / static_cast<double>(st.totals[k]);
    if (st.precisions[k] == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(st.precisions[k]);
    }
  }
  if (st.hyp_len > 0 && st.hyp_len < st.ref_len) {
    st.brevity_penalty =
        std::exp(1.0 - static_cast<double>(st.ref_len) / static_cast<double>(st.hyp_len));
  }
  st.score = zero ? 0.0 : 100.0 * st.brevity_penalty * std::exp(log_sum / max_order);
  st.score = std::clamp(st.score, 0.0, 100.0);
  return st;
}

template <typename Token>
double token_accuracy(std::span<const std::vector<Token>> hypotheses,
                      std::span<const std::vector<Token>> references) {
  check_lengths("token_accuracy", hypotheses, references);
  std::size_t matched = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& h = hypotheses[i];
    const auto& r = references[i];
    total += r.size();
    const std::size_t n = std::min(h.size(), r.size());
    for (std::size_t t = 0; t < n; ++t) matched += h[t] == r[t] ? 1 : 0;
  }
  return total == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(total);
}

template BleuStats bleu_stats<int>(std::span<const std::vector<int>>,
                                   std::span<const std::vector<int>>, int);
template BleuStats bleu_stats<std::string>(std::span<const std::vector<std::string>>,
                                           std::span<const std::vector<std::string>>, int);
template double token_accuracy<int>(std::span<const std::vector<int>>,
                                    std::span<const std::vector<int>>);
template double token_accuracy<std::string>(std::span<const std::vector<std::string>>,
                                            std::span<const std::vector<std::string>>);

CorpusLoss teacher_forced_loss(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                               std::span<const TokenIds> targets, std::size_t batch_size) {
  if (sources.size() != targets.size()) {
    throw ContractError("teacher_forced_loss: source/target count mismatch");
  }
  if (sources.empty()) throw ContractError("teacher_forced_loss: empty corpus");
  NoGradScope no_grad;
  const RunContext eval{};
  CorpusLoss loss;
  for (std::size_t start = 0; start < sources.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, sources.size() - start);
    std::vector<TokenIds> gold = with_eos(targets.subspan(start, n));
    EncoderOutput enc = encode(model, sources.subspan(start, n), Side::source, eval);
    DecodeTrace trace = decode_teacher_forced(model, gold, enc, eval);
    for (std::size_t b = 0; b < n; ++b) {
      const std::size_t V = trace.log_probs.front().cols();
      for (std::size_t t = 0; t < gold[b].size(); ++t) {
        loss.total_nll -= trace.log_probs[t].values()[b * V + static_cast<std::size_t>(gold[b][t])];
      }
      loss.tokens += gold[b].size();
    }
  }
  return loss;
}

double perplexity(const Seq2SeqModel& model, std::span<const TokenIds> sources,
                  std::span<const TokenIds> targets, std::size_t batch_size) {
  return std::exp(teacher_forced_loss(model, sources, targets, batch_size).mean());
}

}  // namespace semigen
