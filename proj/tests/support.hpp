#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "semigen/model.hpp"
#include "semigen/tensor.hpp"

namespace semigen::testing {

/// Outcome of comparing backprop gradients with central differences.
struct GradCheck {
  std::size_t probes = 0;
  std::size_t failures = 0;
  double worst_rel = 0.0;
  std::string worst;
};

/// Gradients this small on both sides are treated as zero (the difference
/// quotient itself has absolute noise around step^2 and roundoff/step).
inline constexpr double kGradFloor = 1e-7;

inline double rel_error(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale < kGradFloor) return 0.0;
  return std::abs(a - b) / scale;
}

/// loss must rebuild the graph from the current parameter values on every
/// call. Probes `per_param` random entries of each parameter (all entries
/// when the parameter is smaller).
inline GradCheck check_gradients(std::vector<Tensor> params, const std::function<Tensor()>& loss,
                                 std::size_t per_param, std::uint64_t seed, double tol = 1e-3,
                                 double step = 1e-5, const std::vector<std::string>& names = {}) {
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor l = loss();
    tape.backward(l);
  }
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  NoGradScope no_grad;
  std::mt19937_64 rng(seed);
  GradCheck out;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k].mutable_values();
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (idx.size() > per_param) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(per_param);
    }
    for (std::size_t i : idx) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = loss().item();
      values[i] = saved - step;
      const double down = loss().item();
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = rel_error(analytic[k][i], numeric);
      ++out.probes;
      if (err > tol) ++out.failures;
      if (err >= out.worst_rel) {
        out.worst_rel = err;
        char buf[96];
        std::snprintf(buf, sizeof buf, "] analytic %.6e numeric %.6e", analytic[k][i], numeric);
        out.worst = (k < names.size() ? names[k] : "param" + std::to_string(k)) + "[" +
                    std::to_string(i) + buf;
      }
    }
  }
  for (auto& p : params) p.zero_grad();
  return out;
}

inline Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                            double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  return Tensor::from(rows, cols, std::move(v), requires_grad);
}

inline ModelConfig tiny_config(std::size_t src_vocab = 11, std::size_t tgt_vocab = 13) {
  ModelConfig c;
  c.src_vocab = src_vocab;
  c.tgt_vocab = tgt_vocab;
  c.embed_dim = 5;
  c.hidden_dim = 4;
  c.enc_layers = 1;
  c.dec_layers = 1;
  return c;
}

/// Random ids in [kNumReserved, vocab) with lengths in [min_len, max_len].
inline std::vector<TokenIds> random_batch(std::size_t n, std::size_t vocab, std::size_t min_len,
                                          std::size_t max_len, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> tok(kNumReserved, static_cast<int>(vocab) - 1);
  std::vector<TokenIds> out(n);
  for (auto& s : out) {
    s.resize(len(rng));
    for (auto& t : s) t = tok(rng);
  }
  return out;
}

inline std::vector<Tensor> all_params(const Seq2SeqModel& m) {
  std::vector<Tensor> out;
  for (const auto& p : m.params()) out.push_back(p.value);
  return out;
}

inline std::vector<std::string> all_names(const Seq2SeqModel& m) {
  std::vector<std::string> out;
  for (const auto& p : m.params()) out.push_back(p.name);
  return out;
}

/// Snapshot of every parameter's values, keyed by position in params().
inline std::vector<std::vector<double>> fingerprint(const Seq2SeqModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.params()) out.emplace_back(p.value.values().begin(), p.value.values().end());
  return out;
}

}  // namespace semigen::testing
