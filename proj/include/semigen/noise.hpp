#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "semigen/vocab.hpp"

namespace semigen {

/// Word-level corruption rates for the denoising route.
struct NoiseConfig {
  double p_delete = 0.1;
  double p_duplicate = 0.1;
  double p_swap = 0.1;

  /// Throws ConfigError unless each rate is in [0,1] and they sum to <= 1.
  void validate() const;
};

/// Counts of the operations drawn by one corrupt() call.
struct NoiseStats {
  std::size_t draws = 0;
  std::size_t kept = 0;
  std::size_t deleted = 0;
  std::size_t duplicated = 0;
  std::size_t swapped = 0;
};

/// One left-to-right pass over the original tokens. Each position gets a
/// single categorical draw among delete / duplicate / swap-with-next / keep;
/// a swap consumes the next position, and a swap at the last position keeps
/// the token. An all-deleted result falls back to the first original token.
template <typename T>
std::vector<T> corrupt(std::span<const T> tokens, const NoiseConfig& cfg, std::mt19937_64& rng,
                       NoiseStats* stats = nullptr);

TokenIds corrupt(std::span<const int> tokens, const NoiseConfig& cfg, std::mt19937_64& rng,
                 NoiseStats* stats = nullptr);

}  // namespace semigen
