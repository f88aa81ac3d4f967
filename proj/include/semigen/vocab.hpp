#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semigen {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNumReserved = 4;

using Sentence = std::vector<std::string>;
using TokenIds = std::vector<int>;

/// Token <-> id bijection. Ids 0..3 are PAD, BOS, EOS and UNK.
class Vocab {
 public:
  Vocab();

  /// Keeps tokens seen at least min_count times, ordered by descending
  /// frequency then lexicographically.
  static Vocab build(std::span<const Sentence> corpus, std::size_t min_count = 1);
  /// Rebuilds a vocabulary from its full token list (reserved tokens first).
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  TokenIds encode(std::span<const std::string> sentence) const;
  /// Drops PAD, BOS and EOS; stops at the first EOS.
  Sentence decode(std::span<const int> ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  /// FNV-1a over the ordered token list.
  std::uint64_t hash() const;

  static const std::vector<std::string>& reserved_tokens();

 private:
  struct Empty {};
  explicit Vocab(Empty) {}

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace semigen
