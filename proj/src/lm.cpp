#include "semigen/lm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "semigen/errors.hpp"
#include "semigen/tensor.hpp"

namespace semigen {

namespace {

constexpr unsigned kIdBits = 21;
constexpr std::uint64_t kIdMask = (1ULL << kIdBits) - 1;
constexpr const char* kMagic = "#semigen-ngram v1";

std::uint64_t key(int w1) { return static_cast<std::uint64_t>(w1) & kIdMask; }
std::uint64_t key(int w1, int w2) { return (key(w1) << kIdBits) | key(w2); }
std::uint64_t key(int w1, int w2, int w3) { return (key(w1, w2) << kIdBits) | key(w3); }

std::uint64_t lookup(const NGramModel::Table& t, std::uint64_t k) {
  auto it = t.find(k);
  return it == t.end() ? 0 : it->second;
}

std::vector<int> unpack(std::uint64_t k, int order) {
  std::vector<int> ids(static_cast<std::size_t>(order));
  for (int i = order - 1; i >= 0; --i) {
    ids[static_cast<std::size_t>(i)] = static_cast<int>(k & kIdMask);
    k >>= kIdBits;
  }
  return ids;
}

void write_table(std::ostream& out, const NGramModel::Table& table, int order,
                 const Vocab& vocab) {
  std::map<std::vector<int>, std::uint64_t> sorted;
  for (const auto& [k, n] : table) sorted.emplace(unpack(k, order), n);
  out << "\\" << order << "-grams: " << sorted.size() << "\n";
  for (const auto& [ids, n] : sorted) {
    out << n << "\t";
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << vocab.token(ids[i]);
    out << "\n";
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

NGramModel NGramModel::train(std::span<const TokenIds> corpus, std::size_t vocab_size,
                             Interpolation weights) {
  if (corpus.empty()) throw ContractError("train_lm: empty corpus");
  if (vocab_size == 0 || vocab_size > kIdMask) {
    throw ContractError("train_lm: vocabulary size out of range");
  }
  NGramModel lm;
  lm.vocab_size_ = vocab_size;
  lm.weights_ = weights;
  lm.epsilon_ = 0.01 / static_cast<double>(vocab_size);
  lm.validate();
  std::vector<int> padded;
  for (const auto& sentence : corpus) {
    padded.assign({kBos, kBos});
    for (int id : sentence) {
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw std::out_of_range("train_lm: id " + std::to_string(id) + " outside vocabulary");
      }
      padded.push_back(id);
    }
    padded.push_back(kEos);
    for (std::size_t i = 0; i < padded.size(); ++i) {
      ++lm.unigrams_[key(padded[i])];
      if (i + 1 < padded.size()) ++lm.bigrams_[key(padded[i], padded[i + 1])];
      if (i + 2 < padded.size()) ++lm.trigrams_[key(padded[i], padded[i + 1], padded[i + 2])];
    }
    lm.total_ += padded.size();
  }
  return lm;
}

void NGramModel::validate() const {
  const auto& w = weights_;
  if (w.lambda1 < 0 || w.lambda2 < 0 || w.lambda3 < 0 ||
      w.lambda1 + w.lambda2 + w.lambda3 > 1.0 + 1e-12) {
    throw ContractError("ngram: interpolation weights must be >= 0 and sum to <= 1");
  }
  if (!(epsilon_ > 0.0)) throw ContractError("ngram: floor probability must be positive");
}

std::uint64_t NGramModel::count(int w) const { return lookup(unigrams_, key(w)); }
std::uint64_t NGramModel::count(int w1, int w2) const { return lookup(bigrams_, key(w1, w2)); }
std::uint64_t NGramModel::count(int w1, int w2, int w3) const {
  return lookup(trigrams_, key(w1, w2, w3));
}

double NGramModel::trigram_prob(int w1, int w2, int w3) const {
  double p = epsilon_;
  if (const auto c12 = count(w1, w2); c12 > 0) {
    p += weights_.lambda3 * static_cast<double>(count(w1, w2, w3)) / static_cast<double>(c12);
  }
  if (const auto c2 = count(w2); c2 > 0) {
    p += weights_.lambda2 * static_cast<double>(count(w2, w3)) / static_cast<double>(c2);
  }
  if (total_ > 0) {
    p += weights_.lambda1 * static_cast<double>(count(w3)) / static_cast<double>(total_);
  }
  return std::min(p, 1.0);
}

void NGramModel::save(std::ostream& out, const Vocab& vocab) const {
  out << kMagic << "\n";
  out << "order 3\n";
  out << "vocab_size " << vocab_size_ << "\n";
  out << "total_tokens " << total_ << "\n";
  out << "lambda3 " << format_double(weights_.lambda3) << "\n";
  out << "lambda2 " << format_double(weights_.lambda2) << "\n";
  out << "lambda1 " << format_double(weights_.lambda1) << "\n";
  out << "epsilon " << format_double(epsilon_) << "\n";
  write_table(out, unigrams_, 1, vocab);
  write_table(out, bigrams_, 2, vocab);
  write_table(out, trigrams_, 3, vocab);
  out << "\\end\\\n";
}

NGramModel NGramModel::load(std::istream& in, const Vocab& vocab) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw FormatError("lm file: missing '" + std::string(kMagic) + "' header");
  }
  NGramModel lm;
  auto header_value = [&](const std::string& name) {
    if (!std::getline(in, line)) throw FormatError("lm file: truncated header");
    std::istringstream ss(line);
    std::string got;
    double v = 0;
    if (!(ss >> got >> v) || got != name) {
      throw FormatError("lm file: expected '" + name + "', got '" + line + "'");
    }
    return v;
  };
  if (header_value("order") != 3) throw FormatError("lm file: only order 3 is supported");
  lm.vocab_size_ = static_cast<std::size_t>(header_value("vocab_size"));
  lm.total_ = static_cast<std::uint64_t>(header_value("total_tokens"));
  lm.weights_.lambda3 = header_value("lambda3");
  lm.weights_.lambda2 = header_value("lambda2");
  lm.weights_.lambda1 = header_value("lambda1");
  lm.epsilon_ = header_value("epsilon");
  try {
    lm.validate();
  } catch (const ContractError& e) {
    throw FormatError(std::string("lm file: ") + e.what());
  }

  for (int order = 1; order <= 3; ++order) {
    if (!std::getline(in, line)) throw FormatError("lm file: missing n-gram section");
    std::istringstream hs(line);
    std::string tag;
    std::size_t entries = 0;
    const std::string want = "\\" + std::to_string(order) + "-grams:";
    if (!(hs >> tag >> entries) || tag != want) {
      throw FormatError("lm file: expected '" + want + "', got '" + line + "'");
    }
    Table& table = order == 1 ? lm.unigrams_ : order == 2 ? lm.bigrams_ : lm.trigrams_;
    for (std::size_t i = 0; i < entries; ++i) {
      if (!std::getline(in, line)) throw FormatError("lm file: truncated n-gram list");
      std::istringstream es(line);
      std::uint64_t n = 0;
      std::vector<int> ids;
      std::string tok;
      if (!(es >> n)) throw FormatError("lm file: bad n-gram line '" + line + "'");
      while (es >> tok) ids.push_back(vocab.id(tok));
      if (ids.size() != static_cast<std::size_t>(order)) {
        throw FormatError("lm file: wrong n-gram length in '" + line + "'");
      }
      const std::uint64_t k =
          order == 1 ? key(ids[0]) : order == 2 ? key(ids[0], ids[1]) : key(ids[0], ids[1], ids[2]);
      table[k] += n;
    }
  }
  if (!std::getline(in, line) || line != "\\end\\") throw FormatError("lm file: missing \\end\\");
  return lm;
}

std::vector<double> sequence_rewards(const NGramModel& lm, std::span<const int> ys) {
  if (ys.empty()) throw ContractError("sequence_rewards: empty sequence");
  std::vector<int> padded{kBos, kBos};
  padded.insert(padded.end(), ys.begin(), ys.end());
  padded.push_back(kEos);
  padded.push_back(kEos);
  // Window starting at padded index i covers original positions i-2 .. i.
  std::vector<double> log_p(padded.size() - 2);
  for (std::size_t i = 0; i < log_p.size(); ++i) {
    log_p[i] = std::log(lm.trigram_prob(padded[i], padded[i + 1], padded[i + 2]));
  }
  std::vector<double> rewards(ys.size());
  for (std::size_t t = 0; t < ys.size(); ++t) {
    rewards[t] = (log_p[t] + log_p[t + 1] + log_p[t + 2]) / 3.0;
  }
  return rewards;
}

}  // namespace semigen
