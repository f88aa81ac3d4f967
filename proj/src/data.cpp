#include "semigen/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "semigen/errors.hpp"

namespace semigen {

namespace {

// "E" and "V" are placeholders for the triple's entity and value.
const std::vector<std::vector<std::string>>& templates() {
  static const std::vector<std::vector<std::string>> t{
      {"E", "was", "born", "in", "V", "."},
      {"E", "works", "as", "a", "V", "."},
      {"the", "capital", "of", "E", "is", "V", "."},
      {"V", "is", "located", "in", "E", "."},
      {"E", "is", "led", "by", "V", "."},
      {"E", "plays", "for", "V", "."},
      {"V", "was", "founded", "by", "E", "."},
      {"E", "speaks", "V", "."},
      {"the", "leader", "of", "E", "is", "V", "."},
      {"E", "is", "part", "of", "V", "."},
  };
  return t;
}

constexpr const char* kSeparator = "|";

std::size_t parse_index(const std::string& tok, char prefix) {
  if (tok.size() < 2 || tok[0] != prefix) {
    throw FormatError(std::string("synthetic source: expected '") + prefix + "<n>', got '" + tok +
                      "'");
  }
  return static_cast<std::size_t>(std::stoul(tok.substr(1)));
}

}  // namespace

void SynthTaskSpec::validate() const {
  if (size == 0) throw ConfigError("synthetic task: size must be positive");
  if (entities == 0 || values == 0) throw ConfigError("synthetic task: empty entity/value set");
  if (relations == 0 || relations > templates().size()) {
    throw ConfigError("synthetic task: relations must be in [1, " +
                      std::to_string(templates().size()) + "]");
  }
  if (min_triples == 0 || min_triples > max_triples || max_triples > 7 ||
      max_triples > relations) {
    throw ConfigError("synthetic task: need 1 <= min_triples <= max_triples <= min(7, relations)");
  }
  if (grammar != 0 && grammar != 1) throw ConfigError("synthetic task: grammar must be 0 or 1");
}

Sentence render_target(const Sentence& source, int grammar) {
  Sentence out;
  std::size_t i = 0;
  bool first = true;
  while (i < source.size()) {
    if (i + 2 >= source.size()) throw FormatError("synthetic source: truncated triple");
    const std::string& entity = source[i];
    const std::size_t rel = parse_index(source[i + 1], 'r');
    const std::string& value = source[i + 2];
    if (rel >= templates().size()) throw FormatError("synthetic source: unknown relation");
    std::vector<std::string> words = templates()[rel];
    if (grammar == 1) {
      words.pop_back();
      if (!first) out.push_back("and");
    }
    for (const auto& w : words) out.push_back(w == "E" ? entity : w == "V" ? value : w);
    first = false;
    i += 3;
    if (i < source.size()) {
      if (source[i] != kSeparator) throw FormatError("synthetic source: missing separator");
      ++i;
    }
  }
  if (grammar == 1) out.push_back(".");
  return out;
}

ParallelCorpus generate_synthetic(const SynthTaskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<std::size_t> n_triples(spec.min_triples, spec.max_triples);
  std::uniform_int_distribution<std::size_t> entity(0, spec.entities - 1);
  std::uniform_int_distribution<std::size_t> value(0, spec.values - 1);
  std::vector<std::size_t> rels(spec.relations);
  std::iota(rels.begin(), rels.end(), 0);

  ParallelCorpus corpus;
  std::set<Sentence> seen;
  const std::size_t max_attempts = spec.size * 100 + 1000;
  for (std::size_t attempt = 0; corpus.size() < spec.size; ++attempt) {
    if (attempt >= max_attempts) {
      throw ConfigError("synthetic task: cannot draw " + std::to_string(spec.size) +
                        " distinct examples; enlarge the entity/value sets");
    }
    const std::size_t k = n_triples(rng);
    std::shuffle(rels.begin(), rels.end(), rng);
    Sentence src;
    for (std::size_t j = 0; j < k; ++j) {
      if (j > 0) src.push_back(kSeparator);
      src.push_back("e" + std::to_string(entity(rng)));
      src.push_back("r" + std::to_string(rels[j]));
      src.push_back("v" + std::to_string(value(rng)));
    }
    if (!seen.insert(src).second) continue;
    Sentence tgt = render_target(src, spec.grammar);
    corpus.push_back({std::move(src), std::move(tgt)});
  }
  return corpus;
}

DataSplit make_split(const ParallelCorpus& corpus, const SplitSizes& sizes, std::uint64_t seed) {
  if (sizes.total() > corpus.size()) {
    std::ostringstream msg;
    msg << "split needs " << sizes.total() << " examples (labeled " << sizes.labeled
        << ", unlabeled_src " << sizes.unlabeled_src << ", unlabeled_tgt " << sizes.unlabeled_tgt
        << ", dev " << sizes.dev << ", test " << sizes.test << ") but the corpus has "
        << corpus.size();
    throw SizingError(msg.str());
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  DataSplit split;
  split.seed = seed;
  std::size_t next = 0;
  auto take = [&](std::size_t n) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(next),
                                 order.begin() + static_cast<std::ptrdiff_t>(next + n));
    next += n;
    return idx;
  };
  split.labeled_index = take(sizes.labeled);
  split.unlabeled_src_index = take(sizes.unlabeled_src);
  split.unlabeled_tgt_index = take(sizes.unlabeled_tgt);
  split.dev_index = take(sizes.dev);
  split.test_index = take(sizes.test);
  for (auto i : split.labeled_index) split.labeled.push_back(corpus[i]);
  for (auto i : split.unlabeled_src_index) split.unlabeled_src.push_back(corpus[i].source);
  for (auto i : split.unlabeled_tgt_index) split.unlabeled_tgt.push_back(corpus[i].target);
  for (auto i : split.dev_index) split.dev.push_back(corpus[i]);
  for (auto i : split.test_index) split.test.push_back(corpus[i]);
  return split;
}

Sentence tokenize(const std::string& line) {
  std::istringstream ss(line);
  Sentence out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<Sentence> load_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::vector<Sentence> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(tokenize(line));
  }
  return lines;
}

ParallelCorpus load_parallel(const std::filesystem::path& src, const std::filesystem::path& tgt) {
  auto s = load_lines(src);
  auto t = load_lines(tgt);
  if (s.size() != t.size()) {
    throw FormatError("parallel files differ in line count: '" + src.string() + "' has " +
                      std::to_string(s.size()) + ", '" + tgt.string() + "' has " +
                      std::to_string(t.size()));
  }
  ParallelCorpus corpus;
  corpus.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) corpus.push_back({std::move(s[i]), std::move(t[i])});
  return corpus;
}

void write_lines(const std::filesystem::path& path, std::span<const Sentence> lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  for (const auto& l : lines) out << join(l) << '\n';
}

void write_parallel(const std::filesystem::path& src, const std::filesystem::path& tgt,
                    const ParallelCorpus& corpus) {
  write_lines(src, sources(corpus));
  write_lines(tgt, targets(corpus));
}

std::vector<Sentence> sources(const ParallelCorpus& corpus) {
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back(ex.source);
  return out;
}

std::vector<Sentence> targets(const ParallelCorpus& corpus) {
  std::vector<Sentence> out;
  out.reserve(corpus.size());
  for (const auto& ex : corpus) out.push_back(ex.target);
  return out;
}

}  // namespace semigen
