#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "semigen/vocab.hpp"

namespace semigen {

struct ParallelExample {
  Sentence source;
  Sentence target;

  bool operator==(const ParallelExample&) const = default;
};

using ParallelCorpus = std::vector<ParallelExample>;

/// Labeled pairs plus one-sided unlabeled pools. The *_index vectors record
/// which corpus rows each part was drawn from.
struct DataSplit {
  ParallelCorpus labeled;
  std::vector<Sentence> unlabeled_src;
  std::vector<Sentence> unlabeled_tgt;
  ParallelCorpus dev;
  ParallelCorpus test;
  std::uint64_t seed = 0;

  std::vector<std::size_t> labeled_index;
  std::vector<std::size_t> unlabeled_src_index;
  std::vector<std::size_t> unlabeled_tgt_index;
  std::vector<std::size_t> dev_index;
  std::vector<std::size_t> test_index;
};

struct SplitSizes {
  std::size_t labeled = 0;
  std::size_t unlabeled_src = 0;
  std::size_t unlabeled_tgt = 0;
  std::size_t dev = 0;
  std::size_t test = 0;

  std::size_t total() const { return labeled + unlabeled_src + unlabeled_tgt + dev + test; }
};

/// Synthetic triples-to-text task. Source side: "e3 r1 v7 | e0 r4 v2",
/// target side: one fixed template per relation, filled with the entity and
/// value and concatenated over the triples in order.
struct SynthTaskSpec {
  std::size_t entities = 16;
  std::size_t relations = 6;
  std::size_t values = 16;
  std::size_t min_triples = 1;
  std::size_t max_triples = 3;
  /// 0: one sentence per triple; 1: triples joined with "and" into one sentence.
  int grammar = 0;
  std::size_t size = 1000;
  std::uint64_t seed = 1;

  /// Throws ConfigError when no corpus can be generated from these settings.
  void validate() const;
};

/// Deterministic in its settings. Examples are distinct on the source side.
ParallelCorpus generate_synthetic(const SynthTaskSpec& spec);

/// Reference inverse of the generator's templates: maps a source sentence
/// to the target the generator would produce for it.
Sentence render_target(const Sentence& source, int grammar);

/// Disjoint seeded sampling; unlabeled pools keep only one side.
DataSplit make_split(const ParallelCorpus& corpus, const SplitSizes& sizes, std::uint64_t seed);

Sentence tokenize(const std::string& line);
std::string join(std::span<const std::string> tokens);

/// Line i of each file forms pair i. Throws FormatError on line-count mismatch.
ParallelCorpus load_parallel(const std::filesystem::path& src, const std::filesystem::path& tgt);
std::vector<Sentence> load_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const Sentence> lines);
void write_parallel(const std::filesystem::path& src, const std::filesystem::path& tgt,
                    const ParallelCorpus& corpus);

std::vector<Sentence> sources(const ParallelCorpus& corpus);
std::vector<Sentence> targets(const ParallelCorpus& corpus);

}  // namespace semigen
