#pragma once

#include <filesystem>
#include <string>

#include "semigen/model.hpp"
#include "semigen/vocab.hpp"

namespace semigen {

/// Layout, all integers little-endian:
///   8 bytes   magic "SGCKPT01"
///   u64       length n of the JSON header
///   n bytes   JSON header: format, config, vocab tokens and hashes, and a
///             "params" array of {name, rows, cols} in storage order
///   doubles   parameter values, row-major, in the order of "params"
struct Checkpoint {
  Seq2SeqModel model;
  Vocab src_vocab;
  Vocab tgt_vocab;
};

inline constexpr const char* kCheckpointMagic = "SGCKPT01";

void save_checkpoint(const std::filesystem::path& path, const Seq2SeqModel& model,
                     const Vocab& src_vocab, const Vocab& tgt_vocab);

/// Throws FormatError on a bad magic tag, header, hash or size mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace semigen
