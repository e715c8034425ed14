#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "simtrans/numerics.hpp"
#include "simtrans/subword.hpp"

namespace simtrans {

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Whitespace split plus separation of leading/trailing punctuation. No case
// folding; deterministic.
std::vector<std::string> tokenize(const std::string& line);

// Lines of a UTF-8 file, trailing '\r' stripped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

struct ParallelCorpus {
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  std::string source_lang;
  std::string target_lang;

  std::size_t size() const { return pairs.size(); }
};

// Aligned one-sentence-per-line files; line i of each side becomes pair i.
ParallelCorpus load_parallel(const std::filesystem::path& src_path,
                             const std::filesystem::path& tgt_path,
                             const std::string& src_lang, const std::string& tgt_lang);

// One-sentence-per-line monolingual file, tokenized.
TokenCorpus load_mono(const std::filesystem::path& path);

// Drops pairs with an empty side or a side longer than max_len tokens.
ParallelCorpus clean(const ParallelCorpus& corpus, int max_len);

// Prepends a "<2xx>" target-language tag to every source sentence.
ParallelCorpus tag_multilingual(const ParallelCorpus& corpus, const std::string& tag);

struct Batch {
  IntMatrix source;       // raw token ids, pad-filled
  IntMatrix target;       // raw token ids (no bos/eos), pad-filled
  BoolMatrix source_mask; // true = real token
  BoolMatrix target_mask;
  std::vector<int> pair_indices;  // positions in the originating corpus

  Index rows() const { return source.rows(); }
  Index source_length(Index row) const;
  Index target_length(Index row) const;
};

// Length-bucketed batches under a non-pad target-token budget, seeded shuffle.
// Every pair lands in exactly one batch; deterministic given seed.
std::vector<Batch> make_batches(const ParallelCorpus& corpus, const Vocab& vocab,
                                long long max_tokens, std::uint64_t seed);

}  // namespace simtrans
