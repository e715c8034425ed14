#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simtrans/errors.hpp"

namespace simtrans {

// A corpus of tokenized sentences.
using TokenCorpus = std::vector<std::vector<std::string>>;

// Splits a word into UTF-8 code points; malformed bytes pass through as
// single-byte symbols.
std::vector<std::string> utf8_split(const std::string& word);

// True for target-language tags of the form "<2xx>" (lowercase code).
bool is_language_tag(const std::string& token);

// ---------------------------------------------------------------------------
// byte-pair encoding
// ---------------------------------------------------------------------------

struct BpeModel {
  // Merge rules in learning order; rank = position.
  std::vector<std::pair<std::string, std::string>> merges;
  // Continuation marker suffixed on every non-final subword of a word.
  std::string marker = "@@";

  void save(const std::filesystem::path& path) const;
  static BpeModel load(const std::filesystem::path& path);
};

// Greedy merge learning over word types weighted by frequency. Ties break
// lexicographically on the pair; stops early once no pair occurs twice.
BpeModel learn_bpe(const TokenCorpus& corpus, int num_merges);

// Splits each word to characters, replays the merges in rank order, and marks
// all but the last piece of each word with the continuation marker.
std::vector<std::string> apply_bpe(const std::vector<std::string>& sentence,
                                   const BpeModel& model);

// Joins marker-carrying subwords with their successors. A marker on the final
// token is stripped and counted in *trailing_marker_warnings when given.
std::vector<std::string> revert_bpe(const std::vector<std::string>& tokens,
                                    int* trailing_marker_warnings = nullptr);

// ---------------------------------------------------------------------------
// vocabulary
// ---------------------------------------------------------------------------

class Vocab {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kBosId = 1;
  static constexpr int kEosId = 2;
  static constexpr int kUnkId = 3;

  static constexpr const char* kPadToken = "<pad>";
  static constexpr const char* kBosToken = "<s>";
  static constexpr const char* kEosToken = "</s>";
  static constexpr const char* kUnkToken = "<unk>";

  Vocab() = default;

  int size() const { return static_cast<int>(tokens_.size()); }
  // Unknown tokens map to the unk id.
  int id_of(const std::string& token) const;
  const std::string& token_of(int id) const;
  bool contains(const std::string& token) const { return index_.count(token) > 0; }

  std::vector<int> encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  std::vector<std::string> language_tags() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend Vocab build_vocab(const std::vector<const TokenCorpus*>& corpora,
                           const std::vector<std::string>& language_tags);

 private:
  void push(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Union of subword types across all corpora plus reserved specials and tags.
// Ids: specials, then tags in the given order, then tokens by descending
// frequency with lexicographic tie-break.
Vocab build_vocab(const std::vector<const TokenCorpus*>& corpora,
                  const std::vector<std::string>& language_tags = {});

}  // namespace simtrans
