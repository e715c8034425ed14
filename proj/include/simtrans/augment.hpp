#pragma once

#include <string>
#include <vector>

#include "simtrans/data.hpp"
#include "simtrans/decoding.hpp"

namespace simtrans {

// Synthetic parallel data oriented for forward training: decoded source,
// verbatim monolingual target.
struct SyntheticCorpus {
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  std::string source_lang;
  std::string target_lang;
  long long dropped = 0;  // monolingual sentences whose decode came back empty

  std::size_t size() const { return pairs.size(); }
};

struct CombineResult {
  ParallelCorpus corpus;
  std::vector<std::string> provenance;  // "gold" or "synthetic" per pair
};

// Decodes every monolingual target sentence with the reverse-direction model
// into a synthetic source, kept in subword space for training. Empty decodes
// drop the pair and are counted.
SyntheticCorpus back_translate(const ModelParams& reverse_params,
                               const TransformerConfig& reverse_config,
                               const Vocab& vocab, const TokenCorpus& mono_target,
                               const BeamConfig& beam, const std::string& source_lang,
                               const std::string& target_lang, int num_threads = 1);

// Concatenation with gold first; language codes must match.
CombineResult combine(const ParallelCorpus& gold, const SyntheticCorpus& synthetic);

}  // namespace simtrans
