#pragma once

#include <string>
#include <vector>

#include "simtrans/model.hpp"
#include "simtrans/subword.hpp"

namespace simtrans {

struct Hypothesis {
  std::vector<int> tokens;  // begins with the bos id
  Scalar log_prob = 0;      // sum of chosen per-step token log-probabilities
  bool finished = false;    // last token is eos
};

struct BeamConfig {
  int beam_size = 5;
  int max_len = 0;           // <= 0 selects 2 * source length + 10
  Scalar length_penalty = 0; // 0 = pure likelihood, no normalization
};

// Breadth-limited best-first search: each live hypothesis proposes its top
// beam_size continuations, the pool of candidates plus frozen finished
// hypotheses is cut back to the global top beam_size, and search stops when
// every retained hypothesis is finished or max_len tokens were generated.
// Returns the best finished hypothesis, or the best unfinished one if none
// finished. Ties break toward the lexicographically smaller token sequence.
Hypothesis beam_search(const ModelParams& params, const TransformerConfig& config,
                       const std::vector<int>& source_ids, const BeamConfig& beam);

// Beam-decodes every sentence, reverts BPE, and joins tokens with single
// spaces; output order matches input order regardless of num_threads.
std::vector<std::string> translate_corpus(const ModelParams& params,
                                          const TransformerConfig& config,
                                          const Vocab& vocab, const TokenCorpus& sources,
                                          const BeamConfig& beam, int num_threads = 1);

}  // namespace simtrans
