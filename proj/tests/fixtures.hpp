#pragma once

// Synthetic desk-scale task corpora shared by the heavier tests: copy,
// substitution cipher (optionally with adjacent swaps), and tagged
// multilingual variants, all deterministic in the seed.

#include <string>
#include <utility>
#include <vector>

#include "simtrans/data.hpp"
#include "simtrans/rng.hpp"
#include "simtrans/subword.hpp"
#include "simtrans/training.hpp"

namespace fixtures {

inline std::vector<std::string> source_letters(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

inline std::vector<std::string> cipher_letters(int n, const std::string& prefix = "K") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline std::vector<std::string> random_sentence(simtrans::Rng& rng,
                                                const std::vector<std::string>& vocab,
                                                int len_lo, int len_hi) {
  const int len = len_lo + static_cast<int>(rng.below(len_hi - len_lo + 1));
  std::vector<std::string> out;
  out.reserve(len);
  for (int i = 0; i < len; ++i) out.push_back(vocab[rng.below(vocab.size())]);
  return out;
}

inline simtrans::ParallelCorpus make_copy_corpus(std::uint64_t seed, int sentences,
                                                 int vocab_size, int len_lo, int len_hi) {
  const auto vocab = source_letters(vocab_size);
  simtrans::Rng rng(seed);
  simtrans::ParallelCorpus corpus;
  corpus.source_lang = "aa";
  corpus.target_lang = "bb";
  for (int i = 0; i < sentences; ++i) {
    auto sentence = random_sentence(rng, vocab, len_lo, len_hi);
    corpus.pairs.emplace_back(sentence, sentence);
  }
  return corpus;
}

// Deterministic encipherment: substitute token i of the source alphabet with
// token (i + offset) mod n of a disjoint target alphabet, then swap adjacent
// positions.
inline std::vector<std::string> encipher(const std::vector<std::string>& sentence,
                                         int vocab_size, bool swap,
                                         const std::string& prefix = "K", int offset = 0) {
  const auto src = source_letters(vocab_size);
  const auto tgt = cipher_letters(vocab_size, prefix);
  std::vector<std::string> out;
  out.reserve(sentence.size());
  for (const auto& token : sentence) {
    int id = 0;
    for (int i = 0; i < vocab_size; ++i)
      if (src[i] == token) {
        id = i;
        break;
      }
    out.push_back(tgt[(id + offset) % vocab_size]);
  }
  if (swap)
    for (std::size_t i = 0; i + 1 < out.size(); i += 2) std::swap(out[i], out[i + 1]);
  return out;
}

inline simtrans::ParallelCorpus make_cipher_corpus(std::uint64_t seed, int sentences,
                                                   int vocab_size, int len_lo, int len_hi,
                                                   bool swap = true,
                                                   const std::string& prefix = "K",
                                                   int offset = 0,
                                                   const std::string& target_lang = "ci") {
  const auto vocab = source_letters(vocab_size);
  simtrans::Rng rng(seed);
  simtrans::ParallelCorpus corpus;
  corpus.source_lang = "pl";  // "plain"
  corpus.target_lang = target_lang;
  for (int i = 0; i < sentences; ++i) {
    auto sentence = random_sentence(rng, vocab, len_lo, len_hi);
    corpus.pairs.emplace_back(sentence, encipher(sentence, vocab_size, swap, prefix, offset));
  }
  return corpus;
}

inline simtrans::ParallelCorpus reverse_direction(const simtrans::ParallelCorpus& corpus) {
  simtrans::ParallelCorpus out;
  out.source_lang = corpus.target_lang;
  out.target_lang = corpus.source_lang;
  for (const auto& pair : corpus.pairs) out.pairs.emplace_back(pair.second, pair.first);
  return out;
}

inline simtrans::Vocab corpus_vocab(const std::vector<const simtrans::ParallelCorpus*>& parts,
                                    const std::vector<std::string>& tags = {}) {
  simtrans::TokenCorpus flat;
  for (const auto* corpus : parts)
    for (const auto& pair : corpus->pairs) {
      flat.push_back(pair.first);
      flat.push_back(pair.second);
    }
  return simtrans::build_vocab({&flat}, tags);
}

// Training setup sized for sub-minute unit-test runs on one core.
inline simtrans::TrainConfig micro_train_config() {
  simtrans::TrainConfig tc;
  tc.max_steps = 150;
  tc.validate_every = 50;
  tc.base_rate = 3e-3;
  tc.warmup_steps = 20;
  tc.weight_decay = 0;
  tc.label_smoothing = 0.1;
  tc.dropout = 0;
  tc.max_tokens = 256;
  tc.seed = 1;
  tc.beam_size = 2;
  return tc;
}

inline simtrans::TransformerConfig micro_model_config(int vocab_size) {
  simtrans::TransformerConfig config;
  config.num_layers = 1;
  config.num_heads = 2;
  config.d_model = 32;
  config.dropout_rate = 0;
  config.max_positions = 64;
  config.vocab_size = vocab_size;
  return config;
}

}  // namespace fixtures
