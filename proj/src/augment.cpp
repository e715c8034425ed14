#include "simtrans/augment.hpp"

#include <atomic>
#include <thread>

namespace simtrans {

SyntheticCorpus back_translate(const ModelParams& reverse_params,
                               const TransformerConfig& reverse_config,
                               const Vocab& vocab, const TokenCorpus& mono_target,
                               const BeamConfig& beam, const std::string& source_lang,
                               const std::string& target_lang, int num_threads) {
  if (num_threads < 1) throw ArgumentError("back_translate: num_threads must be >= 1");
  SyntheticCorpus synthetic;
  synthetic.source_lang = source_lang;
  synthetic.target_lang = target_lang;

  std::vector<std::vector<std::string>> decoded(mono_target.size());
  auto decode_one = [&](std::size_t i) {
    if (mono_target[i].empty()) return;  // stays empty, dropped below
    const Hypothesis best =
        beam_search(reverse_params, reverse_config, vocab.encode(mono_target[i]), beam);
    std::vector<int> body(best.tokens.begin() + 1, best.tokens.end());
    if (best.finished) body.pop_back();
    decoded[i] = vocab.decode(body);
  };
  if (num_threads == 1 || mono_target.size() < 2) {
    for (std::size_t i = 0; i < mono_target.size(); ++i) decode_one(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
      for (std::size_t i = cursor.fetch_add(1); i < mono_target.size();
           i = cursor.fetch_add(1))
        decode_one(i);
    };
    std::vector<std::thread> workers;
    const int n = std::min<int>(num_threads, static_cast<int>(mono_target.size()));
    workers.reserve(n);
    for (int t = 0; t < n; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }

  for (std::size_t i = 0; i < mono_target.size(); ++i) {
    if (decoded[i].empty()) {
      ++synthetic.dropped;
      continue;
    }
    synthetic.pairs.emplace_back(std::move(decoded[i]), mono_target[i]);
  }
  return synthetic;
}

CombineResult combine(const ParallelCorpus& gold, const SyntheticCorpus& synthetic) {
  if (gold.source_lang != synthetic.source_lang ||
      gold.target_lang != synthetic.target_lang)
    throw ArgumentError("combine: direction mismatch, gold is " + gold.source_lang +
                        "-" + gold.target_lang + " but synthetic is " +
                        synthetic.source_lang + "-" + synthetic.target_lang);
  CombineResult result;
  result.corpus.source_lang = gold.source_lang;
  result.corpus.target_lang = gold.target_lang;
  result.corpus.pairs = gold.pairs;
  result.provenance.assign(gold.size(), "gold");
  for (const auto& pair : synthetic.pairs) {
    result.corpus.pairs.push_back(pair);
    result.provenance.push_back("synthetic");
  }
  return result;
}

}  // namespace simtrans
