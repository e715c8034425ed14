#include "simtrans/decoding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "simtrans/evaluation.hpp"

namespace simtrans {

namespace {

Scalar ranking_score(const Hypothesis& h, Scalar length_penalty) {
  if (length_penalty <= 0) return h.log_prob;
  const auto generated = static_cast<Scalar>(
      std::max<std::size_t>(h.tokens.size() - 1, 1));
  return h.log_prob / std::pow(generated, length_penalty);
}

// Higher score first; exact ties go to the lexicographically smaller token
// sequence so results are platform-independent.
bool better(const Hypothesis& a, const Hypothesis& b, Scalar length_penalty) {
  const Scalar sa = ranking_score(a, length_penalty);
  const Scalar sb = ranking_score(b, length_penalty);
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

}  // namespace

Hypothesis beam_search(const ModelParams& params, const TransformerConfig& config,
                       const std::vector<int>& source_ids, const BeamConfig& beam) {
  if (beam.beam_size < 1) throw ArgumentError("beam_search: beam_size must be >= 1");
  if (source_ids.empty()) throw ArgumentError("beam_search: empty source");
  const int max_len =
      beam.max_len > 0 ? beam.max_len : 2 * static_cast<int>(source_ids.size()) + 10;

  const Matrix enc = encode(source_ids, params, config);
  auto by_rank = [&](const Hypothesis& a, const Hypothesis& b) {
    return better(a, b, beam.length_penalty);
  };

  std::vector<Hypothesis> live{{std::vector<int>{Vocab::kBosId}, 0, false}};
  for (int step = 0; step < max_len; ++step) {
    std::vector<Hypothesis> pool;
    bool any_live = false;
    for (const Hypothesis& hyp : live) {
      if (hyp.finished) {
        pool.push_back(hyp);
        continue;
      }
      any_live = true;
      const Vector logits = decode_step(hyp.tokens, enc, params, config);
      const Vector logp = log_softmax<Scalar>(logits);
      std::vector<int> ids(logp.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
      const auto cutoff =
          ids.begin() + std::min<std::size_t>(beam.beam_size, ids.size());
      std::partial_sort(ids.begin(), cutoff, ids.end(), [&](int a, int b) {
        if (logp(a) != logp(b)) return logp(a) > logp(b);
        return a < b;
      });
      for (auto it = ids.begin(); it != cutoff; ++it) {
        Hypothesis next = hyp;
        next.tokens.push_back(*it);
        next.log_prob += logp(*it);
        next.finished = *it == Vocab::kEosId;
        pool.push_back(std::move(next));
      }
    }
    if (!any_live) break;
    std::sort(pool.begin(), pool.end(), by_rank);
    if (pool.size() > static_cast<std::size_t>(beam.beam_size))
      pool.resize(beam.beam_size);
    live = std::move(pool);
  }

  const Hypothesis* best = nullptr;
  for (const Hypothesis& hyp : live)
    if (hyp.finished && (!best || by_rank(hyp, *best))) best = &hyp;
  if (!best)
    for (const Hypothesis& hyp : live)
      if (!best || by_rank(hyp, *best)) best = &hyp;
  return *best;
}

std::vector<std::string> translate_corpus(const ModelParams& params,
                                          const TransformerConfig& config,
                                          const Vocab& vocab, const TokenCorpus& sources,
                                          const BeamConfig& beam, int num_threads) {
  if (num_threads < 1) throw ArgumentError("translate_corpus: num_threads must be >= 1");
  std::vector<std::string> out(sources.size());
  auto decode_one = [&](std::size_t i) {
    if (sources[i].empty()) {
      out[i].clear();
      return;
    }
    const std::vector<int> ids = vocab.encode(sources[i]);
    Hypothesis best = beam_search(params, config, ids, beam);
    std::vector<int> body(best.tokens.begin() + 1, best.tokens.end());
    if (best.finished) body.pop_back();
    out[i] = postprocess(vocab.decode(body));
  };
  if (num_threads == 1 || sources.size() < 2) {
    for (std::size_t i = 0; i < sources.size(); ++i) decode_one(i);
    return out;
  }
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < sources.size();
         i = cursor.fetch_add(1))
      decode_one(i);
  };
  std::vector<std::thread> workers;
  const int n = std::min<int>(num_threads, static_cast<int>(sources.size()));
  workers.reserve(n);
  for (int t = 0; t < n; ++t) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  return out;
}

}  // namespace simtrans
