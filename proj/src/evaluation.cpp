#include "simtrans/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace simtrans {

namespace {

// Count of each n-gram, keyed by its tokens joined with '\x1f' (a separator
// that cannot appear inside whitespace-delimited tokens).
std::map<std::string, long long> ngram_counts(const std::vector<std::string>& tokens,
                                              int n) {
  std::map<std::string, long long> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuReport corpus_bleu(const TokenCorpus& hypotheses, const TokenCorpus& references,
                       int max_n, bool smoothing) {
  if (hypotheses.size() != references.size())
    throw ArgumentError("corpus_bleu: " + std::to_string(hypotheses.size()) +
                        " hypotheses vs " + std::to_string(references.size()) +
                        " references");
  if (max_n < 1) throw ArgumentError("corpus_bleu: max_n must be >= 1");

  BleuReport report;
  report.smoothed = smoothing;
  std::vector<long long> matched(max_n, 0), total(max_n, 0);
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto& hyp = hypotheses[s];
    const auto& ref = references[s];
    report.hyp_tokens += static_cast<long long>(hyp.size());
    report.ref_tokens += static_cast<long long>(ref.size());
    for (int n = 1; n <= max_n; ++n) {
      const auto hyp_counts = ngram_counts(hyp, n);
      const auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end()) matched[n - 1] += std::min(count, it->second);
      }
      if (static_cast<int>(hyp.size()) >= n)
        total[n - 1] += static_cast<long long>(hyp.size()) - n + 1;
    }
  }

  report.precisions.assign(max_n, 0);
  double log_sum = 0;
  int available = 0;
  bool zero_precision = false;
  for (int n = 0; n < max_n; ++n) {
    long long num = matched[n], den = total[n];
    if (smoothing && n >= 1) {
      ++num;
      ++den;
    }
    if (den == 0) continue;  // order not available at this corpus size
    report.precisions[n] = static_cast<double>(num) / static_cast<double>(den);
    ++available;
    if (num == 0)
      zero_precision = true;
    else
      log_sum += std::log(report.precisions[n]);
  }

  report.brevity_penalty =
      report.hyp_tokens == 0 || report.hyp_tokens >= report.ref_tokens
          ? 1.0
          : std::exp(1.0 - static_cast<double>(report.ref_tokens) /
                               static_cast<double>(report.hyp_tokens));
  if (available == 0 || zero_precision) return report;  // bleu 0
  report.bleu = 100.0 * report.brevity_penalty * std::exp(log_sum / available);
  return report;
}

std::string postprocess(const std::vector<std::string>& tokens) {
  const std::vector<std::string> words = revert_bpe(tokens);
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string bleu_report_block(const BleuReport& report) {
  char buf[256];
  std::string precisions;
  for (std::size_t i = 0; i < report.precisions.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.1f", i ? "/" : "", 100.0 * report.precisions[i]);
    precisions += buf;
  }
  const double ratio = report.ref_tokens > 0
                           ? static_cast<double>(report.hyp_tokens) / report.ref_tokens
                           : 0.0;
  std::snprintf(buf, sizeof(buf),
                "BLEU = %.2f, %s (BP = %.3f, ratio = %.3f, hyp_len = %lld, ref_len = %lld)%s",
                report.bleu, precisions.c_str(), report.brevity_penalty, ratio,
                report.hyp_tokens, report.ref_tokens,
                report.smoothed ? " [smoothed]" : "");
  return buf;
}

std::string bleu_report_line(const BleuReport& report) {
  char buf[320];
  std::string precisions;
  for (std::size_t i = 0; i < report.precisions.size(); ++i) {
    char p[48];
    std::snprintf(p, sizeof(p), "%s%.6f", i ? ", " : "", report.precisions[i]);
    precisions += p;
  }
  std::snprintf(buf, sizeof(buf),
                "{\"bleu\": %.4f, \"precisions\": [%s], \"bp\": %.6f, "
                "\"hyp_len\": %lld, \"ref_len\": %lld, \"smoothed\": %s}",
                report.bleu, precisions.c_str(), report.brevity_penalty,
                report.hyp_tokens, report.ref_tokens,
                report.smoothed ? "true" : "false");
  return buf;
}

}  // namespace simtrans
