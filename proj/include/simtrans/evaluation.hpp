#pragma once

#include <string>
#include <vector>

#include "simtrans/subword.hpp"

namespace simtrans {

struct BleuReport {
  double bleu = 0;                 // 0-100 scale
  std::vector<double> precisions;  // p1..p_max_n as ratios
  double brevity_penalty = 1;
  long long hyp_tokens = 0;
  long long ref_tokens = 0;
  bool smoothed = false;
};

// Corpus-level BLEU: clipped n-gram precisions aggregated over all sentences,
// geometric mean over the orders whose denominator is nonzero, brevity
// penalty exp(1 - ref/hyp) when the hypothesis side is shorter. With
// smoothing on, counts for n >= 2 get add-one smoothing.
BleuReport corpus_bleu(const TokenCorpus& hypotheses, const TokenCorpus& references,
                       int max_n = 4, bool smoothing = false);

// revert_bpe then join with single spaces.
std::string postprocess(const std::vector<std::string>& tokens);

// Human-readable block: "BLEU = S, p1/p2/p3/p4 (BP = b, ratio = r, ...)".
std::string bleu_report_block(const BleuReport& report);

// Single machine-readable line with the same fields.
std::string bleu_report_line(const BleuReport& report);

}  // namespace simtrans
