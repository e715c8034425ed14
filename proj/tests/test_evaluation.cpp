#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "simtrans/evaluation.hpp"
#include "simtrans/rng.hpp"

using namespace simtrans;

namespace {

TokenCorpus sentences(std::initializer_list<const char*> lines) {
  TokenCorpus corpus;
  for (const char* line : lines) {
    std::vector<std::string> tokens;
    std::string current;
    for (const char* p = line;; ++p) {
      if (*p == ' ' || *p == '\0') {
        if (!current.empty()) tokens.push_back(current);
        current.clear();
        if (*p == '\0') break;
      } else {
        current += *p;
      }
    }
    corpus.push_back(tokens);
  }
  return corpus;
}

}  // namespace

TEST_CASE("perfect match scores 100") {
  TokenCorpus corpus = sentences({"el gato come pescado", "buenos dias", "a"});
  BleuReport report = corpus_bleu(corpus, corpus);
  CHECK(report.bleu == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(report.brevity_penalty == 1.0);
  CHECK(report.hyp_tokens == report.ref_tokens);
}

TEST_CASE("no unigram overlap scores 0") {
  TokenCorpus hyp = sentences({"x y z", "w w"});
  TokenCorpus ref = sentences({"a b c", "d e"});
  CHECK(corpus_bleu(hyp, ref).bleu == 0.0);
}

TEST_CASE("closed-form single-pair example") {
  TokenCorpus hyp = sentences({"a b c d e f"});
  TokenCorpus ref = sentences({"a b c d e f g"});
  BleuReport report = corpus_bleu(hyp, ref);
  CHECK(report.precisions[0] == doctest::Approx(1.0));
  CHECK(report.precisions[1] == doctest::Approx(1.0));
  CHECK(report.precisions[2] == doctest::Approx(1.0));
  CHECK(report.precisions[3] == doctest::Approx(1.0));
  CHECK(report.brevity_penalty == doctest::Approx(std::exp(1.0 - 7.0 / 6.0)).epsilon(1e-12));
  CHECK(std::abs(report.bleu - 100.0 * std::exp(1.0 - 7.0 / 6.0)) < 1e-9);
  CHECK(std::abs(report.bleu - 84.65) < 0.01);
}

TEST_CASE("length mismatch and bad max_n are argument errors") {
  TokenCorpus hyp = sentences({"a"});
  TokenCorpus ref = sentences({"a", "b"});
  CHECK_THROWS_AS(corpus_bleu(hyp, ref), ArgumentError);
  CHECK_THROWS_AS(corpus_bleu(hyp, sentences({"a"}), 0), ArgumentError);
}

TEST_CASE("brevity penalty only fires when the hypothesis side is shorter") {
  TokenCorpus hyp = sentences({"a b c d"});
  TokenCorpus ref = sentences({"a b"});
  BleuReport longer = corpus_bleu(hyp, ref);
  CHECK(longer.brevity_penalty == 1.0);

  BleuReport shorter = corpus_bleu(ref, hyp);
  CHECK(shorter.brevity_penalty == doctest::Approx(std::exp(1.0 - 4.0 / 2.0)));

  // Empty hypotheses: score 0 through precisions, BP stays in (0, 1].
  TokenCorpus empty = {{}};
  BleuReport degenerate = corpus_bleu(empty, sentences({"a b"}));
  CHECK(degenerate.bleu == 0.0);
  CHECK(degenerate.brevity_penalty == 1.0);
}

TEST_CASE("short corpora use only the available orders") {
  TokenCorpus hyp = sentences({"a b"});
  TokenCorpus ref = sentences({"a b"});
  BleuReport report = corpus_bleu(hyp, ref);  // no trigrams or 4-grams exist
  CHECK(report.bleu == doctest::Approx(100.0));
}

TEST_CASE("smoothing rescues zero higher-order counts and is flagged") {
  TokenCorpus hyp = sentences({"a c b"});
  TokenCorpus ref = sentences({"a b c"});  // unigrams match, no bigram does
  BleuReport plain = corpus_bleu(hyp, ref);
  CHECK(plain.bleu == 0.0);
  CHECK_FALSE(plain.smoothed);

  BleuReport smoothed = corpus_bleu(hyp, ref, 4, true);
  CHECK(smoothed.bleu > 0.0);
  CHECK(smoothed.smoothed);
  CHECK(bleu_report_block(smoothed).find("[smoothed]") != std::string::npos);
}

TEST_CASE("matches the direct-counting oracle on random corpora") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 1 + static_cast<int>(rng.below(50));
    auto ref = oracles::random_corpus(rng, n, 30, 12);
    auto hyp = oracles::random_corpus(rng, n, 30, 12);
    // Bias some hypotheses toward the reference so scores are not all zero.
    for (int i = 0; i < n; i += 3) hyp[i] = ref[i];
    for (bool smooth : {false, true}) {
      double mine = corpus_bleu(hyp, ref, 4, smooth).bleu;
      double direct = oracles::bleu_direct(hyp, ref, 4, smooth);
      CHECK(std::abs(mine - direct) < 0.01);
    }
  }
}

TEST_CASE("jointly permuting pairs leaves the score unchanged") {
  Rng rng(77);
  auto ref = oracles::random_corpus(rng, 12, 10, 8);
  auto hyp = oracles::random_corpus(rng, 12, 10, 8);
  for (int i = 0; i < 12; i += 2) hyp[i] = ref[i];
  double before = corpus_bleu(hyp, ref).bleu;

  std::vector<int> order(12);
  for (int i = 0; i < 12; ++i) order[i] = i;
  rng.shuffle(order);
  TokenCorpus hyp2, ref2;
  for (int i : order) {
    hyp2.push_back(hyp[i]);
    ref2.push_back(ref[i]);
  }
  CHECK(corpus_bleu(hyp2, ref2).bleu == doctest::Approx(before).epsilon(1e-12));
}

TEST_CASE("replacing a mismatched sentence with its reference never lowers the score") {
  // Hypotheses are derived from their references by truncation and token noise,
  // so none is longer than its reference. Under that condition fixing a sentence
  // raises every clipped precision and cannot shrink the brevity penalty; a
  // longer-than-reference hypothesis could instead drag BP down on replacement.
  Rng rng(31);
  for (int trial = 0; trial < 15; ++trial) {
    int n = 4 + static_cast<int>(rng.below(12));
    auto ref = oracles::random_corpus(rng, n, 8, 9);
    for (auto& sentence : ref)
      if (sentence.empty()) sentence.push_back("w0");
    TokenCorpus hyp = ref;
    for (int i = 1; i < n; i += 2) {
      auto& sentence = hyp[i];
      sentence.resize(1 + rng.below(sentence.size()));
      for (auto& token : sentence)
        if (rng.below(3) == 0) token = "w" + std::to_string(rng.below(8));
    }
    double before = corpus_bleu(hyp, ref).bleu;
    for (int i = 0; i < n; ++i) {
      if (hyp[i] == ref[i]) continue;
      TokenCorpus fixed = hyp;
      fixed[i] = ref[i];
      double after = corpus_bleu(fixed, ref).bleu;
      CHECK(after >= before - 1e-9);
    }
  }
}

TEST_CASE("postprocess examples") {
  CHECK(postprocess({"ab@@", "c"}) == "abc");
  CHECK(postprocess({}) == "");
  CHECK(postprocess({"x", "y"}) == "x y");
  CHECK(postprocess({"a@@", "b@@", "c", "d"}) == "abc d");
}

TEST_CASE("report formats") {
  TokenCorpus corpus = sentences({"a b c d"});
  BleuReport report = corpus_bleu(corpus, corpus);
  std::string block = bleu_report_block(report);
  CHECK(block.find("BLEU = 100.00") != std::string::npos);
  CHECK(block.find("BP = 1.000") != std::string::npos);
  CHECK(block.find("ratio = 1.000") != std::string::npos);

  std::string line = bleu_report_line(report);
  CHECK(line.find("\"bleu\": 100.0000") != std::string::npos);
  CHECK(line.find("\"hyp_len\": 4") != std::string::npos);
  CHECK(line.find("\"smoothed\": false") != std::string::npos);
}
