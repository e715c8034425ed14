#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "simtrans/augment.hpp"
#include "simtrans/training.hpp"

using namespace simtrans;

namespace {

struct Copier {
  ParallelCorpus train_corpus;
  Vocab vocab;
  TransformerConfig config;
  ModelParams params;
};

// One shared micro copy model; back-translating with it is an identity map.
const Copier& copier() {
  static const Copier shared = [] {
    Copier c;
    c.train_corpus = fixtures::make_copy_corpus(7, 1000, 6, 2, 5);
    // A dev set large enough that only a model that truly generalizes the copy
    // rule scores best; a handful of sentences saturates at an early, still
    // shaky checkpoint.
    ParallelCorpus dev = fixtures::make_copy_corpus(8, 64, 6, 2, 5);
    c.vocab = fixtures::corpus_vocab({&c.train_corpus, &dev});
    c.config = fixtures::micro_model_config(c.vocab.size());
    TrainConfig tc = fixtures::micro_train_config();
    tc.max_steps = 800;
    tc.validate_every = 200;
    std::filesystem::path dir =
        std::filesystem::temp_directory_path() / "simtrans_augment_test";
    std::filesystem::remove_all(dir);
    TrainResult result = train(c.train_corpus, dev, c.vocab, c.config, tc, dir);
    c.params = std::move(result.best_params);
    c.config.dropout_rate = 0;
    return c;
  }();
  return shared;
}

}  // namespace

TEST_CASE("back_translate pairs a decoded source with the verbatim target") {
  const Copier& c = copier();
  TokenCorpus mono;
  for (int i = 0; i < 10; ++i) mono.push_back(c.train_corpus.pairs[i].second);

  BeamConfig beam;
  beam.beam_size = 2;
  SyntheticCorpus synthetic =
      back_translate(c.params, c.config, c.vocab, mono, beam, "aa", "bb");
  CHECK(synthetic.source_lang == "aa");
  CHECK(synthetic.target_lang == "bb");
  CHECK(synthetic.dropped == 0);
  REQUIRE(synthetic.size() == mono.size());
  for (std::size_t i = 0; i < mono.size(); ++i) {
    CHECK(synthetic.pairs[i].second == mono[i]);  // target untouched
    CHECK(synthetic.pairs[i].first == mono[i]);   // the copier inverts a copy
  }
}

TEST_CASE("back_translate is thread-count invariant") {
  const Copier& c = copier();
  TokenCorpus mono;
  for (int i = 0; i < 9; ++i) mono.push_back(c.train_corpus.pairs[i].second);
  BeamConfig beam;
  beam.beam_size = 2;
  SyntheticCorpus one = back_translate(c.params, c.config, c.vocab, mono, beam, "aa", "bb", 1);
  SyntheticCorpus three = back_translate(c.params, c.config, c.vocab, mono, beam, "aa", "bb", 3);
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(one.pairs[i] == three.pairs[i]);
  CHECK_THROWS_AS(back_translate(c.params, c.config, c.vocab, mono, beam, "aa", "bb", 0),
                  ArgumentError);
}

TEST_CASE("back_translate drops empty monolingual lines and counts them") {
  const Copier& c = copier();
  TokenCorpus mono;
  mono.push_back(c.train_corpus.pairs[0].second);
  mono.push_back({});  // empty sentence cannot be decoded
  mono.push_back(c.train_corpus.pairs[1].second);
  BeamConfig beam;
  beam.beam_size = 2;
  SyntheticCorpus synthetic =
      back_translate(c.params, c.config, c.vocab, mono, beam, "aa", "bb");
  CHECK(synthetic.size() == 2);
  CHECK(synthetic.dropped == 1);
  CHECK(synthetic.pairs[0].second == mono[0]);
  CHECK(synthetic.pairs[1].second == mono[2]);

  SyntheticCorpus empty =
      back_translate(c.params, c.config, c.vocab, TokenCorpus{}, beam, "aa", "bb");
  CHECK(empty.size() == 0);
  CHECK(empty.dropped == 0);
}

TEST_CASE("combine keeps gold first and labels provenance") {
  ParallelCorpus gold;
  gold.source_lang = "aa";
  gold.target_lang = "bb";
  gold.pairs.push_back({{"a", "b"}, {"a", "b"}});
  gold.pairs.push_back({{"c"}, {"c"}});

  SyntheticCorpus synthetic;
  synthetic.source_lang = "aa";
  synthetic.target_lang = "bb";
  synthetic.pairs.push_back({{"d"}, {"e"}});

  CombineResult combined = combine(gold, synthetic);
  REQUIRE(combined.corpus.size() == 3);
  REQUIRE(combined.provenance.size() == 3);
  CHECK(combined.corpus.pairs[0] == gold.pairs[0]);
  CHECK(combined.corpus.pairs[1] == gold.pairs[1]);
  CHECK(combined.corpus.pairs[2] == synthetic.pairs[0]);
  CHECK(combined.provenance == std::vector<std::string>{"gold", "gold", "synthetic"});
  CHECK(combined.corpus.source_lang == "aa");
  CHECK(combined.corpus.target_lang == "bb");
}

TEST_CASE("combine with no synthetic pairs reproduces the gold corpus") {
  ParallelCorpus gold;
  gold.source_lang = "aa";
  gold.target_lang = "bb";
  gold.pairs.push_back({{"a"}, {"b"}});
  SyntheticCorpus none;
  none.source_lang = "aa";
  none.target_lang = "bb";
  CombineResult combined = combine(gold, none);
  CHECK(combined.corpus.pairs == gold.pairs);
  CHECK(combined.provenance == std::vector<std::string>{"gold"});
}

TEST_CASE("combine rejects mismatched directions") {
  ParallelCorpus gold;
  gold.source_lang = "aa";
  gold.target_lang = "bb";
  gold.pairs.push_back({{"a"}, {"b"}});
  SyntheticCorpus synthetic;
  synthetic.source_lang = "bb";
  synthetic.target_lang = "aa";
  try {
    combine(gold, synthetic);
    FAIL("expected ArgumentError");
  } catch (const ArgumentError& e) {
    CHECK(std::string(e.what()).find("aa-bb") != std::string::npos);
    CHECK(std::string(e.what()).find("bb-aa") != std::string::npos);
  }
}
