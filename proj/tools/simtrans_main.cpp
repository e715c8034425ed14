#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "simtrans/analysis.hpp"
#include "simtrans/augment.hpp"
#include "simtrans/data.hpp"
#include "simtrans/decoding.hpp"
#include "simtrans/evaluation.hpp"
#include "simtrans/model.hpp"
#include "simtrans/rng.hpp"
#include "simtrans/subword.hpp"
#include "simtrans/training.hpp"

namespace {

using namespace simtrans;

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Preprocessed files hold final subword tokens; split on whitespace only (the
// raw-text tokenizer would tear continuation markers and tags apart).
TokenCorpus load_token_lines(const std::string& path) {
  TokenCorpus corpus;
  for (const std::string& line : read_lines(path)) corpus.push_back(split_whitespace(line));
  return corpus;
}

ParallelCorpus load_token_pairs(const std::string& src_path, const std::string& tgt_path,
                                const std::string& src_lang, const std::string& tgt_lang) {
  TokenCorpus src = load_token_lines(src_path);
  TokenCorpus tgt = load_token_lines(tgt_path);
  if (src.size() != tgt.size())
    throw DataError("line count mismatch " + std::to_string(src.size()) + " vs " +
                    std::to_string(tgt.size()) + " (" + src_path + ", " + tgt_path + ")");
  ParallelCorpus corpus;
  corpus.source_lang = src_lang;
  corpus.target_lang = tgt_lang;
  corpus.pairs.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i)
    corpus.pairs.emplace_back(std::move(src[i]), std::move(tgt[i]));
  return corpus;
}

void write_token_pairs(const ParallelCorpus& corpus, const std::string& src_path,
                       const std::string& tgt_path) {
  std::vector<std::string> src, tgt;
  src.reserve(corpus.size());
  tgt.reserve(corpus.size());
  for (const auto& [s, t] : corpus.pairs) {
    src.push_back(join(s));
    tgt.push_back(join(t));
  }
  write_lines(src_path, src);
  write_lines(tgt_path, tgt);
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SIMTRANS_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ArgumentError(std::string("SIMTRANS_SEED is not an integer: ") + env);
    }
  }
  return 1;
}

// Flat "key = value" config with [section] headers; keys are looked up as
// "section.key". Command-line flags take precedence.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> values;
  std::string section;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    const std::size_t comment = line.find('#');
    if (comment != std::string::npos) line.resize(comment);
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    std::size_t e = line.find_last_not_of(" \t");
    line = line.substr(b, e - b + 1);
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(i + 1) +
                        ": expected 'key = value' or '[section]'");
    auto strip = [](std::string s) {
      const std::size_t sb = s.find_first_not_of(" \t");
      if (sb == std::string::npos) return std::string();
      const std::size_t se = s.find_last_not_of(" \t");
      return s.substr(sb, se - sb + 1);
    };
    const std::string key = strip(line.substr(0, eq));
    if (key.empty())
      throw FormatError(path + ":" + std::to_string(i + 1) + ": empty key");
    values[(section.empty() ? key : section + "." + key)] = strip(line.substr(eq + 1));
  }
  return values;
}

struct ConfigBinding {
  CLI::Option* option;
  std::function<void(const std::string&)> assign;
};

template <class T>
void parse_into(const std::string& key, const std::string& text, T& out) {
  std::istringstream stream(text);
  stream >> out;
  if (stream.fail() || !stream.eof())
    throw FormatError("config key '" + key + "': bad value '" + text + "'");
}

void parse_into(const std::string&, const std::string& text, std::string& out) {
  out = text;
}

void apply_config(const std::string& path,
                  const std::map<std::string, ConfigBinding>& bindings) {
  for (const auto& [key, value] : read_config_file(path)) {
    const auto it = bindings.find(key);
    if (it == bindings.end()) throw FormatError("unknown config key '" + key + "'");
    if (it->second.option->count() == 0) it->second.assign(value);
  }
}

// ---------------------------------------------------------------------------
// subcommand options
// ---------------------------------------------------------------------------

struct LearnBpeArgs {
  std::vector<std::string> inputs;
  int merges = 200;
  std::string output;
};

struct ApplyBpeArgs {
  std::string model, input, output;
};

struct BuildVocabArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> tags;
  std::string output;
};

struct PreprocessArgs {
  std::vector<std::string> sources, targets, tags;
  std::string bpe_model;
  int max_len = 175;
  std::string source_lang = "src", target_lang = "tgt";
  std::string output_source, output_target;
};

struct TrainArgs {
  std::string config_path;
  std::string train_source, train_target, dev_source, dev_target;
  std::string vocab_path, output_dir, log_path;
  TransformerConfig model{.num_layers = 6,
                          .num_heads = 4,
                          .d_model = 512,
                          .d_ff = 0,
                          .dropout_rate = 0.3,
                          .max_positions = 1024,
                          .vocab_size = 0};
  TrainConfig train;
};

struct TranslateArgs {
  std::string checkpoint, vocab_path, input, output;
  BeamConfig beam;
  int threads = 1;
};

struct BacktranslateArgs {
  std::string checkpoint, vocab_path, mono;
  std::string output_source, output_target, provenance;
  std::string gold_source, gold_target;
  std::string source_lang = "src", target_lang = "tgt";
  BeamConfig beam;
  long long subset = 0;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ScoreArgs {
  std::string hyp, ref;
  int max_n = 4;
  bool smooth = false;
};

struct AnalyzeArgs {
  std::string results, corpora_dir, output, summary;
  bool spearman = false;
};

int run_learn_bpe(const LearnBpeArgs& args) {
  TokenCorpus corpus;
  for (const std::string& path : args.inputs)
    for (const std::string& line : read_lines(path)) corpus.push_back(tokenize(line));
  learn_bpe(corpus, args.merges).save(args.output);
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

int run_apply_bpe(const ApplyBpeArgs& args) {
  const BpeModel model = BpeModel::load(args.model);
  std::vector<std::string> out;
  for (const std::string& line : read_lines(args.input))
    out.push_back(join(apply_bpe(tokenize(line), model)));
  write_lines(args.output, out);
  std::cout << "wrote " << args.output << "\n";
  return 0;
}

int run_build_vocab(const BuildVocabArgs& args) {
  std::vector<TokenCorpus> corpora;
  corpora.reserve(args.inputs.size());
  for (const std::string& path : args.inputs) corpora.push_back(load_token_lines(path));
  std::vector<const TokenCorpus*> pointers;
  for (const TokenCorpus& corpus : corpora) pointers.push_back(&corpus);
  const Vocab vocab = build_vocab(pointers, args.tags);
  vocab.save(args.output);
  std::cout << "wrote " << args.output << " (" << vocab.size() << " entries)\n";
  return 0;
}

int run_preprocess(const PreprocessArgs& args) {
  if (args.sources.size() != args.targets.size())
    throw ArgumentError("preprocess: --source and --target counts differ");
  if (!args.tags.empty() && args.tags.size() != args.sources.size())
    throw ArgumentError("preprocess: --tag count must match the corpus count");
  BpeModel model;
  const bool use_bpe = !args.bpe_model.empty();
  if (use_bpe) model = BpeModel::load(args.bpe_model);

  ParallelCorpus combined;
  combined.source_lang = args.source_lang;
  combined.target_lang = args.target_lang;
  for (std::size_t c = 0; c < args.sources.size(); ++c) {
    ParallelCorpus corpus = load_parallel(args.sources[c], args.targets[c],
                                          args.source_lang, args.target_lang);
    if (use_bpe)
      for (auto& [src, tgt] : corpus.pairs) {
        src = apply_bpe(src, model);
        tgt = apply_bpe(tgt, model);
      }
    corpus = clean(corpus, args.max_len);
    if (!args.tags.empty()) corpus = tag_multilingual(corpus, args.tags[c]);
    for (auto& pair : corpus.pairs) combined.pairs.push_back(std::move(pair));
  }
  write_token_pairs(combined, args.output_source, args.output_target);
  std::cout << "wrote " << combined.size() << " pairs to " << args.output_source
            << " and " << args.output_target << "\n";
  return 0;
}

int run_train(const TrainArgs& args) {
  const Vocab vocab = Vocab::load(args.vocab_path);
  const ParallelCorpus train_corpus =
      load_token_pairs(args.train_source, args.train_target, "src", "tgt");
  const ParallelCorpus dev_corpus =
      load_token_pairs(args.dev_source, args.dev_target, "src", "tgt");

  std::filesystem::create_directories(args.output_dir);
  const std::string log_path =
      args.log_path.empty() ? (std::filesystem::path(args.output_dir) / "train.log").string()
                            : args.log_path;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw IoError("cannot open " + log_path + " for writing");

  const TrainResult result =
      train(train_corpus, dev_corpus, vocab, args.model, args.train, args.output_dir, &log);
  if (!result.abort_reason.empty()) {
    std::cerr << "training aborted: " << result.abort_reason << "\n";
    if (!result.best_path.empty())
      std::cerr << "best checkpoint so far: " << result.best_path.string() << " (step "
                << result.best.step << ", dev BLEU " << result.best.dev_bleu << ")\n";
    return 2;
  }
  std::cout << "best checkpoint: " << result.best_path.string() << " (step "
            << result.best.step << ", dev BLEU " << result.best.dev_bleu << ")\n";
  return 0;
}

int run_translate(const TranslateArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const Vocab vocab = Vocab::load(args.vocab_path);
  if (vocab.size() != ckpt.config.vocab_size)
    throw DataError("vocabulary has " + std::to_string(vocab.size()) +
                    " entries but the checkpoint was trained with " +
                    std::to_string(ckpt.config.vocab_size));
  const TokenCorpus sources = load_token_lines(args.input);
  const std::vector<std::string> outputs =
      translate_corpus(ckpt.params, ckpt.config, vocab, sources, args.beam, args.threads);
  write_lines(args.output, outputs);
  std::cout << "wrote " << outputs.size() << " translations to " << args.output << "\n";
  return 0;
}

int run_backtranslate(const BacktranslateArgs& args) {
  if (args.gold_source.empty() != args.gold_target.empty())
    throw ArgumentError("backtranslate: --gold-source and --gold-target go together");
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  const Vocab vocab = Vocab::load(args.vocab_path);
  if (vocab.size() != ckpt.config.vocab_size)
    throw DataError("vocabulary has " + std::to_string(vocab.size()) +
                    " entries but the checkpoint was trained with " +
                    std::to_string(ckpt.config.vocab_size));

  TokenCorpus mono = load_token_lines(args.mono);
  if (args.subset > 0 && static_cast<std::size_t>(args.subset) < mono.size()) {
    Rng rng(mix_seed(args.seed, 0x5e1ec7));
    rng.shuffle(mono);
    mono.resize(args.subset);
  }
  if (mono.empty()) std::cerr << "warning: empty monolingual corpus\n";

  const SyntheticCorpus synthetic =
      back_translate(ckpt.params, ckpt.config, vocab, mono, args.beam, args.source_lang,
                     args.target_lang, args.threads);
  if (synthetic.dropped > 0)
    std::cerr << "warning: dropped " << synthetic.dropped << " empty decodes\n";

  ParallelCorpus out;
  std::vector<std::string> provenance;
  if (!args.gold_source.empty()) {
    const ParallelCorpus gold = load_token_pairs(args.gold_source, args.gold_target,
                                                 args.source_lang, args.target_lang);
    CombineResult combined = combine(gold, synthetic);
    out = std::move(combined.corpus);
    provenance = std::move(combined.provenance);
  } else {
    out.source_lang = args.source_lang;
    out.target_lang = args.target_lang;
    out.pairs = synthetic.pairs;
    provenance.assign(synthetic.size(), "synthetic");
  }
  write_token_pairs(out, args.output_source, args.output_target);
  if (!args.provenance.empty()) write_lines(args.provenance, provenance);
  std::cout << "wrote " << out.size() << " pairs (" << synthetic.size()
            << " synthetic) to " << args.output_source << " and " << args.output_target
            << "\n";
  return 0;
}

int run_score(const ScoreArgs& args) {
  const TokenCorpus hyp = load_token_lines(args.hyp);
  const TokenCorpus ref = load_token_lines(args.ref);
  const BleuReport report = corpus_bleu(hyp, ref, args.max_n, args.smooth);
  std::cout << bleu_report_block(report) << "\n" << bleu_report_line(report) << "\n";
  return 0;
}

int run_analyze(const AnalyzeArgs& args) {
  const SimilarityReport report =
      build_report(args.results, args.corpora_dir, args.spearman);
  write_report(report, args.output, args.summary);
  for (const auto& [family, r] : report.family_r)
    std::cout << family << (report.spearman ? " spearman_r = " : " pearson_r = ") << r
              << "\n";
  std::cout << "wrote " << args.output << " and " << args.summary << "\n";
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"simtrans: a desk-scale neural machine translation toolkit"};
  app.require_subcommand(1);

  LearnBpeArgs learn_args;
  auto* learn = app.add_subcommand("learn-bpe", "Learn BPE merges from raw text");
  learn->add_option("--input", learn_args.inputs, "Training text file(s)")
      ->required()
      ->expected(-1);
  learn->add_option("--merges", learn_args.merges, "Number of merge operations");
  learn->add_option("--output", learn_args.output, "Output model file")->required();

  ApplyBpeArgs apply_args;
  auto* apply = app.add_subcommand("apply-bpe", "Segment raw text with a BPE model");
  apply->add_option("--model", apply_args.model, "BPE model file")->required();
  apply->add_option("--input", apply_args.input, "Input text file")->required();
  apply->add_option("--output", apply_args.output, "Output token file")->required();

  BuildVocabArgs vocab_args;
  auto* build = app.add_subcommand("build-vocab", "Build a shared vocabulary");
  build->add_option("--input", vocab_args.inputs, "Subword token file(s)")
      ->required()
      ->expected(-1);
  build->add_option("--tag", vocab_args.tags, "Language tag(s), e.g. <2ca>");
  build->add_option("--output", vocab_args.output, "Output vocab file")->required();

  PreprocessArgs pre_args;
  auto* pre = app.add_subcommand(
      "preprocess", "Tokenize, BPE, clean, and optionally tag parallel corpora");
  pre->add_option("--source", pre_args.sources, "Raw source file(s)")
      ->required()
      ->expected(-1);
  pre->add_option("--target", pre_args.targets, "Raw target file(s)")
      ->required()
      ->expected(-1);
  pre->add_option("--tag", pre_args.tags, "Per-corpus target-language tag(s)");
  pre->add_option("--bpe", pre_args.bpe_model, "BPE model to apply");
  pre->add_option("--max-len", pre_args.max_len, "Drop pairs with a longer side");
  pre->add_option("--source-lang", pre_args.source_lang, "Source language code");
  pre->add_option("--target-lang", pre_args.target_lang, "Target language code");
  pre->add_option("--output-source", pre_args.output_source, "Combined source output")
      ->required();
  pre->add_option("--output-target", pre_args.output_target, "Combined target output")
      ->required();

  TrainArgs train_args;
  train_args.train.seed = default_seed();
  auto* tr = app.add_subcommand("train", "Train a model with best-checkpoint selection");
  auto* cfg_opt = tr->add_option("--config", train_args.config_path,
                                 "Config file ('key = value' with [sections])");
  std::map<std::string, ConfigBinding> bindings;
  auto bind = [&bindings](const std::string& key, CLI::Option* option, auto& target) {
    bindings[key] = {option, [key, &target](const std::string& text) {
                       parse_into(key, text, target);
                     }};
  };
  bind("data.train_source",
       tr->add_option("--train-source", train_args.train_source, "Training source tokens"),
       train_args.train_source);
  bind("data.train_target",
       tr->add_option("--train-target", train_args.train_target, "Training target tokens"),
       train_args.train_target);
  bind("data.dev_source",
       tr->add_option("--dev-source", train_args.dev_source, "Dev source tokens"),
       train_args.dev_source);
  bind("data.dev_target",
       tr->add_option("--dev-target", train_args.dev_target, "Dev target tokens"),
       train_args.dev_target);
  bind("data.vocab", tr->add_option("--vocab", train_args.vocab_path, "Vocabulary file"),
       train_args.vocab_path);
  bind("data.output_dir",
       tr->add_option("--output-dir", train_args.output_dir, "Checkpoint directory"),
       train_args.output_dir);
  bind("data.log", tr->add_option("--log", train_args.log_path, "Training log path"),
       train_args.log_path);
  bind("model.layers",
       tr->add_option("--layers", train_args.model.num_layers, "Encoder/decoder layers"),
       train_args.model.num_layers);
  bind("model.heads",
       tr->add_option("--heads", train_args.model.num_heads, "Attention heads"),
       train_args.model.num_heads);
  bind("model.d_model",
       tr->add_option("--d-model", train_args.model.d_model, "Model width"),
       train_args.model.d_model);
  bind("model.d_ff",
       tr->add_option("--d-ff", train_args.model.d_ff, "Feed-forward width (0 = 4x)"),
       train_args.model.d_ff);
  bind("model.max_positions",
       tr->add_option("--max-positions", train_args.model.max_positions,
                      "Longest supported sequence"),
       train_args.model.max_positions);
  bind("train.max_steps",
       tr->add_option("--max-steps", train_args.train.max_steps, "Optimizer steps"),
       train_args.train.max_steps);
  bind("train.validate_every",
       tr->add_option("--validate-every", train_args.train.validate_every,
                      "Steps between validations"),
       train_args.train.validate_every);
  bind("train.beta1", tr->add_option("--beta1", train_args.train.beta1, "Adam beta1"),
       train_args.train.beta1);
  bind("train.beta2", tr->add_option("--beta2", train_args.train.beta2, "Adam beta2"),
       train_args.train.beta2);
  bind("train.adam_eps",
       tr->add_option("--adam-eps", train_args.train.adam_eps, "Adam epsilon"),
       train_args.train.adam_eps);
  bind("train.lr", tr->add_option("--lr", train_args.train.base_rate, "Base learning rate"),
       train_args.train.base_rate);
  bind("train.warmup",
       tr->add_option("--warmup", train_args.train.warmup_steps, "Warmup steps"),
       train_args.train.warmup_steps);
  bind("train.weight_decay",
       tr->add_option("--weight-decay", train_args.train.weight_decay, "Decoupled decay"),
       train_args.train.weight_decay);
  bind("train.label_smoothing",
       tr->add_option("--label-smoothing", train_args.train.label_smoothing,
                      "Label smoothing epsilon"),
       train_args.train.label_smoothing);
  bind("train.dropout",
       tr->add_option("--dropout", train_args.train.dropout, "Dropout rate"),
       train_args.train.dropout);
  bind("train.clip_norm",
       tr->add_option("--clip-norm", train_args.train.clip_norm,
                      "Gradient clip threshold (0 = off)"),
       train_args.train.clip_norm);
  bind("train.max_tokens",
       tr->add_option("--max-tokens", train_args.train.max_tokens,
                      "Target-token budget per batch"),
       train_args.train.max_tokens);
  bind("train.seed", tr->add_option("--seed", train_args.train.seed, "Random seed"),
       train_args.train.seed);
  bind("train.beam",
       tr->add_option("--beam", train_args.train.beam_size, "Validation beam size"),
       train_args.train.beam_size);
  bind("train.threads",
       tr->add_option("--threads", train_args.train.num_threads, "Validation decode threads"),
       train_args.train.num_threads);

  TranslateArgs translate_args;
  auto* trans = app.add_subcommand("translate", "Beam-decode a source file");
  trans->add_option("--checkpoint", translate_args.checkpoint, "Model checkpoint")
      ->required();
  trans->add_option("--vocab", translate_args.vocab_path, "Vocabulary file")->required();
  trans->add_option("--input", translate_args.input, "Subword source file")->required();
  trans->add_option("--output", translate_args.output, "Translations output")->required();
  trans->add_option("--beam", translate_args.beam.beam_size, "Beam size");
  trans->add_option("--max-len", translate_args.beam.max_len,
                    "Decoding cap (0 = 2*source+10)");
  trans->add_option("--length-penalty", translate_args.beam.length_penalty,
                    "Length normalization exponent (0 = off)");
  trans->add_option("--threads", translate_args.threads, "Decode threads");

  BacktranslateArgs bt_args;
  bt_args.seed = default_seed();
  auto* bt = app.add_subcommand("backtranslate",
                                "Synthesize parallel data from monolingual target text");
  bt->add_option("--checkpoint", bt_args.checkpoint, "Reverse-direction checkpoint")
      ->required();
  bt->add_option("--vocab", bt_args.vocab_path, "Vocabulary file")->required();
  bt->add_option("--mono", bt_args.mono, "Monolingual target tokens")->required();
  bt->add_option("--output-source", bt_args.output_source, "Synthetic source output")
      ->required();
  bt->add_option("--output-target", bt_args.output_target, "Target output")->required();
  bt->add_option("--provenance", bt_args.provenance,
                 "Sidecar with one gold|synthetic flag per line");
  bt->add_option("--gold-source", bt_args.gold_source, "Gold source tokens to prepend");
  bt->add_option("--gold-target", bt_args.gold_target, "Gold target tokens to prepend");
  bt->add_option("--source-lang", bt_args.source_lang, "Source language code");
  bt->add_option("--target-lang", bt_args.target_lang, "Target language code");
  bt->add_option("--beam", bt_args.beam.beam_size, "Beam size");
  bt->add_option("--max-len", bt_args.beam.max_len, "Decoding cap (0 = 2*source+10)");
  bt->add_option("--subset", bt_args.subset,
                 "Use only this many monolingual sentences (seeded shuffle, 0 = all)");
  bt->add_option("--seed", bt_args.seed, "Subset shuffle seed");
  bt->add_option("--threads", bt_args.threads, "Decode threads");

  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Corpus BLEU of a hypothesis file");
  score->add_option("--hyp", score_args.hyp, "Hypothesis file")->required();
  score->add_option("--ref", score_args.ref, "Reference file")->required();
  score->add_option("--max-n", score_args.max_n, "Highest n-gram order");
  score->add_flag("--smooth", score_args.smooth, "Add-one smoothing for n >= 2");

  AnalyzeArgs analyze_args;
  auto* analyze =
      app.add_subcommand("analyze", "Join BLEU results with Jaccard similarities");
  analyze->add_option("--results", analyze_args.results,
                      "CSV of pair,direction,family,bleu")
      ->required();
  analyze->add_option("--corpora-dir", analyze_args.corpora_dir,
                      "Directory of <pair>.<lang> training files")
      ->required();
  analyze->add_option("--output", analyze_args.output, "Plot-data CSV output")->required();
  analyze->add_option("--summary", analyze_args.summary, "Per-family correlation CSV")
      ->required();
  analyze->add_flag("--spearman", analyze_args.spearman, "Rank correlation instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (learn->parsed()) return run_learn_bpe(learn_args);
  if (apply->parsed()) return run_apply_bpe(apply_args);
  if (build->parsed()) return run_build_vocab(vocab_args);
  if (pre->parsed()) return run_preprocess(pre_args);
  if (tr->parsed()) {
    if (cfg_opt->count() > 0) apply_config(train_args.config_path, bindings);
    for (const auto& [name, value] :
         std::initializer_list<std::pair<const char*, const std::string*>>{
             {"--train-source", &train_args.train_source},
             {"--train-target", &train_args.train_target},
             {"--dev-source", &train_args.dev_source},
             {"--dev-target", &train_args.dev_target},
             {"--vocab", &train_args.vocab_path},
             {"--output-dir", &train_args.output_dir}})
      if (value->empty())
        throw ArgumentError(std::string("train: ") + name +
                            " is required (flag or config file)");
    return run_train(train_args);
  }
  if (trans->parsed()) return run_translate(translate_args);
  if (bt->parsed()) return run_backtranslate(bt_args);
  if (score->parsed()) return run_score(score_args);
  if (analyze->parsed()) return run_analyze(analyze_args);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
