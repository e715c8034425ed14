#include "simtrans/training.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "simtrans/evaluation.hpp"
#include "simtrans/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace simtrans {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'C', 'K'};

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("truncated checkpoint");
  return value;
}

std::vector<std::string> split_whitespace(const std::string& line) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

}  // namespace

void TrainConfig::validate() const {
  if (max_steps < 0) throw ArgumentError("TrainConfig: max_steps must be >= 0");
  if (validate_every < 1) throw ArgumentError("TrainConfig: validate_every must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ArgumentError("TrainConfig: betas must be in [0, 1)");
  if (!(adam_eps > 0)) throw ArgumentError("TrainConfig: adam_eps must be positive");
  if (!(base_rate > 0)) throw ArgumentError("TrainConfig: base_rate must be positive");
  if (warmup_steps < 1) throw ArgumentError("TrainConfig: warmup_steps must be >= 1");
  if (weight_decay < 0) throw ArgumentError("TrainConfig: weight_decay must be >= 0");
  if (!(label_smoothing >= 0 && label_smoothing < 1))
    throw ArgumentError("TrainConfig: label_smoothing must be in [0, 1)");
  if (!(dropout >= 0 && dropout < 1))
    throw ArgumentError("TrainConfig: dropout must be in [0, 1)");
  if (clip_norm < 0) throw ArgumentError("TrainConfig: clip_norm must be >= 0");
  if (max_tokens < 1) throw ArgumentError("TrainConfig: max_tokens must be >= 1");
  if (beam_size < 1) throw ArgumentError("TrainConfig: beam_size must be >= 1");
  if (num_threads < 1) throw ArgumentError("TrainConfig: num_threads must be >= 1");
}

double validate(const ModelParams& params, const TransformerConfig& config,
                const Vocab& vocab, const ParallelCorpus& dev, int beam_size,
                int num_threads) {
  TokenCorpus sources;
  TokenCorpus references;
  sources.reserve(dev.size());
  references.reserve(dev.size());
  for (const auto& [src, tgt] : dev.pairs) {
    sources.push_back(src);
    references.push_back(split_whitespace(postprocess(tgt)));
  }
  BeamConfig beam;
  beam.beam_size = beam_size;
  const std::vector<std::string> outputs =
      translate_corpus(params, config, vocab, sources, beam, num_threads);
  TokenCorpus hypotheses;
  hypotheses.reserve(outputs.size());
  for (const std::string& line : outputs) hypotheses.push_back(split_whitespace(line));
  return corpus_bleu(hypotheses, references).bleu;
}

std::size_t select_best(const std::vector<CheckpointMeta>& checkpoints) {
  if (checkpoints.empty()) throw ArgumentError("select_best: no checkpoints");
  std::size_t best = 0;
  for (std::size_t i = 1; i < checkpoints.size(); ++i)
    if (checkpoints[i].dev_bleu > checkpoints[best].dev_bleu) best = i;
  return best;
}

void save_checkpoint(const ModelParams& params, const TransformerConfig& config,
                     const CheckpointMeta& meta, const std::filesystem::path& path) {
  if (meta.format_version != 1)
    throw ArgumentError("save_checkpoint: unsupported format version " +
                        std::to_string(meta.format_version));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, meta.format_version);
  write_pod<std::uint64_t>(out, config.hash());
  write_pod<std::int32_t>(out, config.num_layers);
  write_pod<std::int32_t>(out, config.num_heads);
  write_pod<std::int32_t>(out, config.d_model);
  write_pod<std::int32_t>(out, config.d_ff);
  write_pod<std::int32_t>(out, config.max_positions);
  write_pod<std::int32_t>(out, config.vocab_size);
  write_pod<double>(out, static_cast<double>(config.dropout_rate));
  write_pod<std::int64_t>(out, meta.step);
  write_pod<double>(out, meta.dev_bleu);

  auto views = tensor_views(const_cast<ModelParams&>(params));  // read-only use
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(views.size()));
  for (const TensorView& view : views) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(view.name.size()));
    out.write(view.name.data(), static_cast<std::streamsize>(view.name.size()));
    write_pod<std::int64_t>(out, view.rows);
    write_pod<std::int64_t>(out, view.cols);
    for (Index i = 0; i < view.rows * view.cols; ++i)
      write_pod<double>(out, static_cast<double>(view.data[i]));
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + " is not a checkpoint file");
  Checkpoint ckpt;
  ckpt.meta.format_version = read_pod<std::uint32_t>(in);
  if (ckpt.meta.format_version != 1)
    throw FormatError("unsupported checkpoint version " +
                      std::to_string(ckpt.meta.format_version));
  ckpt.meta.config_hash = read_pod<std::uint64_t>(in);
  ckpt.config.num_layers = read_pod<std::int32_t>(in);
  ckpt.config.num_heads = read_pod<std::int32_t>(in);
  ckpt.config.d_model = read_pod<std::int32_t>(in);
  ckpt.config.d_ff = read_pod<std::int32_t>(in);
  ckpt.config.max_positions = read_pod<std::int32_t>(in);
  ckpt.config.vocab_size = read_pod<std::int32_t>(in);
  ckpt.config.dropout_rate = read_pod<double>(in);
  try {
    ckpt.config.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint carries an invalid config: ") + e.what());
  }
  if (ckpt.meta.config_hash != ckpt.config.hash())
    throw FormatError("checkpoint config hash mismatch (corrupt header)");
  ckpt.meta.step = read_pod<std::int64_t>(in);
  ckpt.meta.dev_bleu = read_pod<double>(in);

  ckpt.params = ModelParams::zeros(ckpt.config);
  auto views = tensor_views(ckpt.params);
  const auto count = read_pod<std::uint32_t>(in);
  if (count != views.size())
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, expected " +
                      std::to_string(views.size()));
  for (TensorView& view : views) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("truncated checkpoint");
    if (name != view.name)
      throw FormatError("checkpoint tensor '" + name + "' found where '" + view.name +
                        "' was expected");
    const auto rows = read_pod<std::int64_t>(in);
    const auto cols = read_pod<std::int64_t>(in);
    if (rows != view.rows || cols != view.cols)
      throw FormatError("checkpoint tensor '" + name + "' has shape " +
                        std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                        std::to_string(view.rows) + "x" + std::to_string(view.cols));
    for (Index i = 0; i < view.rows * view.cols; ++i)
      view.data[i] = static_cast<Scalar>(read_pod<double>(in));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after the last checkpoint tensor");
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const TransformerConfig& expected) {
  Checkpoint ckpt = load_checkpoint(path);
  const auto want = tensor_specs(expected);
  const auto have = tensor_specs(ckpt.config);
  for (std::size_t i = 0; i < want.size() && i < have.size(); ++i) {
    if (want[i].name != have[i].name || want[i].rows != have[i].rows ||
        want[i].cols != have[i].cols)
      throw FormatError("checkpoint tensor '" + have[i].name + "' has shape " +
                        std::to_string(have[i].rows) + "x" + std::to_string(have[i].cols) +
                        ", expected '" + want[i].name + "' " + std::to_string(want[i].rows) +
                        "x" + std::to_string(want[i].cols));
  }
  if (want.size() != have.size())
    throw FormatError("checkpoint layer count differs from the expected config");
  if (expected.hash() != ckpt.config.hash())
    throw FormatError("checkpoint config differs from the expected config");
  return ckpt;
}

TrainResult train(const ParallelCorpus& train_corpus, const ParallelCorpus& dev_corpus,
                  const Vocab& vocab, TransformerConfig model_config,
                  const TrainConfig& train_config,
                  const std::filesystem::path& output_dir, std::ostream* log) {
  train_config.validate();
  if (train_corpus.size() == 0) throw ArgumentError("train: training corpus is empty");
  if (dev_corpus.size() == 0) throw ArgumentError("train: dev corpus is empty");
  model_config.dropout_rate = train_config.dropout;
  if (model_config.vocab_size == 0) model_config.vocab_size = vocab.size();
  if (model_config.vocab_size != vocab.size())
    throw ArgumentError("train: model vocab_size " +
                        std::to_string(model_config.vocab_size) +
                        " does not match the vocabulary size " +
                        std::to_string(vocab.size()));
  model_config.validate();
  std::filesystem::create_directories(output_dir);

  ModelParams params = ModelParams::init(model_config, mix_seed(train_config.seed, 0));
  auto param_views = tensor_views(params);
  OptimizerState opt = OptimizerState::init(param_views);
  const LrSchedule schedule{train_config.base_rate, train_config.warmup_steps};

  std::vector<CheckpointMeta> checkpoints;
  std::vector<std::filesystem::path> paths;
  TrainResult result;

  auto run_validation = [&](long long step) {
    const double bleu = validate(params, model_config, vocab, dev_corpus,
                                 train_config.beam_size, train_config.num_threads);
    CheckpointMeta meta;
    meta.step = step;
    meta.dev_bleu = bleu;
    meta.config_hash = model_config.hash();
    const auto path = output_dir / ("checkpoint-" + std::to_string(step) + ".bin");
    save_checkpoint(params, model_config, meta, path);
    checkpoints.push_back(meta);
    paths.push_back(path);
    return bleu;
  };

  if (train_config.max_steps == 0) {
    run_validation(0);
  } else {
    long long step = 0;
    long long epoch = 0;
    try {
      while (step < train_config.max_steps) {
        const auto batches = make_batches(train_corpus, vocab, train_config.max_tokens,
                                          mix_seed(train_config.seed, 1 + epoch));
        ++epoch;
        for (const Batch& batch : batches) {
          if (step >= train_config.max_steps) break;
          ++step;
          const Scalar lr = lr_at(step, schedule);
          ForwardBackwardResult fb =
              forward_backward(batch, params, model_config, train_config.label_smoothing,
                               mix_seed(train_config.seed, 0x1000000 + step));
          auto grad_views = tensor_views(fb.grads);
          if (train_config.clip_norm > 0)
            clip_grad_norm(grad_views, train_config.clip_norm);
          adam_step(param_views, grad_views, opt, lr, train_config.beta1,
                    train_config.beta2, train_config.adam_eps,
                    train_config.weight_decay);
          const bool validated = step % train_config.validate_every == 0 ||
                                 step == train_config.max_steps;
          double bleu = -1;
          if (validated) bleu = run_validation(step);
          if (log) {
            char row[128];
            if (validated)
              std::snprintf(row, sizeof(row), "%lld\t%.6f\t%.8g\t%.2f\n", step,
                            static_cast<double>(fb.loss), static_cast<double>(lr), bleu);
            else
              std::snprintf(row, sizeof(row), "%lld\t%.6f\t%.8g\t-\n", step,
                            static_cast<double>(fb.loss), static_cast<double>(lr));
            *log << row;
          }
        }
      }
    } catch (const NumericError& e) {
      result.abort_reason = e.what();
      if (log) *log << "# aborted: " << e.what() << "\n";
    }
  }

  if (!checkpoints.empty()) {
    const std::size_t best = select_best(checkpoints);
    result.best = checkpoints[best];
    result.best_path = paths[best];
    result.best_params = load_checkpoint(paths[best]).params;
  } else {
    result.best_params = std::move(params);
  }
  return result;
}

}  // namespace simtrans
