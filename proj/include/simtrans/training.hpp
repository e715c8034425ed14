#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "simtrans/data.hpp"
#include "simtrans/decoding.hpp"
#include "simtrans/model.hpp"

namespace simtrans {

struct TrainConfig {
  long long max_steps = 0;
  long long validate_every = 200;
  Scalar beta1 = 0.90;
  Scalar beta2 = 0.98;
  Scalar adam_eps = 1e-8;
  Scalar base_rate = 5e-4;
  long long warmup_steps = 4000;
  Scalar weight_decay = 1e-4;
  Scalar label_smoothing = 0.1;
  Scalar dropout = 0.3;
  Scalar clip_norm = 0;  // 0 disables clipping
  long long max_tokens = 4096;
  std::uint64_t seed = 1;
  int beam_size = 5;  // validation decoding
  int num_threads = 1;

  void validate() const;
};

struct CheckpointMeta {
  long long step = 0;
  double dev_bleu = 0;
  std::uint64_t config_hash = 0;
  std::uint32_t format_version = 1;
};

struct TrainResult {
  CheckpointMeta best;
  std::filesystem::path best_path;  // empty when no checkpoint was written
  ModelParams best_params;
  std::string abort_reason;  // non-empty when a numeric failure stopped the run
};

// Beam-decodes every dev source, reverts BPE on outputs and references, and
// returns corpus BLEU of the whitespace tokens.
double validate(const ModelParams& params, const TransformerConfig& config,
                const Vocab& vocab, const ParallelCorpus& dev, int beam_size,
                int num_threads = 1);

// Index of the checkpoint with maximum dev BLEU; earliest wins ties.
std::size_t select_best(const std::vector<CheckpointMeta>& checkpoints);

// Runs forward_backward + clip + adam with the inverse-sqrt schedule, scoring
// dev BLEU and writing a checkpoint every validate_every steps and at the
// final step. Deterministic given the seed. A log row
// "step<TAB>loss<TAB>lr<TAB>devBLEU" is emitted per step when log is given
// (devBLEU is "-" on steps without validation). On a non-finite loss or
// gradient the run aborts, keeping the checkpoints written so far.
TrainResult train(const ParallelCorpus& train_corpus, const ParallelCorpus& dev_corpus,
                  const Vocab& vocab, TransformerConfig model_config,
                  const TrainConfig& train_config,
                  const std::filesystem::path& output_dir, std::ostream* log = nullptr);

void save_checkpoint(const ModelParams& params, const TransformerConfig& config,
                     const CheckpointMeta& meta, const std::filesystem::path& path);

struct Checkpoint {
  ModelParams params;
  TransformerConfig config;
  CheckpointMeta meta;
};

// The file is self-describing; the expected-config overload additionally
// checks every tensor shape and names the first mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const TransformerConfig& expected);

}  // namespace simtrans
