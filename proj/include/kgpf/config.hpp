#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgpf/embedding.hpp"
#include "kgpf/synth.hpp"
#include "kgpf/trainer.hpp"

namespace kgpf {

// Union of every stage's settings. Defaults live here; a config file
// overrides defaults, flag overrides override the file, and KGPF_SEED
// overrides the seed last. Unknown keys are rejected by name.
struct RunConfig {
  std::uint64_t seed = 13;
  int threads = 0;
  std::string data;  // dataset directory (no default)
  std::string out;   // output directory

  std::size_t dim = 100;
  int max_steps = 3;  // S; the paper's short-dataset setting
  int max_loops = 2;  // N
  std::size_t action_cap = 200;
  std::string aggregator = "scalar_product";

  struct Pretrain {
    std::string model = "complex";
    std::size_t negatives = 10;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double l2 = 0.0;
    std::size_t epochs = 500;
    std::size_t patience = 20;
  } pretrain;

  struct Train {
    std::string embeddings;      // pretrained table file (required)
    std::string embedding_hash;  // optional expected content hash
    std::size_t num_rollouts = 20;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double grad_clip_norm = 5.0;
    std::size_t epochs = 400;
    std::size_t patience = 30;
    bool baseline = false;
    std::string action_dropout = "scored";
    bool dad_standardize = true;
    bool use_attention = true;
    bool use_global = true;
    std::size_t valid_beam = 32;
    std::size_t valid_every = 1;
  } train;

  struct Eval {
    std::string checkpoint;
    std::size_t beam = 128;
    bool emit_paths = false;
  } eval;

  SynthConfig synth;

  TrainConfig train_config() const;
  PretrainConfig pretrain_config() const;
  std::string to_json() const;  // fully resolved echo
};

// file_path may be empty (defaults only); overrides_json may be empty.
// Environment variable KGPF_SEED, when set, wins over both.
RunConfig parse_config(const std::string& file_path,
                       const std::string& overrides_json);

}  // namespace kgpf
