#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kgpf/eval.hpp"
#include "kgpf/search.hpp"

namespace kgpf {

struct TrainConfig {
  int max_steps = 3;    // S
  int max_loops = 2;    // N
  std::size_t dim = 100;
  std::size_t action_cap = 200;
  std::size_t num_rollouts = 20;  // sampled rollouts per query
  std::size_t batch_size = 128;   // queries per parameter update
  double learning_rate = 1e-3;
  double grad_clip_norm = 5.0;
  std::size_t epochs = 400;
  std::size_t patience = 30;   // epochs without validation MRR improvement
  std::string aggregator = "scalar_product";
  std::string action_dropout = "scored";  // off|scored|uniform
  bool dad_standardize = true;
  bool use_attention = true;
  bool use_global = true;
  bool baseline = false;  // subtract the batch-mean reward
  std::uint64_t seed = 13;
  int threads = 0;              // 0: hardware concurrency
  std::size_t valid_beam = 32;  // beam width for per-epoch validation
  std::size_t valid_every = 1;  // epochs between validations

  RolloutConfig rollout_config() const;
};

// Terminal reward: 1 iff the search ended on the labeled tail.
double reward(EntityId found, EntityId labeled);

struct BatchStats {
  double mean_reward = 0.0;
  double mean_length = 0.0;
  std::size_t rollouts = 0;
  bool clipped = false;
};

// REINFORCE gradients of -sum_k (R_k - b) * sum_s log pi, averaged over
// rollouts, by replaying each record against the current parameters.
// b is the batch-mean reward when `baseline` is set, else 0.
std::vector<Tensor> reinforce_gradients(
    const KnowledgeGraph& kg, const PolicyParameters& policy,
    const EmbeddingTable& table, const RolloutConfig& cfg,
    const std::vector<std::pair<Query, RolloutRecord>>& rollouts, bool baseline,
    BatchStats* stats = nullptr);

// The REINFORCE surrogate loss the gradients differentiate, as a plain
// function of the parameters (used by the finite-difference gate).
double reinforce_loss(const KnowledgeGraph& kg, const PolicyParameters& policy,
                      const EmbeddingTable& table, const RolloutConfig& cfg,
                      const std::vector<std::pair<Query, RolloutRecord>>& rollouts,
                      bool baseline);

struct EpochLog {
  std::size_t epoch = 0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
  double valid_mrr = -1.0;  // -1: not evaluated this epoch
  std::int64_t wall_ms = 0;
};

struct Checkpoint {
  PolicyParameters policy;
  TrainConfig config;
  std::string embedding_path;
  std::string embedding_hash;
  std::size_t epoch = 0;
  std::vector<double> valid_mrr_history;
};

// Versioned binary checkpoint, magic "GMH1": parameter blob + JSON trailer.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path,
                           bool verify_embedding_hash = true);

struct TrainResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  bool aborted_on_nan = false;
};

// Algorithm: per epoch, batches of queries; per query `num_rollouts` sampled
// rollouts with action dropout; one Adam step per batch (gradients clipped at
// `grad_clip_norm`); validation MRR via greedy beam after each epoch; keeps
// the best checkpoint; deterministic given config + seed (thread-count
// invariant). `on_epoch` (optional) observes each epoch log line.
TrainResult train(const TrainConfig& config, const KnowledgeGraph& kg,
                  const EmbeddingTable& table,
                  const std::vector<Triple>& train_queries,
                  const std::vector<Triple>& valid_queries,
                  const KnownAnswers& known,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// Adam over the policy parameter set; gradients are averaged upstream.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, const ParamSet& params);
  void step(ParamSet& params, const std::vector<Tensor>& grads);

 private:
  double lr_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

// Global-norm gradient clipping; returns true when clipping triggered.
bool clip_gradients(std::vector<Tensor>& grads, double max_norm);

}  // namespace kgpf
