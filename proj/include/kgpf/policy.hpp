#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kgpf/embedding.hpp"
#include "kgpf/kg.hpp"
#include "kgpf/tape.hpp"

namespace kgpf {

struct Query {
  EntityId head;
  RelationId relation;
};

enum class Aggregator { kSum, kScalarProduct };
enum class DropoutMode { kOff, kScored, kUniform };

Aggregator aggregator_from(const std::string& name);
std::string aggregator_name(Aggregator a);
DropoutMode dropout_mode_from(const std::string& name);
std::string dropout_mode_name(DropoutMode m);

// Everything REINFORCE updates: the history LSTM plus the two fusion
// weight matrices. Embeddings stay frozen and live in EmbeddingTable.
struct PolicyParameters {
  ParamSet params;
  LstmSpec lstm;
  int w1 = -1;  // 2dim x 2dim
  int w2 = -1;  // 2dim x 2dim
  std::size_t dim = 0;

  std::size_t hidden_dim() const { return 2 * dim; }
  static PolicyParameters init(std::size_t dim, Rng& rng);
  bool all_finite() const;
};

// Per-step policy behavior knobs; a strict subset of the training config.
struct StepConfig {
  Aggregator aggregator = Aggregator::kScalarProduct;
  DropoutMode dropout = DropoutMode::kOff;  // applied only when training=true
  bool dad_standardize = true;
  bool use_attention = true;   // off: context = current hidden state only
  bool use_global = true;      // off: fused scores are the local scores
  bool training = false;
};

// Running trajectory encoder: hidden nodes h_0..h_s and the LSTM carry.
struct EncoderState {
  std::vector<NodeId> hiddens;
  NodeId carry_c = -1;
  NodeId query_node = -1;  // [head embedding ; relation embedding]
};

// Constant [relation ; entity] embedding input for one trajectory element.
NodeId action_input(Tape& tape, const EmbeddingTable& table, RelationId r,
                    EntityId e);

// Starts the encoder on (START, head) with zero initial carry.
EncoderState encode_init(Tape& tape, const PolicyParameters& policy,
                         const EmbeddingTable& table, const Query& query);
// Feeds one chosen action through the LSTM.
void encode_push(Tape& tape, const PolicyParameters& policy,
                 const EmbeddingTable& table, EncoderState& enc, Action action);

// Hidden sequence for a whole trajectory (must start with (START, head)).
std::vector<NodeId> encode_history(Tape& tape, const PolicyParameters& policy,
                                   const EmbeddingTable& table,
                                   std::span<const Action> trajectory);

// Softmax over query-hidden dot products; length = |hiddens|.
NodeId attention_weights(Tape& tape, NodeId query,
                         std::span<const NodeId> hiddens);
// Attention-weighted sum of the hidden states.
NodeId attention_context(Tape& tape, NodeId weights,
                         std::span<const NodeId> hiddens);

// History-derived score per action: A . W1 softmax(W2 c) with A the
// [relation ; entity] embedding rows of the action set.
NodeId local_scores(Tape& tape, const PolicyParameters& policy,
                    const EmbeddingTable& table, NodeId context,
                    const std::vector<Action>& actions);

// Elementwise lk + gk or lk * gk.
NodeId aggregate(Tape& tape, NodeId local, NodeId global, Aggregator mode);

// Training-time action mask. Scored mode keeps action i with probability
// sigmoid(gk_i) (gk standardized first when configured); uniform mode keeps
// with probability 0.5. The self-loop (index 0) is always kept and at least
// one non-self-loop entry survives when any exists. Evaluation: all ones.
std::vector<std::uint8_t> dropout_mask(Rng& rng, const Tensor& gk,
                                       DropoutMode mode, bool standardize,
                                       bool training);

struct ActionDistribution {
  NodeId log_probs = -1;  // -inf at masked entries
  Tensor probs;           // exactly 0 at masked entries
};

// Masked softmax over fused scores; log-probabilities stay on the tape.
ActionDistribution action_distribution(Tape& tape, NodeId fused,
                                       const std::vector<std::uint8_t>& mask);

// One full policy step at `current` with the trajectory encoded in `enc`.
// When `replay_mask` is set it is used verbatim instead of sampling a new
// dropout mask (rng may then be null).
struct PolicyStep {
  ActionDistribution dist;
  Tensor global;  // raw gk (empty when use_global is off)
  std::vector<std::uint8_t> mask;
};
PolicyStep policy_step(Tape& tape, const PolicyParameters& policy,
                       const EmbeddingTable& table, const Query& query,
                       const EncoderState& enc,
                       const std::vector<Action>& actions, EntityId current,
                       const StepConfig& cfg, Rng* dropout_rng,
                       const std::vector<std::uint8_t>* replay_mask);

}  // namespace kgpf
