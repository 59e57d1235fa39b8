#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgpf/policy.hpp"

namespace kgpf {

enum class StopReason { kMaxStep, kSelfLoop };

// Search-wide knobs shared by training rollouts and beam inference.
struct RolloutConfig {
  int max_steps = 3;        // S
  int max_loops = 2;        // N, consecutive self-loops that end the search
  std::size_t action_cap = 200;
  StepConfig step;
};

// One query's traversal state. The LSTM carry and hidden sequence live on
// the tape the state was initialized with.
struct SearchState {
  Query query;
  EntityId current = -1;
  int step = 0;
  int loops = 0;  // consecutive self-loop count
  bool stopped = false;
  std::vector<Action> trajectory;  // starts with (START, head)
  EncoderState encoder;
};

SearchState init_state(Tape& tape, const PolicyParameters& policy,
                       const EmbeddingTable& table, const Query& query, int max_steps,
                       int max_loops);

// Applies one chosen action: extends the trajectory, advances the encoder,
// updates the loop counter (reset on a non-self-loop action) and the stopped
// flag. Advancing a stopped state is an error.
void advance(Tape& tape, const PolicyParameters& policy,
             const EmbeddingTable& table, SearchState& state, Action action,
             int max_steps, int max_loops);

// Dual judgment: stop at s >= S or n >= N.
bool should_stop(const SearchState& state, int max_steps, int max_loops);

enum class RolloutMode { kSample, kGreedy };

struct RolloutRecord {
  EntityId final_entity = -1;
  double reward = 0.0;
  StopReason stopped_by = StopReason::kMaxStep;
  std::vector<Action> trajectory;            // (START, head), (r1, e1), ...
  std::vector<std::int32_t> chosen;          // per-step action index
  std::vector<std::vector<std::uint8_t>> masks;  // per-step dropout mask
  std::vector<double> step_log_probs;
  NodeId log_prob_sum = -1;  // on the tape passed to rollout/replay
};

// Runs one episode. Sampling draws from the masked action distribution;
// greedy takes the arg max (lowest index wins ties). Action selection and
// dropout draw from separate streams. The query's labeled tail is never
// visible here; rewards are assigned by the trainer.
RolloutRecord rollout(const KnowledgeGraph& kg, const PolicyParameters& policy,
                      const EmbeddingTable& table, Tape& tape, const Query& query,
                      const RolloutConfig& cfg, RolloutMode mode,
                      Rng* sample_rng, Rng* dropout_rng = nullptr);

// Rebuilds the episode defined by `record` (same actions, same masks) on a
// fresh tape, so the log-probability sum is a deterministic function of the
// policy parameters. Returns the record with log_prob_sum on `tape`.
RolloutRecord replay(const KnowledgeGraph& kg, const PolicyParameters& policy,
                     const EmbeddingTable& table, Tape& tape, const Query& query,
                     const RolloutConfig& cfg, const RolloutRecord& record);

std::string stop_reason_name(StopReason r);

}  // namespace kgpf
