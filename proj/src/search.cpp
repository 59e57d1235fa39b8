#include "kgpf/search.hpp"

#include <stdexcept>

namespace kgpf {

std::string stop_reason_name(StopReason r) {
  return r == StopReason::kMaxStep ? "max_step" : "self_loop";
}

SearchState init_state(Tape& tape, const PolicyParameters& policy,
                       const EmbeddingTable& table, const Query& query,
                       int max_steps, int max_loops) {
  if (max_steps < 1 || max_loops < 1)
    throw std::runtime_error("init_state: S and N must be >= 1");
  SearchState state;
  state.query = query;
  state.current = query.head;
  state.trajectory.push_back({kStart, query.head});
  state.encoder = encode_init(tape, policy, table, query);
  return state;
}

bool should_stop(const SearchState& state, int max_steps, int max_loops) {
  return state.step >= max_steps || state.loops >= max_loops;
}

void advance(Tape& tape, const PolicyParameters& policy,
             const EmbeddingTable& table, SearchState& state, Action action,
             int max_steps, int max_loops) {
  if (state.stopped) throw std::runtime_error("advance: state already stopped");
  state.trajectory.push_back(action);
  state.current = action.second;
  state.step += 1;
  if (action.first == kSelfLoop)
    state.loops += 1;
  else
    state.loops = 0;  // "consecutive" reading: any real move resets the count
  encode_push(tape, policy, table, state.encoder, action);
  state.stopped = should_stop(state, max_steps, max_loops);
}

namespace {

RolloutRecord run_episode(const KnowledgeGraph& kg,
                          const PolicyParameters& policy,
                          const EmbeddingTable& table, Tape& tape,
                          const Query& query, const RolloutConfig& cfg,
                          RolloutMode mode, Rng* sample_rng, Rng* dropout_rng,
                          const RolloutRecord* replayed) {
  SearchState state =
      init_state(tape, policy, table, query, cfg.max_steps, cfg.max_loops);
  RolloutRecord rec;
  NodeId sum = -1;

  while (!state.stopped) {
    const std::vector<Action> actions =
        action_set(kg, state.current, cfg.action_cap);
    const std::size_t step_index = rec.chosen.size();
    const std::vector<std::uint8_t>* mask_override =
        replayed ? &replayed->masks[step_index] : nullptr;
    PolicyStep step = policy_step(tape, policy, table, query, state.encoder,
                                  actions, state.current, cfg.step,
                                  dropout_rng, mask_override);

    std::size_t pick;
    if (replayed) {
      pick = static_cast<std::size_t>(replayed->chosen[step_index]);
      if (pick >= actions.size())
        throw std::runtime_error("replay: recorded action out of range");
    } else if (mode == RolloutMode::kSample) {
      pick = sample_categorical(*sample_rng, step.dist.probs);
    } else {
      pick = 0;
      for (std::size_t i = 1; i < step.dist.probs.size(); ++i) {
        if (step.dist.probs.data[i] > step.dist.probs.data[pick]) pick = i;
      }
    }

    NodeId lp = tape.pick(step.dist.log_probs, pick);
    sum = sum < 0 ? lp : tape.add(sum, lp);
    rec.chosen.push_back(static_cast<std::int32_t>(pick));
    rec.masks.push_back(std::move(step.mask));
    rec.step_log_probs.push_back(tape.value(lp).data[0]);

    advance(tape, policy, table, state, actions[pick], cfg.max_steps,
            cfg.max_loops);
  }

  rec.final_entity = state.current;
  rec.trajectory = state.trajectory;
  rec.stopped_by = state.loops >= cfg.max_loops ? StopReason::kSelfLoop
                                                : StopReason::kMaxStep;
  rec.log_prob_sum = sum;
  return rec;
}

}  // namespace

RolloutRecord rollout(const KnowledgeGraph& kg, const PolicyParameters& policy,
                      const EmbeddingTable& table, Tape& tape, const Query& query,
                      const RolloutConfig& cfg, RolloutMode mode,
                      Rng* sample_rng, Rng* dropout_rng) {
  if (mode == RolloutMode::kSample && !sample_rng)
    throw std::runtime_error("rollout: sampling needs an rng");
  return run_episode(kg, policy, table, tape, query, cfg, mode, sample_rng,
                     dropout_rng, nullptr);
}

RolloutRecord replay(const KnowledgeGraph& kg, const PolicyParameters& policy,
                     const EmbeddingTable& table, Tape& tape, const Query& query,
                     const RolloutConfig& cfg, const RolloutRecord& record) {
  RolloutRecord rec = run_episode(kg, policy, table, tape, query, cfg,
                                  RolloutMode::kSample, nullptr, nullptr,
                                  &record);
  rec.reward = record.reward;
  return rec;
}

}  // namespace kgpf
