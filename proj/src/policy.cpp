#include "kgpf/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace kgpf {

Aggregator aggregator_from(const std::string& name) {
  if (name == "sum") return Aggregator::kSum;
  if (name == "scalar_product") return Aggregator::kScalarProduct;
  throw std::runtime_error("unknown aggregator '" + name +
                           "' (expected sum|scalar_product)");
}

std::string aggregator_name(Aggregator a) {
  return a == Aggregator::kSum ? "sum" : "scalar_product";
}

DropoutMode dropout_mode_from(const std::string& name) {
  if (name == "off") return DropoutMode::kOff;
  if (name == "scored") return DropoutMode::kScored;
  if (name == "uniform") return DropoutMode::kUniform;
  throw std::runtime_error("unknown action dropout mode '" + name +
                           "' (expected off|scored|uniform)");
}

std::string dropout_mode_name(DropoutMode m) {
  switch (m) {
    case DropoutMode::kOff: return "off";
    case DropoutMode::kScored: return "scored";
    case DropoutMode::kUniform: return "uniform";
  }
  return "off";
}

PolicyParameters PolicyParameters::init(std::size_t dim, Rng& rng) {
  PolicyParameters p;
  p.dim = dim;
  const std::size_t h = 2 * dim;
  p.lstm = make_lstm(p.params, "lstm", /*input_dim=*/h, /*hidden_dim=*/h, rng);
  p.w1 = p.params.add("w1", init_uniform(h, h, rng));
  p.w2 = p.params.add("w2", init_uniform(h, h, rng));
  return p;
}

bool PolicyParameters::all_finite() const {
  for (std::size_t i = 0; i < params.count(); ++i) {
    if (!params.value(static_cast<int>(i)).all_finite()) return false;
  }
  return true;
}

NodeId action_input(Tape& tape, const EmbeddingTable& table, RelationId r,
                    EntityId e) {
  Tensor in = Tensor::vector(2 * table.dim);
  const double* rv = table.relation_row(r);
  const double* ev = table.entity_row(e);
  std::copy(rv, rv + table.dim, in.data.begin());
  std::copy(ev, ev + table.dim, in.data.begin() + table.dim);
  return tape.constant(std::move(in));
}

EncoderState encode_init(Tape& tape, const PolicyParameters& policy,
                         const EmbeddingTable& table, const Query& query) {
  EncoderState enc;
  Tensor q = Tensor::vector(2 * table.dim);
  const double* hv = table.entity_row(query.head);
  const double* rv = table.relation_row(query.relation);
  std::copy(hv, hv + table.dim, q.data.begin());
  std::copy(rv, rv + table.dim, q.data.begin() + table.dim);
  enc.query_node = tape.constant(std::move(q));

  const std::size_t h = policy.hidden_dim();
  NodeId h0 = tape.constant(Tensor::vector(h));
  NodeId c0 = tape.constant(Tensor::vector(h));
  NodeId x = action_input(tape, table, kStart, query.head);
  NodeId c_new = -1;
  NodeId h_new = lstm_step(tape, policy.params, policy.lstm, x, h0, c0, &c_new);
  enc.hiddens.push_back(h_new);
  enc.carry_c = c_new;
  return enc;
}

void encode_push(Tape& tape, const PolicyParameters& policy,
                 const EmbeddingTable& table, EncoderState& enc, Action action) {
  NodeId x = action_input(tape, table, action.first, action.second);
  NodeId c_new = -1;
  NodeId h_new = lstm_step(tape, policy.params, policy.lstm, x,
                           enc.hiddens.back(), enc.carry_c, &c_new);
  enc.hiddens.push_back(h_new);
  enc.carry_c = c_new;
}

std::vector<NodeId> encode_history(Tape& tape, const PolicyParameters& policy,
                                   const EmbeddingTable& table,
                                   std::span<const Action> trajectory) {
  if (trajectory.empty()) throw std::runtime_error("encode_history: empty trajectory");
  if (trajectory[0].first != kStart)
    throw std::runtime_error("encode_history: trajectory must start with START");
  EncoderState enc =
      encode_init(tape, policy, table, {trajectory[0].second, kStart});
  // encode_init consumed (START, head); query embedding is unused here.
  for (std::size_t i = 1; i < trajectory.size(); ++i)
    encode_push(tape, policy, table, enc, trajectory[i]);
  return enc.hiddens;
}

NodeId attention_weights(Tape& tape, NodeId query,
                         std::span<const NodeId> hiddens) {
  if (hiddens.empty()) throw std::runtime_error("attention_weights: no hiddens");
  NodeId scores = tape.dot(query, hiddens[0]);
  for (std::size_t m = 1; m < hiddens.size(); ++m)
    scores = tape.concat(scores, tape.dot(query, hiddens[m]));
  return tape.softmax(scores);
}

NodeId attention_context(Tape& tape, NodeId weights,
                         std::span<const NodeId> hiddens) {
  NodeId context = tape.scale(hiddens[0], tape.pick(weights, 0));
  for (std::size_t m = 1; m < hiddens.size(); ++m)
    context = tape.add(context, tape.scale(hiddens[m], tape.pick(weights, m)));
  return context;
}

NodeId local_scores(Tape& tape, const PolicyParameters& policy,
                    const EmbeddingTable& table, NodeId context,
                    const std::vector<Action>& actions) {
  if (actions.empty()) throw std::runtime_error("local_scores: empty action set");
  NodeId u = tape.matvec(tape.param(policy.params, policy.w2), context);
  NodeId d = tape.softmax(u);
  NodeId v = tape.matvec(tape.param(policy.params, policy.w1), d);
  std::vector<std::pair<std::int32_t, std::int32_t>> rows;
  rows.reserve(actions.size());
  for (const Action& a : actions) rows.emplace_back(a.first, a.second);
  return tape.rows_matvec(v, table.relations, table.entities, std::move(rows));
}

NodeId aggregate(Tape& tape, NodeId local, NodeId global, Aggregator mode) {
  if (tape.value(local).size() != tape.value(global).size())
    throw std::runtime_error("aggregate: length mismatch");
  return mode == Aggregator::kSum ? tape.add(local, global)
                                  : tape.mul(local, global);
}

std::vector<std::uint8_t> dropout_mask(Rng& rng, const Tensor& gk,
                                       DropoutMode mode, bool standardize,
                                       bool training) {
  const std::size_t n = gk.size();
  std::vector<std::uint8_t> mask(n, 1);
  if (!training || mode == DropoutMode::kOff || n <= 1) return mask;

  Tensor keep_prob = Tensor::vector(n, 0.5);
  if (mode == DropoutMode::kScored) {
    Tensor z = gk;
    if (standardize) {
      double mean = 0.0;
      for (double v : z.data) mean += v;
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (double v : z.data) var += (v - mean) * (v - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      const double denom = sd < 1e-6 ? 1e-6 : sd;
      for (double& v : z.data) v = (v - mean) / denom;
    }
    keep_prob = sigmoid(z);
  }
  mask = sample_bernoulli(rng, keep_prob);

  mask[0] = 1;  // the self-loop is never dropped
  bool any_edge = false;
  for (std::size_t i = 1; i < n; ++i) any_edge |= mask[i] != 0;
  if (!any_edge) {
    // Keep the strongest-scoring edge so the agent is never forced to loop.
    std::size_t best = 1;
    for (std::size_t i = 2; i < n; ++i) {
      if (gk.data[i] > gk.data[best]) best = i;
    }
    mask[best] = 1;
  }
  return mask;
}

ActionDistribution action_distribution(Tape& tape, NodeId fused,
                                       const std::vector<std::uint8_t>& mask) {
  ActionDistribution dist;
  dist.log_probs = tape.masked_log_softmax(fused, mask);
  const Tensor& logp = tape.value(dist.log_probs);
  dist.probs = Tensor::vector(logp.size());
  for (std::size_t i = 0; i < logp.size(); ++i)
    dist.probs.data[i] = mask[i] ? std::exp(logp.data[i]) : 0.0;
  return dist;
}

PolicyStep policy_step(Tape& tape, const PolicyParameters& policy,
                       const EmbeddingTable& table, const Query& query,
                       const EncoderState& enc,
                       const std::vector<Action>& actions, EntityId current,
                       const StepConfig& cfg, Rng* dropout_rng,
                       const std::vector<std::uint8_t>* replay_mask) {
  PolicyStep step;

  NodeId context;
  if (cfg.use_attention) {
    NodeId alpha = attention_weights(tape, enc.query_node, enc.hiddens);
    context = attention_context(tape, alpha, enc.hiddens);
  } else {
    context = enc.hiddens.back();
  }
  NodeId lk = local_scores(tape, policy, table, context, actions);

  NodeId fused = lk;
  if (cfg.use_global) {
    step.global =
        score_candidates(table, query.head, query.relation, actions, current);
    fused = aggregate(tape, lk, tape.constant(step.global), cfg.aggregator);
  }

  if (replay_mask) {
    step.mask = *replay_mask;
  } else {
    if (cfg.dropout == DropoutMode::kScored && !cfg.use_global)
      throw std::runtime_error("scored action dropout needs global scores");
    const Tensor& gk_for_mask =
        cfg.use_global ? step.global : tape.value(lk);
    if (cfg.training && cfg.dropout != DropoutMode::kOff && !dropout_rng)
      throw std::runtime_error("policy_step: dropout requires an rng");
    static Rng null_rng(0);
    step.mask = dropout_mask(dropout_rng ? *dropout_rng : null_rng, gk_for_mask,
                             cfg.dropout, cfg.dad_standardize, cfg.training);
  }

  step.dist = action_distribution(tape, fused, step.mask);
  return step;
}

}  // namespace kgpf
