#include "kgpf/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "kgpf/serialize.hpp"

namespace kgpf {

RolloutConfig TrainConfig::rollout_config() const {
  RolloutConfig rc;
  rc.max_steps = max_steps;
  rc.max_loops = max_loops;
  rc.action_cap = action_cap;
  rc.step.aggregator = aggregator_from(aggregator);
  rc.step.dropout = dropout_mode_from(action_dropout);
  rc.step.dad_standardize = dad_standardize;
  rc.step.use_attention = use_attention;
  rc.step.use_global = use_global;
  rc.step.training = true;
  return rc;
}

double reward(EntityId found, EntityId labeled) {
  return found == labeled ? 1.0 : 0.0;
}

std::vector<Tensor> reinforce_gradients(
    const KnowledgeGraph& kg, const PolicyParameters& policy,
    const EmbeddingTable& table, const RolloutConfig& cfg,
    const std::vector<std::pair<Query, RolloutRecord>>& rollouts, bool baseline,
    BatchStats* stats) {
  std::vector<Tensor> grads = zero_grads(policy.params);
  if (rollouts.empty()) return grads;

  double mean_reward = 0.0, mean_length = 0.0;
  for (const auto& [q, rec] : rollouts) {
    mean_reward += rec.reward;
    mean_length += static_cast<double>(rec.chosen.size());
  }
  const double n = static_cast<double>(rollouts.size());
  mean_reward /= n;
  mean_length /= n;
  const double b = baseline ? mean_reward : 0.0;

  for (const auto& [q, rec] : rollouts) {
    const double coeff = rec.reward - b;
    if (coeff == 0.0) continue;
    Tape tape;
    RolloutRecord replayed = replay(kg, policy, table, tape, q, cfg, rec);
    tape.backward_into(replayed.log_prob_sum, policy.params, -coeff / n, grads);
  }

  if (stats) {
    stats->mean_reward = mean_reward;
    stats->mean_length = mean_length;
    stats->rollouts = rollouts.size();
  }
  return grads;
}

double reinforce_loss(const KnowledgeGraph& kg, const PolicyParameters& policy,
                      const EmbeddingTable& table, const RolloutConfig& cfg,
                      const std::vector<std::pair<Query, RolloutRecord>>& rollouts,
                      bool baseline) {
  double b = 0.0;
  if (baseline) {
    for (const auto& [q, rec] : rollouts) b += rec.reward;
    b /= static_cast<double>(rollouts.size());
  }
  double loss = 0.0;
  for (const auto& [q, rec] : rollouts) {
    const double coeff = rec.reward - b;
    if (coeff == 0.0) continue;
    Tape tape;
    RolloutRecord replayed = replay(kg, policy, table, tape, q, cfg, rec);
    loss -= coeff * tape.value(replayed.log_prob_sum).data[0];
  }
  return loss / static_cast<double>(rollouts.size());
}

AdamOptimizer::AdamOptimizer(double lr, const ParamSet& params) : lr_(lr) {
  m_ = zero_grads(params);
  v_ = zero_grads(params);
}

void AdamOptimizer::step(ParamSet& params, const std::vector<Tensor>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(0.9, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(0.999, static_cast<double>(t_));
  for (std::size_t p = 0; p < m_.size(); ++p) {
    Tensor& param = params.value(static_cast<int>(p));
    const Tensor& g = grads[p];
    for (std::size_t i = 0; i < param.size(); ++i) {
      m_[p].data[i] = 0.9 * m_[p].data[i] + 0.1 * g.data[i];
      v_[p].data[i] = 0.999 * v_[p].data[i] + 0.001 * g.data[i] * g.data[i];
      param.data[i] -=
          lr_ * (m_[p].data[i] / c1) / (std::sqrt(v_[p].data[i] / c2) + 1e-8);
    }
  }
}

bool clip_gradients(std::vector<Tensor>& grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return false;
  const double scale = max_norm / norm;
  for (Tensor& g : grads)
    for (double& v : g.data) v *= scale;
  return true;
}

namespace {

// Fixed-size work chunks merged in chunk order: gradients are independent of
// the worker count.
constexpr std::size_t kChunkQueries = 8;

struct ChunkResult {
  std::vector<Tensor> grads;
  double reward_sum = 0.0;
  double length_sum = 0.0;
  std::size_t rollouts = 0;
};

}  // namespace

TrainResult train(const TrainConfig& config, const KnowledgeGraph& kg,
                  const EmbeddingTable& table,
                  const std::vector<Triple>& train_queries,
                  const std::vector<Triple>& valid_queries,
                  const KnownAnswers& known,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  if (config.max_steps < 1 || config.max_loops < 1 || config.num_rollouts < 1)
    throw std::runtime_error("train: S, N and num_rollouts must be >= 1");
  if (train_queries.empty()) throw std::runtime_error("train: no training queries");

  Rng root(config.seed);
  Rng init_rng = root.stream("policy_init");
  Rng shuffle_rng = root.stream("shuffle");
  Rng rollout_root = root.stream("rollout");
  Rng dad_root = root.stream("dad");

  PolicyParameters policy = PolicyParameters::init(config.dim, init_rng);
  if (table.dim != config.dim)
    throw std::runtime_error("train: embedding dim does not match config dim");

  const RolloutConfig rc = config.rollout_config();
  AdamOptimizer opt(config.learning_rate, policy.params);

  unsigned threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                        : std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;

  TrainResult result;
  result.best.config = config;
  result.best.policy = policy;
  double best_mrr = -1.0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_queries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  EvalOptions valid_opts;
  valid_opts.beam_width = config.valid_beam;
  valid_opts.threads = config.threads;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_reward = 0.0, epoch_length = 0.0;
    std::size_t epoch_rollouts = 0;

    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end =
          std::min(order.size(), start + config.batch_size);
      const std::size_t batch_n = end - start;
      const std::size_t chunks = (batch_n + kChunkQueries - 1) / kChunkQueries;

      std::vector<ChunkResult> results(chunks);
      // Two-pass when the baseline needs the batch-mean reward first.
      std::vector<std::vector<std::pair<Query, RolloutRecord>>> kept(
          config.baseline ? chunks : 0);

      std::atomic<std::size_t> cursor{0};
      auto run_chunk = [&](std::size_t c) {
        ChunkResult& out = results[c];
        out.grads = zero_grads(policy.params);
        const std::size_t lo = start + c * kChunkQueries;
        const std::size_t hi = std::min(end, lo + kChunkQueries);
        for (std::size_t qi = lo; qi < hi; ++qi) {
          const Triple& t = train_queries[order[qi]];
          const Query query{t.head, t.relation};
          for (std::size_t k = 0; k < config.num_rollouts; ++k) {
            Rng sample_rng = rollout_root.at(epoch, order[qi], k);
            Rng dad_rng = dad_root.at(epoch, order[qi], k);
            Tape tape;
            RolloutRecord rec =
                rollout(kg, policy, table, tape, query, rc,
                        RolloutMode::kSample, &sample_rng, &dad_rng);
            rec.reward = reward(rec.final_entity, t.tail);
            out.reward_sum += rec.reward;
            out.length_sum += static_cast<double>(rec.chosen.size());
            out.rollouts += 1;
            if (config.baseline) {
              kept[c].emplace_back(query, std::move(rec));
            } else if (rec.reward != 0.0) {
              tape.backward_into(rec.log_prob_sum, policy.params,
                                 -rec.reward, out.grads);
            }
          }
        }
      };
      auto worker = [&]() {
        while (true) {
          const std::size_t c = cursor.fetch_add(1);
          if (c >= chunks) return;
          run_chunk(c);
        }
      };
      {
        std::vector<std::thread> pool;
        const unsigned nthreads = std::min<unsigned>(threads, chunks);
        for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
      }

      const double total_rollouts =
          static_cast<double>(batch_n * config.num_rollouts);
      std::vector<Tensor> grads = zero_grads(policy.params);

      if (config.baseline) {
        double batch_reward = 0.0;
        for (const ChunkResult& r : results) batch_reward += r.reward_sum;
        const double b = batch_reward / total_rollouts;
        std::atomic<std::size_t> cursor2{0};
        auto replay_chunk = [&](std::size_t c) {
          ChunkResult& out = results[c];
          for (auto& [query, rec] : kept[c]) {
            const double coeff = rec.reward - b;
            if (coeff == 0.0) continue;
            Tape tape;
            RolloutRecord replayed = replay(kg, policy, table, tape, query, rc, rec);
            tape.backward_into(replayed.log_prob_sum, policy.params, -coeff,
                               out.grads);
          }
        };
        std::vector<std::thread> pool;
        auto worker2 = [&]() {
          while (true) {
            const std::size_t c = cursor2.fetch_add(1);
            if (c >= chunks) return;
            replay_chunk(c);
          }
        };
        const unsigned nthreads = std::min<unsigned>(threads, chunks);
        for (unsigned w = 0; w < nthreads; ++w) pool.emplace_back(worker2);
        for (auto& th : pool) th.join();
      }

      // Merge in chunk order, then average.
      for (const ChunkResult& r : results) {
        for (std::size_t p = 0; p < grads.size(); ++p)
          for (std::size_t i = 0; i < grads[p].size(); ++i)
            grads[p].data[i] += r.grads[p].data[i];
        epoch_reward += r.reward_sum;
        epoch_length += r.length_sum;
        epoch_rollouts += r.rollouts;
      }
      for (Tensor& g : grads)
        for (double& v : g.data) v /= total_rollouts;

      if (clip_gradients(grads, config.grad_clip_norm))
        std::cerr << "[train] gradient clipped at epoch " << epoch << "\n";
      opt.step(policy.params, grads);

      if (!policy.all_finite()) {
        std::cerr << "[train] non-finite parameters, aborting with last good "
                     "checkpoint\n";
        result.aborted_on_nan = true;
        return result;
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.mean_reward = epoch_rollouts
                          ? epoch_reward / static_cast<double>(epoch_rollouts)
                          : 0.0;
    log.mean_length = epoch_rollouts
                          ? epoch_length / static_cast<double>(epoch_rollouts)
                          : 0.0;

    const bool validate =
        !valid_queries.empty() && (epoch % config.valid_every == 0 ||
                                   epoch + 1 == config.epochs);
    if (validate) {
      RolloutConfig eval_rc = rc;
      eval_rc.step.training = false;
      MetricsReport report =
          evaluate(kg, policy, table, valid_queries, {}, known, eval_rc,
                   valid_opts, nullptr);
      log.valid_mrr = report.mrr;
      result.best.valid_mrr_history.push_back(report.mrr);
      if (report.mrr > best_mrr) {
        best_mrr = report.mrr;
        result.best.policy = policy;
        result.best.epoch = epoch;
        since_best = 0;
      } else if (++since_best > config.patience) {
        log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        result.log.push_back(log);
        if (on_epoch) on_epoch(log);
        break;
      }
    } else if (valid_queries.empty()) {
      // No validation split: the final parameters are the checkpoint.
      result.best.policy = policy;
      result.best.epoch = epoch;
    }

    log.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  BinaryWriter w(path);
  w.write_bytes("GMH1", 4);
  const ParamSet& ps = ckpt.policy.params;
  std::uint64_t blob_doubles = 0;
  for (std::size_t p = 0; p < ps.count(); ++p)
    blob_doubles += ps.value(static_cast<int>(p)).size();
  w.write_u64(blob_doubles * sizeof(double));
  for (std::size_t p = 0; p < ps.count(); ++p)
    w.write_doubles(ps.value(static_cast<int>(p)).data);

  nlohmann::json j;
  j["dim"] = ckpt.config.dim;
  j["max_steps"] = ckpt.config.max_steps;
  j["max_loops"] = ckpt.config.max_loops;
  j["action_cap"] = ckpt.config.action_cap;
  j["aggregator"] = ckpt.config.aggregator;
  j["action_dropout"] = ckpt.config.action_dropout;
  j["dad_standardize"] = ckpt.config.dad_standardize;
  j["use_attention"] = ckpt.config.use_attention;
  j["use_global"] = ckpt.config.use_global;
  j["seed"] = ckpt.config.seed;
  j["epoch"] = ckpt.epoch;
  j["embedding_path"] = ckpt.embedding_path;
  j["embedding_hash"] = ckpt.embedding_hash;
  j["valid_mrr_history"] = ckpt.valid_mrr_history;
  w.write_string(j.dump());
}

Checkpoint load_checkpoint(const std::string& path, bool verify_embedding_hash) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, "GMH1", 4) != 0)
    throw std::runtime_error("not a policy checkpoint: " + path);
  const std::uint64_t blob_bytes = r.read_u64();
  std::vector<double> blob(blob_bytes / sizeof(double));
  r.read_doubles(blob);
  nlohmann::json j = nlohmann::json::parse(r.read_string());

  Checkpoint ckpt;
  ckpt.config.dim = j.at("dim").get<std::size_t>();
  ckpt.config.max_steps = j.at("max_steps").get<int>();
  ckpt.config.max_loops = j.at("max_loops").get<int>();
  ckpt.config.action_cap = j.at("action_cap").get<std::size_t>();
  ckpt.config.aggregator = j.at("aggregator").get<std::string>();
  ckpt.config.action_dropout = j.at("action_dropout").get<std::string>();
  ckpt.config.dad_standardize = j.at("dad_standardize").get<bool>();
  ckpt.config.use_attention = j.at("use_attention").get<bool>();
  ckpt.config.use_global = j.at("use_global").get<bool>();
  ckpt.config.seed = j.at("seed").get<std::uint64_t>();
  ckpt.epoch = j.at("epoch").get<std::size_t>();
  ckpt.embedding_path = j.at("embedding_path").get<std::string>();
  ckpt.embedding_hash = j.at("embedding_hash").get<std::string>();
  ckpt.valid_mrr_history = j.at("valid_mrr_history").get<std::vector<double>>();

  Rng dummy(0);
  ckpt.policy = PolicyParameters::init(ckpt.config.dim, dummy);
  std::size_t off = 0;
  ParamSet& ps = ckpt.policy.params;
  for (std::size_t p = 0; p < ps.count(); ++p) {
    Tensor& t = ps.value(static_cast<int>(p));
    if (off + t.size() > blob.size())
      throw std::runtime_error("checkpoint blob too short: " + path);
    std::copy(blob.begin() + off, blob.begin() + off + t.size(), t.data.begin());
    off += t.size();
  }
  if (off != blob.size())
    throw std::runtime_error("checkpoint blob size mismatch: " + path);

  if (verify_embedding_hash) {
    const std::string actual = file_content_hash(ckpt.embedding_path);
    if (actual != ckpt.embedding_hash)
      throw std::runtime_error(
          "embedding file hash mismatch for checkpoint " + path +
          " (expected " + ckpt.embedding_hash + ", file " + ckpt.embedding_path +
          " has " + actual + ")");
  }
  return ckpt;
}

}  // namespace kgpf
