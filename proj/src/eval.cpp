#include "kgpf/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace kgpf {

namespace {

std::uint64_t pair_key(EntityId h, RelationId r) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(h)) << 32) |
         static_cast<std::uint32_t>(r);
}

struct Beam {
  double score = 0.0;
  SearchState state;
};

}  // namespace

void KnownAnswers::add(const std::vector<Triple>& triples) {
  for (const Triple& t : triples) map_[pair_key(t.head, t.relation)].insert(t.tail);
}

bool KnownAnswers::contains(EntityId head, RelationId rel, EntityId tail) const {
  auto it = map_.find(pair_key(head, rel));
  return it != map_.end() && it->second.contains(tail);
}

std::vector<RankedAnswer> beam_search(const KnowledgeGraph& kg,
                                      const PolicyParameters& policy,
                                      const EmbeddingTable& table,
                                      const Query& query, std::size_t beam_width,
                                      const RolloutConfig& cfg) {
  if (beam_width < 1) throw std::runtime_error("beam_search: K must be >= 1");
  StepConfig step_cfg = cfg.step;
  step_cfg.training = false;  // no dropout at inference

  Tape tape;
  std::vector<Beam> beams;
  beams.push_back({0.0, init_state(tape, policy, table, query, cfg.max_steps,
                                   cfg.max_loops)});

  struct Expansion {
    double score;
    std::size_t parent;
    std::int32_t action;  // -1: carried-over stopped beam
    Action edge;
  };

  for (int round = 0; round < cfg.max_steps; ++round) {
    bool any_live = false;
    std::vector<Expansion> pool;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      Beam& beam = beams[b];
      if (beam.state.stopped) {
        pool.push_back({beam.score, b, -1, {}});
        continue;
      }
      any_live = true;
      const std::vector<Action> actions =
          action_set(kg, beam.state.current, cfg.action_cap);
      PolicyStep step =
          policy_step(tape, policy, table, query, beam.state.encoder, actions,
                      beam.state.current, step_cfg, nullptr, nullptr);
      const Tensor& logp = tape.value(step.dist.log_probs);
      for (std::size_t i = 0; i < actions.size(); ++i) {
        pool.push_back({beam.score + logp.data[i], b,
                        static_cast<std::int32_t>(i), actions[i]});
      }
    }
    if (!any_live) break;

    // Deterministic order: score desc, then (entity, relation, parent) asc.
    std::sort(pool.begin(), pool.end(), [&](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      const EntityId ea = a.action < 0 ? beams[a.parent].state.current : a.edge.second;
      const EntityId eb = b.action < 0 ? beams[b.parent].state.current : b.edge.second;
      if (ea != eb) return ea < eb;
      if (a.edge.first != b.edge.first) return a.edge.first < b.edge.first;
      return a.parent < b.parent;
    });
    if (pool.size() > beam_width) pool.resize(beam_width);

    std::vector<Beam> next;
    next.reserve(pool.size());
    for (const Expansion& exp : pool) {
      if (exp.action < 0) {
        next.push_back(std::move(beams[exp.parent]));
        continue;
      }
      Beam child;
      child.score = exp.score;
      child.state = beams[exp.parent].state;  // encoder nodes shared on tape
      advance(tape, policy, table, child.state, exp.edge, cfg.max_steps,
              cfg.max_loops);
      next.push_back(std::move(child));
    }
    beams.swap(next);
  }

  // Deduplicate final entities, keeping each entity's best-scoring beam.
  std::map<EntityId, std::size_t> best;
  for (std::size_t b = 0; b < beams.size(); ++b) {
    auto [it, inserted] = best.try_emplace(beams[b].state.current, b);
    if (!inserted && beams[b].score > beams[it->second].score) it->second = b;
  }
  std::vector<RankedAnswer> answers;
  answers.reserve(best.size());
  for (auto [entity, b] : best) {
    RankedAnswer a;
    a.entity = entity;
    a.score = beams[b].score;
    a.path = beams[b].state.trajectory;
    a.stopped_by = beams[b].state.loops >= cfg.max_loops ? StopReason::kSelfLoop
                                                         : StopReason::kMaxStep;
    answers.push_back(std::move(a));
  }
  std::sort(answers.begin(), answers.end(),
            [](const RankedAnswer& a, const RankedAnswer& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.entity < b.entity;
            });
  for (std::size_t i = 0; i < answers.size(); ++i) answers[i].rank = i + 1;
  return answers;
}

double mrr(const std::vector<double>& ranks) {
  if (ranks.empty()) throw std::runtime_error("mrr: empty rank list");
  double total = 0.0;
  for (double r : ranks) {
    if (std::isfinite(r)) total += 1.0 / r;
  }
  return total / static_cast<double>(ranks.size());
}

double hits_at(const std::vector<double>& ranks, std::size_t n) {
  if (ranks.empty()) throw std::runtime_error("hits_at: empty rank list");
  if (n < 1) throw std::runtime_error("hits_at: n must be >= 1");
  std::size_t hits = 0;
  for (double r : ranks) {
    if (r <= static_cast<double>(n)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

MetricsReport evaluate(const KnowledgeGraph& kg, const PolicyParameters& policy,
                       const EmbeddingTable& table,
                       const std::vector<Triple>& queries,
                       const std::vector<int>& distances,
                       const KnownAnswers& known, const RolloutConfig& cfg,
                       const EvalOptions& opts,
                       std::vector<RankedAnswer>* paths_out) {
  MetricsReport report;
  const std::size_t n = queries.size();
  report.ranks.assign(n, kUnranked);
  report.ranks_raw.assign(n, kUnranked);
  std::vector<char> skipped(n, 0);
  std::vector<RankedAnswer> tops(n);

  unsigned threads = opts.threads > 0 ? static_cast<unsigned>(opts.threads)
                                      : std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  threads = std::min<unsigned>(threads, std::max<std::size_t>(n, 1));

  std::atomic<std::size_t> cursor{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t qi = cursor.fetch_add(1);
      if (qi >= n) return;
      const Triple& q = queries[qi];
      if (q.head < 0 || static_cast<std::size_t>(q.head) >= kg.entity_count()) {
        skipped[qi] = 1;
        continue;
      }
      auto answers = beam_search(kg, policy, table, {q.head, q.relation},
                                 opts.beam_width, cfg);
      if (!answers.empty()) tops[qi] = answers.front();
      // Raw rank: position among all beam candidates.
      std::size_t raw = 0, filtered = 0;
      bool found = false;
      for (const RankedAnswer& a : answers) {
        ++raw;
        const bool other_known = a.entity != q.tail &&
                                 known.contains(q.head, q.relation, a.entity);
        if (!other_known) ++filtered;
        if (a.entity == q.tail) {
          report.ranks_raw[qi] = static_cast<double>(raw);
          report.ranks[qi] = static_cast<double>(filtered);
          found = true;
          break;
        }
      }
      if (!found) {
        report.ranks_raw[qi] = kUnranked;
        report.ranks[qi] = kUnranked;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::vector<double> kept, kept_raw;
  std::map<int, std::vector<double>> by_distance;
  for (std::size_t qi = 0; qi < n; ++qi) {
    if (skipped[qi]) {
      ++report.skipped;
      continue;
    }
    kept.push_back(report.ranks[qi]);
    kept_raw.push_back(report.ranks_raw[qi]);
    if (!std::isfinite(report.ranks[qi])) ++report.unanswered;
    if (qi < distances.size() && distances[qi] >= 0)
      by_distance[distances[qi]].push_back(report.ranks[qi]);
  }
  if (!kept.empty()) {
    report.mrr = mrr(kept);
    report.hits1 = hits_at(kept, 1);
    report.hits3 = hits_at(kept, 3);
    report.hits10 = hits_at(kept, 10);
    report.mrr_raw = mrr(kept_raw);
    report.hits1_raw = hits_at(kept_raw, 1);
    report.hits3_raw = hits_at(kept_raw, 3);
    report.hits10_raw = hits_at(kept_raw, 10);
  }
  for (auto& [d, ranks] : by_distance)
    report.per_distance_mrr.emplace_back(d, mrr(ranks));

  if (paths_out) *paths_out = std::move(tops);
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["protocol"] = "filtered_beam_rank";
  j["mrr"] = mrr;
  j["hits1"] = hits1;
  j["hits3"] = hits3;
  j["hits10"] = hits10;
  j["raw_protocol"] = "unfiltered_beam_rank";
  j["mrr_raw"] = mrr_raw;
  j["hits1_raw"] = hits1_raw;
  j["hits3_raw"] = hits3_raw;
  j["hits10_raw"] = hits10_raw;
  j["unanswered"] = unanswered;
  j["skipped"] = skipped;
  auto rank_json = [](const std::vector<double>& rs) {
    nlohmann::json arr = nlohmann::json::array();
    for (double r : rs) {
      if (std::isfinite(r))
        arr.push_back(static_cast<std::int64_t>(r));
      else
        arr.push_back(nullptr);  // unranked
    }
    return arr;
  };
  j["ranks"] = rank_json(ranks);
  j["ranks_raw"] = rank_json(ranks_raw);
  if (!per_distance_mrr.empty()) {
    nlohmann::json d = nlohmann::json::object();
    for (auto& [dist, m] : per_distance_mrr) d[std::to_string(dist)] = m;
    j["per_distance_mrr"] = d;
  }
  return j.dump(2);
}

}  // namespace kgpf
