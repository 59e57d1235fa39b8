#include "doctest.h"

#include <cmath>

#include "kgpf/search.hpp"

using namespace kgpf;

namespace {

struct ChainWorld {
  Vocabulary vocab;
  std::vector<Triple> triples;
  EntityId a, b, c;
  RelationId r, q;

  ChainWorld() {
    a = vocab.add_entity("a");
    b = vocab.add_entity("b");
    c = vocab.add_entity("c");
    r = vocab.add_relation("r");
    q = vocab.add_relation("q_chain2");
    triples = {{a, r, b}, {b, r, c}};
  }
};

// DistMult table crafted so gk(query (a, q), candidate) is ordered c > b > a.
EmbeddingTable oracle_table(const ChainWorld& w) {
  EmbeddingTable t;
  t.kind = ScoreKind::kDistMult;
  t.dim = 2;
  t.entities = Tensor::matrix(3, 2);
  t.relations = Tensor::matrix(w.vocab.relation_count(), 2);
  auto set = [&](Tensor& m, std::size_t row, double x, double y) {
    m.data[row * 2] = x;
    m.data[row * 2 + 1] = y;
  };
  set(t.entities, w.a, 1.0, 1.0);
  set(t.entities, w.b, 2.0, 2.0);
  set(t.entities, w.c, 3.0, 3.0);
  set(t.relations, w.q, 1.0, 1.0);
  set(t.relations, w.r, 0.1, 0.1);
  return t;
}

// Zeroed policy: local scores vanish, so a sum aggregator leaves gk alone.
PolicyParameters zero_policy(std::size_t dim) {
  Rng rng(1);
  PolicyParameters p = PolicyParameters::init(dim, rng);
  for (std::size_t i = 0; i < p.params.count(); ++i)
    p.params.value(static_cast<int>(i)).fill(0.0);
  return p;
}

RolloutConfig greedy_cfg(int S, int N) {
  RolloutConfig cfg;
  cfg.max_steps = S;
  cfg.max_loops = N;
  cfg.step.aggregator = Aggregator::kSum;
  cfg.step.training = false;
  return cfg;
}

}  // namespace

TEST_CASE("init_state basics") {
  ChainWorld w;
  KnowledgeGraph kg(w.triples, w.vocab);
  EmbeddingTable table = oracle_table(w);
  PolicyParameters p = zero_policy(2);

  Tape tape;
  SearchState s = init_state(tape, p, table, {w.a, w.q}, 3, 2);
  CHECK(s.step == 0);
  CHECK(s.loops == 0);
  CHECK(s.current == w.a);
  CHECK(!s.stopped);
  REQUIRE(s.trajectory.size() == 1);
  CHECK(s.trajectory[0] == Action{kStart, w.a});

  CHECK_THROWS(init_state(tape, p, table, {w.a, w.q}, 0, 2));
  CHECK_THROWS(init_state(tape, p, table, {w.a, w.q}, 3, 0));

  // Independent states: advancing one leaves the other untouched.
  SearchState s2 = init_state(tape, p, table, {w.a, w.q}, 3, 2);
  advance(tape, p, table, s2, {kSelfLoop, w.a}, 3, 2);
  CHECK(s.step == 0);
  CHECK(s2.step == 1);
}

TEST_CASE("advance: loop counting and stop boundary") {
  ChainWorld w;
  KnowledgeGraph kg(w.triples, w.vocab);
  EmbeddingTable table = oracle_table(w);
  PolicyParameters p = zero_policy(2);

  Tape tape;
  SearchState s = init_state(tape, p, table, {w.a, w.q}, 3, 5);
  advance(tape, p, table, s, {kSelfLoop, w.a}, 3, 5);
  CHECK(s.loops == 1);
  advance(tape, p, table, s, {w.r, w.b}, 3, 5);
  CHECK(s.loops == 0);  // a real move resets the consecutive count
  advance(tape, p, table, s, {w.r, w.c}, 3, 5);
  CHECK(s.stopped);  // s reached S
  CHECK_THROWS(advance(tape, p, table, s, {kSelfLoop, w.c}, 3, 5));
}

TEST_CASE("should_stop truth table") {
  SearchState s;
  s.step = 3;
  s.loops = 0;
  CHECK(should_stop(s, 3, 2));
  s.step = 1;
  s.loops = 2;
  CHECK(should_stop(s, 3, 2));
  s.step = 0;
  s.loops = 0;
  CHECK(!should_stop(s, 3, 2));
}

TEST_CASE("rollout: N=1 stops on the first self-loop") {
  ChainWorld w;
  KnowledgeGraph kg(w.triples, w.vocab);
  EmbeddingTable table = oracle_table(w);
  PolicyParameters p = zero_policy(2);

  // Force the self-loop by making gk peak at the current entity: query tail
  // embedding ordering c > b > a means self-loop wins at c only; start from c.
  RolloutConfig cfg = greedy_cfg(5, 1);
  Tape tape;
  RolloutRecord rec =
      rollout(kg, p, table, tape, {w.c, w.q}, cfg, RolloutMode::kGreedy, nullptr);
  CHECK(rec.stopped_by == StopReason::kSelfLoop);
  CHECK(rec.chosen.size() == 1);
  CHECK(rec.final_entity == w.c);
}

TEST_CASE("rollout: greedy oracle walks the chain") {
  ChainWorld w;
  KnowledgeGraph kg(w.triples, w.vocab);
  EmbeddingTable table = oracle_table(w);
  PolicyParameters p = zero_policy(2);

  RolloutConfig cfg = greedy_cfg(2, 2);
  Tape tape;
  RolloutRecord rec =
      rollout(kg, p, table, tape, {w.a, w.q}, cfg, RolloutMode::kGreedy, nullptr);
  CHECK(rec.final_entity == w.c);
  CHECK(rec.chosen.size() == 2);
  REQUIRE(rec.trajectory.size() == 3);
  CHECK(rec.trajectory[1] == Action{w.r, w.b});
  CHECK(rec.trajectory[2] == Action{w.r, w.c});

  // Greedy is deterministic.
  Tape tape2;
  RolloutRecord rec2 =
      rollout(kg, p, table, tape2, {w.a, w.q}, cfg, RolloutMode::kGreedy, nullptr);
  CHECK(rec2.trajectory == rec.trajectory);
}

TEST_CASE("replay rebuilds identical log-probabilities") {
  ChainWorld w;
  KnowledgeGraph kg(w.triples, w.vocab);
  EmbeddingTable table = oracle_table(w);
  Rng rng(17);
  PolicyParameters p = PolicyParameters::init(2, rng);

  RolloutConfig cfg = greedy_cfg(3, 2);
  cfg.step.training = true;
  cfg.step.dropout = DropoutMode::kScored;
  cfg.step.use_global = true;

  Rng sample(5), dad(6);
  Tape tape;
  RolloutRecord rec = rollout(kg, p, table, tape, {w.a, w.q}, cfg,
                              RolloutMode::kSample, &sample, &dad);
  Tape tape2;
  RolloutRecord rep = replay(kg, p, table, tape2, {w.a, w.q}, cfg, rec);
  CHECK(rep.final_entity == rec.final_entity);
  CHECK(rep.trajectory == rec.trajectory);
  REQUIRE(rep.step_log_probs.size() == rec.step_log_probs.size());
  for (std::size_t i = 0; i < rec.step_log_probs.size(); ++i)
    CHECK(rep.step_log_probs[i] == doctest::Approx(rec.step_log_probs[i]).epsilon(1e-15));
}

TEST_CASE("rollout properties on a random graph") {
  // Random multigraph with a random policy: hard bounds must still hold.
  Rng graph_rng(12);
  Vocabulary vocab;
  for (int e = 0; e < 20; ++e) vocab.add_entity("e" + std::to_string(e));
  for (int r = 0; r < 4; ++r) vocab.add_relation("r" + std::to_string(r));
  std::vector<Triple> triples;
  for (int i = 0; i < 60; ++i) {
    EntityId h = static_cast<EntityId>(graph_rng.below(20));
    EntityId t = static_cast<EntityId>(graph_rng.below(20));
    RelationId r = static_cast<RelationId>(2 + 2 * graph_rng.below(4));
    triples.push_back({h, r, t});
  }
  KnowledgeGraph kg(triples, vocab);

  Rng rng(3);
  PolicyParameters p = PolicyParameters::init(4, rng);
  EmbeddingTable table;
  table.kind = ScoreKind::kDistMult;
  table.dim = 4;
  table.entities = init_uniform_rows(20, 4, rng, true);
  table.relations = init_uniform_rows(vocab.relation_count(), 4, rng, true);

  RolloutConfig cfg;
  cfg.max_steps = 3;
  cfg.max_loops = 2;
  cfg.step.training = true;
  cfg.step.dropout = DropoutMode::kScored;

  Rng root(99);
  for (int trial = 0; trial < 2000; ++trial) {
    Rng sample = root.at(trial, 0);
    Rng dad = root.at(trial, 1);
    const EntityId head = static_cast<EntityId>(root.below(20));
    Tape tape;
    RolloutRecord rec = rollout(kg, p, table, tape, {head, 2}, cfg,
                                RolloutMode::kSample, &sample, &dad);
    CHECK(rec.chosen.size() <= 3);

    // Two consecutive self-loops appear only as the trajectory's tail.
    int consecutive = 0;
    for (std::size_t i = 1; i < rec.trajectory.size(); ++i) {
      if (rec.trajectory[i].first == kSelfLoop) {
        if (++consecutive >= 2) CHECK(i + 1 == rec.trajectory.size());
      } else {
        consecutive = 0;
      }
    }

    // Every real edge exists in the graph from its source entity.
    for (std::size_t i = 1; i < rec.trajectory.size(); ++i) {
      const EntityId from = rec.trajectory[i - 1].second;
      const Action& act = rec.trajectory[i];
      if (act.first == kSelfLoop) {
        CHECK(act.second == from);
        continue;
      }
      const auto& adj = kg.adjacency(from);
      CHECK(std::find(adj.begin(), adj.end(), act) != adj.end());
    }

    // Stop reason must match the terminal state.
    if (rec.stopped_by == StopReason::kSelfLoop) {
      REQUIRE(rec.trajectory.size() >= 2);
      CHECK(rec.trajectory.back().first == kSelfLoop);
    } else {
      CHECK(rec.chosen.size() == 3);
    }
  }
}
