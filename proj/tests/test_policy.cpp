#include "doctest.h"

#include <cmath>

#include "kgpf/policy.hpp"

using namespace kgpf;

namespace {

EmbeddingTable random_table(std::size_t dim, std::size_t ents, std::size_t rels,
                            ScoreKind kind = ScoreKind::kDistMult) {
  Rng rng(71);
  EmbeddingTable t;
  t.kind = kind;
  t.dim = dim;
  t.entities = init_uniform_rows(ents, dim, rng, true);
  t.relations = init_uniform_rows(rels, dim, rng, true);
  for (std::size_t i = 0; i < dim; ++i) {
    t.relations.data[kSelfLoop * dim + i] = 0.0;
    t.relations.data[kStart * dim + i] = 0.0;
  }
  return t;
}

}  // namespace

TEST_CASE("policy parameter shapes") {
  Rng rng(3);
  PolicyParameters p = PolicyParameters::init(5, rng);
  CHECK(p.hidden_dim() == 10);
  CHECK(p.params.value(p.w1).shape == std::vector<std::size_t>{10, 10});
  CHECK(p.params.value(p.w2).shape == std::vector<std::size_t>{10, 10});
  CHECK(p.params.value(p.lstm.w).shape == std::vector<std::size_t>{40, 20});
  CHECK(p.all_finite());
}

TEST_CASE("encode_history: lengths and zero-parameter case") {
  Rng rng(3);
  PolicyParameters p = PolicyParameters::init(4, rng);
  EmbeddingTable table = random_table(4, 6, 6);
  Tape tape;

  std::vector<Action> traj1 = {{kStart, 0}};
  auto h1 = encode_history(tape, p, table, traj1);
  CHECK(h1.size() == 1);

  p.params.value(p.lstm.w).fill(0.0);
  p.params.value(p.lstm.b).fill(0.0);
  Tape tape2;
  std::vector<Action> traj = {{kStart, 0}, {2, 1}, {4, 3}};
  auto hs = encode_history(tape2, p, table, traj);
  REQUIRE(hs.size() == 3);
  for (NodeId h : hs)
    for (double v : tape2.value(h).data) CHECK(v == doctest::Approx(0.0));

  CHECK_THROWS(encode_history(tape2, p, table, std::vector<Action>{}));
  std::vector<Action> bad = {{2, 0}};
  CHECK_THROWS(encode_history(tape2, p, table, bad));
}

TEST_CASE("encode_history equals stepwise encoding") {
  Rng rng(9);
  PolicyParameters p = PolicyParameters::init(4, rng);
  EmbeddingTable table = random_table(4, 6, 6);

  std::vector<Action> traj = {{kStart, 2}, {2, 1}, {3, 4}, {4, 5}};
  Tape t1;
  auto whole = encode_history(t1, p, table, traj);

  Tape t2;
  EncoderState enc = encode_init(t2, p, table, {2, kStart});
  for (std::size_t i = 1; i < traj.size(); ++i)
    encode_push(t2, p, table, enc, traj[i]);
  REQUIRE(whole.size() == enc.hiddens.size());
  for (std::size_t i = 0; i < whole.size(); ++i)
    for (std::size_t k = 0; k < t1.value(whole[i]).size(); ++k)
      CHECK(t1.value(whole[i]).data[k] ==
            doctest::Approx(t2.value(enc.hiddens[i]).data[k]).epsilon(1e-15));
}

TEST_CASE("attention_weights: uniform, hand case, normalization") {
  Tape tape;
  NodeId q = tape.constant(Tensor::from({1.0, 0.0}));

  // Identical hiddens: uniform 1/(s+1).
  std::vector<NodeId> same = {tape.constant(Tensor::from({0.3, 0.4})),
                              tape.constant(Tensor::from({0.3, 0.4})),
                              tape.constant(Tensor::from({0.3, 0.4}))};
  NodeId alpha = attention_weights(tape, q, same);
  for (double v : tape.value(alpha).data)
    CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  // q=(1,0), hiddens [(1,0),(0,1)] -> softmax([1,0]).
  std::vector<NodeId> two = {tape.constant(Tensor::from({1.0, 0.0})),
                             tape.constant(Tensor::from({0.0, 1.0}))};
  NodeId a2 = attention_weights(tape, q, two);
  CHECK(tape.value(a2).data[0] == doctest::Approx(0.73106).epsilon(1e-4));
  CHECK(tape.value(a2).data[1] == doctest::Approx(0.26894).epsilon(1e-4));
  double sum = 0.0;
  for (double v : tape.value(a2).data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  // Weight concentrates on the aligned hidden as it grows.
  std::vector<NodeId> grow = {tape.constant(Tensor::from({5.0, 0.0})),
                              tape.constant(Tensor::from({0.0, 1.0}))};
  NodeId a3 = attention_weights(tape, q, grow);
  CHECK(tape.value(a3).data[0] > 0.99);
}

TEST_CASE("attention permutation invariance") {
  Tape tape;
  NodeId q = tape.constant(Tensor::from({0.5, -1.0}));
  std::vector<NodeId> hs = {tape.constant(Tensor::from({1.0, 2.0})),
                            tape.constant(Tensor::from({-0.5, 0.3})),
                            tape.constant(Tensor::from({0.2, 0.9}))};
  std::vector<NodeId> permuted = {hs[2], hs[0], hs[1]};
  NodeId a = attention_weights(tape, q, hs);
  NodeId b = attention_weights(tape, q, permuted);
  CHECK(tape.value(a).data[0] == doctest::Approx(tape.value(b).data[1]).epsilon(1e-15));
  CHECK(tape.value(a).data[1] == doctest::Approx(tape.value(b).data[2]).epsilon(1e-15));
  CHECK(tape.value(a).data[2] == doctest::Approx(tape.value(b).data[0]).epsilon(1e-15));

  NodeId ca = attention_context(tape, a, hs);
  NodeId cb = attention_context(tape, b, permuted);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(tape.value(ca).data[i] == doctest::Approx(tape.value(cb).data[i]).epsilon(1e-15));
}

TEST_CASE("local_scores: shape, equal rows, by-hand oracle") {
  Rng rng(5);
  PolicyParameters p = PolicyParameters::init(2, rng);
  EmbeddingTable table = random_table(2, 5, 6);
  Tape tape;
  NodeId context = tape.constant(Tensor::from({0.1, -0.2, 0.3, 0.4}));

  std::vector<Action> one = {{kSelfLoop, 2}};
  NodeId lk1 = local_scores(tape, p, table, context, one);
  CHECK(tape.value(lk1).size() == 1);

  // Two actions with identical [relation ; entity] rows score identically.
  std::vector<Action> twins = {{2, 1}, {2, 1}};
  NodeId lk2 = local_scores(tape, p, table, context, twins);
  CHECK(tape.value(lk2).data[0] == doctest::Approx(tape.value(lk2).data[1]));

  // Straight-line recomputation: A (W1 softmax(W2 c)).
  std::vector<Action> actions = {{kSelfLoop, 0}, {2, 1}, {3, 4}};
  NodeId lk = local_scores(tape, p, table, context, actions);
  const Tensor& w1 = p.params.value(p.w1);
  const Tensor& w2 = p.params.value(p.w2);
  const Tensor& ctx = tape.value(context);
  std::vector<double> u(4, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) u[i] += w2.at(i, j) * ctx.data[j];
  double mx = *std::max_element(u.begin(), u.end());
  double z = 0.0;
  std::vector<double> d(4);
  for (int i = 0; i < 4; ++i) z += (d[i] = std::exp(u[i] - mx));
  for (int i = 0; i < 4; ++i) d[i] /= z;
  std::vector<double> v(4, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) v[i] += w1.at(i, j) * d[j];
  for (std::size_t ai = 0; ai < actions.size(); ++ai) {
    const double* rrow = table.relation_row(actions[ai].first);
    const double* erow = table.entity_row(actions[ai].second);
    double expect = rrow[0] * v[0] + rrow[1] * v[1] + erow[0] * v[2] + erow[1] * v[3];
    CHECK(std::abs(tape.value(lk).data[ai] - expect) < 1e-12);
  }
}

TEST_CASE("aggregate") {
  Tape tape;
  NodeId lk = tape.constant(Tensor::from({1.0, 2.0}));
  NodeId gk = tape.constant(Tensor::from({3.0, 4.0}));
  NodeId s = aggregate(tape, lk, gk, Aggregator::kSum);
  CHECK(tape.value(s).data[0] == doctest::Approx(4.0));
  CHECK(tape.value(s).data[1] == doctest::Approx(6.0));
  NodeId m = aggregate(tape, lk, gk, Aggregator::kScalarProduct);
  CHECK(tape.value(m).data[0] == doctest::Approx(3.0));
  CHECK(tape.value(m).data[1] == doctest::Approx(8.0));

  NodeId bad = tape.constant(Tensor::from({1.0}));
  CHECK_THROWS(aggregate(tape, lk, bad, Aggregator::kSum));

  // Zero gk under the product sends every fused score to zero -> uniform.
  NodeId zeros = tape.constant(Tensor::from({0.0, 0.0}));
  NodeId fused = aggregate(tape, lk, zeros, Aggregator::kScalarProduct);
  auto dist = action_distribution(tape, fused, {1, 1});
  CHECK(dist.probs.data[0] == doctest::Approx(0.5));
  CHECK(dist.probs.data[1] == doctest::Approx(0.5));
}

TEST_CASE("scalar product preserves local signs for positive gk") {
  Tape tape;
  NodeId lk = tape.constant(Tensor::from({-1.5, 2.0, -0.1, 0.7}));
  NodeId gk = tape.constant(Tensor::from({0.5, 1.0, 2.0, 0.25}));
  NodeId fused = aggregate(tape, lk, gk, Aggregator::kScalarProduct);
  for (std::size_t i = 0; i < 4; ++i) {
    const double a = tape.value(lk).data[i];
    const double b = tape.value(fused).data[i];
    CHECK(std::signbit(a) == std::signbit(b));
  }
}

TEST_CASE("dropout_mask") {
  Rng rng(13);
  // Saturated sigmoid keeps everything (raw scores, no standardization).
  Tensor huge = Tensor::from({50.0, 60.0, 70.0, 80.0});
  auto all = dropout_mask(rng, huge, DropoutMode::kScored, false, true);
  for (auto m : all) CHECK(m == 1);

  // Evaluation mode ignores scores entirely.
  Tensor low = Tensor::from({-50.0, -60.0, -70.0});
  auto eval_mask = dropout_mask(rng, low, DropoutMode::kScored, true, false);
  for (auto m : eval_mask) CHECK(m == 1);
  auto off_mask = dropout_mask(rng, low, DropoutMode::kOff, true, true);
  for (auto m : off_mask) CHECK(m == 1);

  // Keep rate ~ sigmoid(0) = 0.5 for non-forced entries.
  const std::size_t n = 101;
  Tensor zeros = Tensor::vector(n, 0.0);
  std::size_t kept_entry1 = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    auto m = dropout_mask(rng, zeros, DropoutMode::kScored, false, true);
    CHECK(m[0] == 1);  // self-loop forced
    kept_entry1 += m[1];
  }
  const double rate = static_cast<double>(kept_entry1) / trials;
  CHECK(rate > 0.485);
  CHECK(rate < 0.515);

  // All non-self-loop entries rejected -> the best-scoring one is forced.
  Tensor sure_drop = Tensor::from({0.0, -80.0, -20.0, -80.0});
  for (int i = 0; i < 50; ++i) {
    auto m = dropout_mask(rng, sure_drop, DropoutMode::kScored, false, true);
    CHECK(m[0] == 1);
    CHECK(m[2] == 1);  // index of the largest non-self-loop score
  }
}

TEST_CASE("action_distribution") {
  Tape tape;
  NodeId flat = tape.constant(Tensor::from({0.0, 0.0}));
  auto d1 = action_distribution(tape, flat, {1, 1});
  CHECK(d1.probs.data[0] == doctest::Approx(0.5));

  NodeId fused = tape.constant(Tensor::from({5.0, 1.0, 1.0}));
  auto d2 = action_distribution(tape, fused, {1, 0, 1});
  CHECK(d2.probs.data[0] == doctest::Approx(0.98201).epsilon(1e-4));
  CHECK(d2.probs.data[1] == 0.0);
  CHECK(d2.probs.data[2] == doctest::Approx(0.01799).epsilon(1e-3));
  double sum = 0.0;
  for (double v : d2.probs.data) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  NodeId single = tape.constant(Tensor::from({2.0, 3.0}));
  auto d3 = action_distribution(tape, single, {0, 1});
  CHECK(d3.probs.data[1] == doctest::Approx(1.0));
  CHECK(d3.probs.data[0] == 0.0);

  CHECK_THROWS(action_distribution(tape, fused, {0, 0, 0}));
}

TEST_CASE("action_distribution shift invariance") {
  Tape tape;
  Tensor base = Tensor::from({0.3, -1.2, 2.5, 0.0});
  Tensor shifted = base;
  for (double& v : shifted.data) v += 123.456;
  auto da = action_distribution(tape, tape.constant(base), {1, 1, 0, 1});
  auto db = action_distribution(tape, tape.constant(shifted), {1, 1, 0, 1});
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(std::abs(da.probs.data[i] - db.probs.data[i]) < 1e-12);
}

TEST_CASE("policy_step permutation equivariance behind the self-loop") {
  Rng rng(41);
  PolicyParameters p = PolicyParameters::init(3, rng);
  EmbeddingTable table = random_table(3, 8, 8);
  StepConfig cfg;
  cfg.training = false;

  std::vector<Action> actions = {{kSelfLoop, 2}, {2, 1}, {3, 4}, {4, 5}};
  std::vector<Action> permuted = {{kSelfLoop, 2}, {3, 4}, {4, 5}, {2, 1}};

  Tape t1;
  EncoderState e1 = encode_init(t1, p, table, {2, 2});
  auto s1 = policy_step(t1, p, table, {2, 2}, e1, actions, 2, cfg, nullptr, nullptr);
  Tape t2;
  EncoderState e2 = encode_init(t2, p, table, {2, 2});
  auto s2 = policy_step(t2, p, table, {2, 2}, e2, permuted, 2, cfg, nullptr, nullptr);

  const Tensor& pa = s1.dist.probs;
  const Tensor& pb = s2.dist.probs;
  CHECK(std::abs(pa.data[0] - pb.data[0]) < 1e-12);
  CHECK(std::abs(pa.data[1] - pb.data[3]) < 1e-12);
  CHECK(std::abs(pa.data[2] - pb.data[1]) < 1e-12);
  CHECK(std::abs(pa.data[3] - pb.data[2]) < 1e-12);
}
