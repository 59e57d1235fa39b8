#include "kgpf/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iostream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "kgpf/serialize.hpp"
#include "kgpf/tape.hpp"

namespace kgpf {

std::string score_kind_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kTransE: return "transe";
    case ScoreKind::kDistMult: return "distmult";
    case ScoreKind::kComplEx: return "complex";
  }
  throw std::runtime_error("unknown score kind");
}

ScoreKind score_kind_from(const std::string& name) {
  if (name == "transe") return ScoreKind::kTransE;
  if (name == "distmult") return ScoreKind::kDistMult;
  if (name == "complex") return ScoreKind::kComplEx;
  throw std::runtime_error("unknown embedding model '" + name +
                           "' (expected transe|distmult|complex)");
}

namespace {

double score_rows(ScoreKind kind, std::size_t dim, const double* h,
                  const double* r, const double* t) {
  switch (kind) {
    case ScoreKind::kTransE: {
      double acc = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = h[i] + r[i] - t[i];
        acc += d * d;
      }
      return -std::sqrt(acc);
    }
    case ScoreKind::kDistMult: {
      double acc = 0.0;
      for (std::size_t i = 0; i < dim; ++i) acc += h[i] * r[i] * t[i];
      return acc;
    }
    case ScoreKind::kComplEx: {
      const std::size_t half = dim / 2;
      const double *a = h, *b = h + half;
      const double *c = r, *d = r + half;
      const double *e = t, *f = t + half;
      double acc = 0.0;
      for (std::size_t i = 0; i < half; ++i) {
        acc += (a[i] * c[i] - b[i] * d[i]) * e[i] +
               (a[i] * d[i] + b[i] * c[i]) * f[i];
      }
      return acc;
    }
  }
  throw std::runtime_error("unknown score kind");
}

// d(score)/d(h), d/d(r), d/d(t) scaled by `g`, accumulated into gh/gr/gt.
void accumulate_score_grads(ScoreKind kind, std::size_t dim, const double* h,
                            const double* r, const double* t, double g,
                            double* gh, double* gr, double* gt) {
  switch (kind) {
    case ScoreKind::kTransE: {
      double norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = h[i] + r[i] - t[i];
        norm += d * d;
      }
      norm = std::sqrt(norm);
      if (norm < 1e-12) return;  // flat at the exact translation point
      const double s = g / norm;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = h[i] + r[i] - t[i];
        gh[i] -= s * d;
        gr[i] -= s * d;
        gt[i] += s * d;
      }
      return;
    }
    case ScoreKind::kDistMult: {
      for (std::size_t i = 0; i < dim; ++i) {
        gh[i] += g * r[i] * t[i];
        gr[i] += g * h[i] * t[i];
        gt[i] += g * h[i] * r[i];
      }
      return;
    }
    case ScoreKind::kComplEx: {
      const std::size_t half = dim / 2;
      const double *a = h, *b = h + half;
      const double *c = r, *d = r + half;
      const double *e = t, *f = t + half;
      for (std::size_t i = 0; i < half; ++i) {
        gh[i] += g * (c[i] * e[i] + d[i] * f[i]);
        gh[half + i] += g * (-d[i] * e[i] + c[i] * f[i]);
        gr[i] += g * (a[i] * e[i] + b[i] * f[i]);
        gr[half + i] += g * (-b[i] * e[i] + a[i] * f[i]);
        gt[i] += g * (a[i] * c[i] - b[i] * d[i]);
        gt[half + i] += g * (a[i] * d[i] + b[i] * c[i]);
      }
      return;
    }
  }
}

double sigmoid_scalar(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// -log sigmoid(x), overflow-safe.
double softplus_neg(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Tensor m, v;
  std::int64_t t = 0;

  explicit Adam(double lr_, const Tensor& shape_like) : lr(lr_) {
    m = shape_like;
    m.fill(0.0);
    v = m;
  }
  void step(Tensor& param, const Tensor& grad) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double g = grad.data[i];
      m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
      v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
      param.data[i] -= lr * (m.data[i] / c1) / (std::sqrt(v.data[i] / c2) + eps);
    }
  }
};

std::uint64_t pair_key(EntityId h, RelationId r) {
  return (static_cast<std::uint64_t>(h) << 24) ^ static_cast<std::uint64_t>(r);
}

}  // namespace

double score(const EmbeddingTable& table, EntityId h, RelationId r, EntityId t) {
  return score_rows(table.kind, table.dim, table.entity_row(h),
                    table.relation_row(r), table.entity_row(t));
}

Tensor score_candidates(const EmbeddingTable& table, EntityId query_head,
                        RelationId query_rel, const std::vector<Action>& actions,
                        EntityId current) {
  if (actions.empty()) throw std::runtime_error("score_candidates: empty action set");
  Tensor out = Tensor::vector(actions.size());
  const double* h = table.entity_row(query_head);
  const double* r = table.relation_row(query_rel);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const EntityId target =
        actions[i].first == kSelfLoop ? current : actions[i].second;
    out.data[i] = score_rows(table.kind, table.dim, h, r, table.entity_row(target));
  }
  return out;
}

double embedding_mrr(const EmbeddingTable& table,
                     const std::vector<Triple>& queries,
                     const std::vector<Triple>& known, std::size_t entity_count) {
  std::unordered_map<std::uint64_t, std::unordered_set<EntityId>> answers;
  for (const Triple& t : known) answers[pair_key(t.head, t.relation)].insert(t.tail);
  double total = 0.0;
  for (const Triple& q : queries) {
    const double target = score(table, q.head, q.relation, q.tail);
    const auto* siblings = [&]() -> const std::unordered_set<EntityId>* {
      auto it = answers.find(pair_key(q.head, q.relation));
      return it == answers.end() ? nullptr : &it->second;
    }();
    std::size_t rank = 1;
    for (std::size_t e = 0; e < entity_count; ++e) {
      const EntityId id = static_cast<EntityId>(e);
      if (id == q.tail) continue;
      if (siblings && siblings->contains(id)) continue;
      if (score(table, q.head, q.relation, id) > target) ++rank;
    }
    total += 1.0 / static_cast<double>(rank);
  }
  return queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
}

PretrainResult pretrain(const PretrainConfig& config,
                        const std::vector<Triple>& corpus,
                        const Vocabulary& vocab,
                        const std::vector<Triple>& valid, Rng rng) {
  if (corpus.empty()) throw std::runtime_error("pretrain: empty triple set");
  if (config.kind == ScoreKind::kComplEx && config.dim % 2 != 0)
    throw std::runtime_error("pretrain: complex embeddings need an even dim");

  const std::size_t ne = vocab.entity_count();
  const std::size_t nr = vocab.relation_count();
  const std::size_t dim = config.dim;

  PretrainResult result;
  EmbeddingTable& table = result.table;
  table.kind = config.kind;
  table.dim = dim;
  table.entities = init_uniform_rows(ne, dim, rng, /*unit_norm=*/true);
  table.relations = init_uniform_rows(nr, dim, rng, /*unit_norm=*/true);
  // Reserved relations stay at zero and are never trained.
  for (std::size_t i = 0; i < dim; ++i) {
    table.relations.data[kSelfLoop * dim + i] = 0.0;
    table.relations.data[kStart * dim + i] = 0.0;
  }

  // Training set: forward plus reversed links.
  std::vector<Triple> samples;
  samples.reserve(2 * corpus.size());
  for (const Triple& t : corpus) {
    samples.push_back(t);
    samples.push_back({t.tail, Vocabulary::inverse_of(t.relation), t.head});
  }

  std::unordered_set<std::uint64_t> dedup;
  {
    std::vector<Triple> unique;
    unique.reserve(samples.size());
    for (const Triple& t : samples) {
      const std::uint64_t key = (static_cast<std::uint64_t>(t.head) << 42) |
                                (static_cast<std::uint64_t>(t.relation) << 21) |
                                static_cast<std::uint64_t>(t.tail);
      if (dedup.insert(key).second) unique.push_back(t);
    }
    samples.swap(unique);
  }

  Adam ent_opt(config.learning_rate, table.entities);
  Adam rel_opt(config.learning_rate, table.relations);
  Tensor ent_grad = table.entities;
  Tensor rel_grad = table.relations;

  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  EmbeddingTable best = table;
  double best_mrr = -1.0;
  std::size_t best_epoch = 0, since_best = 0;
  std::vector<Triple> known_for_valid;  // train + valid answers, built lazily

  Rng shuffle_rng = rng.stream("shuffle");
  Rng neg_rng = rng.stream("negatives");

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with our own rng for cross-platform determinism.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t loss_terms = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ent_grad.fill(0.0);
      rel_grad.fill(0.0);

      for (std::size_t k = start; k < end; ++k) {
        const Triple& pos = samples[order[k]];
        double* gh = ent_grad.data.data() + pos.head * dim;
        double* gr = rel_grad.data.data() + pos.relation * dim;
        double* gt = ent_grad.data.data() + pos.tail * dim;
        const double* h = table.entity_row(pos.head);
        const double* r = table.relation_row(pos.relation);
        const double* t = table.entity_row(pos.tail);

        const double s_pos = score_rows(config.kind, dim, h, r, t);
        epoch_loss += softplus_neg(s_pos);
        // d/ds of -log sigmoid(s) = sigmoid(s) - 1.
        accumulate_score_grads(config.kind, dim, h, r, t,
                               sigmoid_scalar(s_pos) - 1.0, gh, gr, gt);

        for (std::size_t n = 0; n < config.negatives; ++n) {
          Triple neg = pos;
          EntityId corrupt =
              static_cast<EntityId>(neg_rng.below(static_cast<std::uint64_t>(ne)));
          if (n % 2 == 0)
            neg.tail = corrupt;
          else
            neg.head = corrupt;
          const double* nh = table.entity_row(neg.head);
          const double* nt = table.entity_row(neg.tail);
          const double s_neg = score_rows(config.kind, dim, nh, r, nt);
          epoch_loss += softplus_neg(-s_neg);
          // d/ds of -log(1 - sigmoid(s)) = sigmoid(s).
          accumulate_score_grads(config.kind, dim, nh, r, nt,
                                 sigmoid_scalar(s_neg),
                                 ent_grad.data.data() + neg.head * dim, gr,
                                 ent_grad.data.data() + neg.tail * dim);
        }
        loss_terms += 1 + config.negatives;
      }

      if (config.l2 > 0.0) {
        for (std::size_t i = 0; i < ent_grad.size(); ++i)
          ent_grad.data[i] += config.l2 * table.entities.data[i];
        for (std::size_t i = 2 * dim; i < rel_grad.size(); ++i)
          rel_grad.data[i] += config.l2 * table.relations.data[i];
      }
      // Reserved rows never move.
      std::fill(rel_grad.data.begin(), rel_grad.data.begin() + 2 * dim, 0.0);

      ent_opt.step(table.entities, ent_grad);
      rel_opt.step(table.relations, rel_grad);
      for (std::size_t i = 0; i < dim; ++i) {
        table.relations.data[kSelfLoop * dim + i] = 0.0;
        table.relations.data[kStart * dim + i] = 0.0;
      }

      if (config.kind == ScoreKind::kTransE) {
        // Project entity rows back into the unit ball.
        for (std::size_t e = 0; e < ne; ++e) {
          double* row = table.entities.data.data() + e * dim;
          double norm = 0.0;
          for (std::size_t i = 0; i < dim; ++i) norm += row[i] * row[i];
          norm = std::sqrt(norm);
          if (norm > 1.0)
            for (std::size_t i = 0; i < dim; ++i) row[i] /= norm;
        }
      }
    }

    const double mean_loss =
        loss_terms ? epoch_loss / static_cast<double>(loss_terms) : 0.0;
    if (!std::isfinite(mean_loss))
      throw std::runtime_error("pretrain: loss diverged (non-finite) at epoch " +
                               std::to_string(epoch));
    result.epoch_loss.push_back(mean_loss);

    double mrr = 0.0;
    if (!valid.empty()) {
      if (known_for_valid.empty()) {
        known_for_valid = samples;
        known_for_valid.insert(known_for_valid.end(), valid.begin(), valid.end());
      }
      mrr = embedding_mrr(table, valid, known_for_valid, ne);
    }
    result.valid_mrr.push_back(mrr);
    if (mrr > best_mrr) {
      best_mrr = mrr;
      best_epoch = epoch;
      best = table;
      since_best = 0;
    } else if (++since_best > config.patience && !valid.empty()) {
      break;
    }
  }

  if (best_mrr >= 0.0 && !valid.empty()) {
    result.table = best;
    result.best_valid_mrr = best_mrr;
    result.best_epoch = best_epoch;
  }
  return result;
}

void save_embeddings(const EmbeddingTable& table, const std::string& path) {
  BinaryWriter w(path);
  w.write_bytes("KGE1", 4);
  w.write_u32(static_cast<std::uint32_t>(table.kind));
  w.write_u32(static_cast<std::uint32_t>(table.dim));
  w.write_u64(table.entities.rows());
  w.write_u64(table.relations.rows());
  w.write_doubles(table.entities.data);
  w.write_doubles(table.relations.data);
}

EmbeddingTable load_embeddings(const std::string& path) {
  BinaryReader r(path);
  char magic[4];
  r.read_bytes(magic, 4);
  if (std::memcmp(magic, "KGE1", 4) != 0)
    throw std::runtime_error("not an embedding checkpoint: " + path);
  EmbeddingTable table;
  table.kind = static_cast<ScoreKind>(r.read_u32());
  table.dim = r.read_u32();
  const std::uint64_t ne = r.read_u64();
  const std::uint64_t nr = r.read_u64();
  table.entities = Tensor::matrix(ne, table.dim);
  table.relations = Tensor::matrix(nr, table.dim);
  r.read_doubles(table.entities.data);
  r.read_doubles(table.relations.data);
  return table;
}

Tensor init_uniform_rows(std::size_t rows, std::size_t cols, Rng& rng,
                         bool unit_norm) {
  Tensor t = init_uniform(rows, cols, rng);
  if (unit_norm) {
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = t.data.data() + r * cols;
      double norm = 0.0;
      for (std::size_t i = 0; i < cols; ++i) norm += row[i] * row[i];
      norm = std::sqrt(norm);
      if (norm > 1e-12)
        for (std::size_t i = 0; i < cols; ++i) row[i] /= norm;
    }
  }
  return t;
}

}  // namespace kgpf
