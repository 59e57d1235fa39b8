#pragma once

#include <string>
#include <vector>

#include "kgpf/kg.hpp"
#include "kgpf/rng.hpp"
#include "kgpf/tensor.hpp"

namespace kgpf {

enum class ScoreKind { kTransE, kDistMult, kComplEx };

std::string score_kind_name(ScoreKind kind);
ScoreKind score_kind_from(const std::string& name);

// Pretrained entity/relation vectors and the scoring function over them.
// Immutable after pretraining; SELF_LOOP and START rows stay zero. ComplEx
// packs dim/2 complex pairs as [real half | imaginary half].
struct EmbeddingTable {
  ScoreKind kind = ScoreKind::kComplEx;
  std::size_t dim = 0;
  Tensor entities;   // |E| x dim
  Tensor relations;  // |R| x dim

  const double* entity_row(EntityId e) const { return entities.data.data() + e * dim; }
  const double* relation_row(RelationId r) const { return relations.data.data() + r * dim; }
};

// Plausibility of (h, r, t); higher is more plausible for every kind
// (TransE is the negated translation distance).
double score(const EmbeddingTable& table, EntityId h, RelationId r, EntityId t);

// Scores (query_head, query_rel, candidate) for each action's target entity,
// aligned with the action order; the self-loop candidate is the current
// entity itself.
Tensor score_candidates(const EmbeddingTable& table, EntityId query_head,
                        RelationId query_rel, const std::vector<Action>& actions,
                        EntityId current);

struct PretrainConfig {
  ScoreKind kind = ScoreKind::kComplEx;
  std::size_t dim = 100;
  std::size_t negatives = 10;    // per positive, tail/head corruption alternating
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double l2 = 0.0;
  std::size_t epochs = 500;
  std::size_t patience = 20;     // epochs without validation MRR improvement
};

struct PretrainResult {
  EmbeddingTable table;
  std::vector<double> epoch_loss;   // mean BCE per epoch
  std::vector<double> valid_mrr;    // filtered tail-ranking MRR per epoch
  double best_valid_mrr = 0.0;
  std::size_t best_epoch = 0;
};

// Mini-batch Adam on binary cross-entropy with uniformly corrupted negatives.
// Trains on `corpus` plus the reversed link of every corpus triple. Early
// stops on validation MRR; returns the best table seen. Deterministic given
// the rng. Aborts with a diagnostic if the loss turns non-finite.
PretrainResult pretrain(const PretrainConfig& config,
                        const std::vector<Triple>& corpus,
                        const Vocabulary& vocab,
                        const std::vector<Triple>& valid, Rng rng);

// Filtered tail-ranking MRR of the raw embedding scores: rank of the true
// tail among all entities, other known answers (from `known`) masked.
double embedding_mrr(const EmbeddingTable& table,
                     const std::vector<Triple>& queries,
                     const std::vector<Triple>& known, std::size_t entity_count);

// Versioned binary checkpoint, magic "KGE1"; row-major little-endian doubles.
void save_embeddings(const EmbeddingTable& table, const std::string& path);
EmbeddingTable load_embeddings(const std::string& path);

// Uniform +-1/sqrt(cols) rows, optionally rescaled to unit L2 norm.
Tensor init_uniform_rows(std::size_t rows, std::size_t cols, Rng& rng,
                         bool unit_norm);

}  // namespace kgpf
