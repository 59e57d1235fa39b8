#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kgpf/search.hpp"

namespace kgpf {

struct RankedAnswer {
  EntityId entity = -1;
  double score = 0.0;  // accumulated log-probability of the best path there
  std::size_t rank = 0;
  std::vector<Action> path;
  StopReason stopped_by = StopReason::kMaxStep;
};

// Top-K trajectories by accumulated log-probability; final entities are
// deduplicated keeping each entity's best-scoring path, sorted by score
// descending with entity-id ascending tie-break. No action dropout here.
std::vector<RankedAnswer> beam_search(const KnowledgeGraph& kg,
                                      const PolicyParameters& policy,
                                      const EmbeddingTable& table,
                                      const Query& query, std::size_t beam_width,
                                      const RolloutConfig& cfg);

constexpr double kUnranked = std::numeric_limits<double>::infinity();

// Mean reciprocal rank; 1/inf counts as 0.
double mrr(const std::vector<double>& ranks);
// Fraction of ranks <= n.
double hits_at(const std::vector<double>& ranks, std::size_t n);

// (head, relation) -> known tails, for the filtered ranking convention.
class KnownAnswers {
 public:
  void add(const std::vector<Triple>& triples);
  bool contains(EntityId head, RelationId rel, EntityId tail) const;

 private:
  std::unordered_map<std::uint64_t, std::unordered_set<EntityId>> map_;
};

struct MetricsReport {
  // Headline metrics use the filtered convention: other known answers are
  // removed from the beam candidates before ranking the labeled tail.
  double mrr = 0.0;
  double hits1 = 0.0, hits3 = 0.0, hits10 = 0.0;
  // Raw beam-rank variants (no filtering), reported alongside.
  double mrr_raw = 0.0;
  double hits1_raw = 0.0, hits3_raw = 0.0, hits10_raw = 0.0;
  std::vector<double> ranks;      // filtered, per query; inf when absent
  std::vector<double> ranks_raw;
  std::size_t unanswered = 0;     // true tail absent from the beam
  std::size_t skipped = 0;        // query head unknown to the graph
  // Distance label -> filtered MRR over queries carrying that label.
  std::vector<std::pair<int, double>> per_distance_mrr;

  std::string to_json() const;
};

struct EvalOptions {
  std::size_t beam_width = 128;
  int threads = 0;  // 0: hardware concurrency
};

// Beam-search evaluation over the query list. `known` drives the filtered
// ranks; `distances` (same length as queries, -1 for unlabeled) drives the
// per-distance breakdown. Optionally collects the top beam's trajectory per
// query into `paths_out`.
MetricsReport evaluate(const KnowledgeGraph& kg, const PolicyParameters& policy,
                       const EmbeddingTable& table,
                       const std::vector<Triple>& queries,
                       const std::vector<int>& distances,
                       const KnownAnswers& known, const RolloutConfig& cfg,
                       const EvalOptions& opts,
                       std::vector<RankedAnswer>* paths_out = nullptr);

}  // namespace kgpf
