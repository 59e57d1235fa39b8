#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace kgpf {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  bool operator==(const Triple&) const = default;
};

// (relation, entity) edge available from the current entity.
using Action = std::pair<RelationId, EntityId>;

// Reserved relation ids. Loaded relations take even ids from 2 up; each
// forward id r pairs with its inverse r+1, so inv(r) = r ^ 1.
constexpr RelationId kSelfLoop = 0;
constexpr RelationId kStart = 1;

class Vocabulary {
 public:
  Vocabulary();

  EntityId add_entity(const std::string& name);          // idempotent
  RelationId add_relation(const std::string& name);      // adds inverse too
  EntityId entity_id(const std::string& name) const;     // -1 if absent
  RelationId relation_id(const std::string& name) const; // -1 if absent
  const std::string& entity_name(EntityId id) const { return entity_names_[id]; }
  const std::string& relation_name(RelationId id) const { return relation_names_[id]; }

  std::size_t entity_count() const { return entity_names_.size(); }
  std::size_t relation_count() const { return relation_names_.size(); }

  static bool has_inverse(RelationId r) { return r >= 2; }
  static RelationId inverse_of(RelationId r) { return r ^ 1; }
  static bool is_inverse(RelationId r) { return r >= 2 && (r & 1); }

  // JSON dump {entities: {...}, relations: {...}}, emitted next to checkpoints.
  std::string to_json() const;

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_ids_;
  std::unordered_map<std::string, RelationId> relation_ids_;
};

struct LoadedTriples {
  std::vector<Triple> triples;            // file order
  std::vector<int> distances;             // per triple; -1 when column absent
  std::size_t skipped_unknown = 0;        // lines dropped under a frozen vocab
};

// Strict triple file: one head<TAB>relation<TAB>tail per non-empty line.
// Grows `vocab` in first-appearance order. Malformed lines and empty files
// raise with the offending line number.
LoadedTriples load_triples(const std::string& path, Vocabulary& vocab);

// Query files additionally allow a fourth column (reasoning distance).
// With grow_vocab=false, lines naming unknown entities/relations are counted
// in skipped_unknown instead of raising.
LoadedTriples load_queries(const std::string& path, Vocabulary& vocab,
                           bool grow_vocab);

class KnowledgeGraph {
 public:
  // Builds the augmented immutable graph: forward edge, inverse edge and one
  // self-loop per entity; duplicate input triples are stored once (count
  // reported through `duplicates_dropped`). Immutable afterwards; safe for
  // concurrent reads.
  KnowledgeGraph(std::vector<Triple> triples, Vocabulary vocab);

  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<Action>& adjacency(EntityId e) const;
  std::size_t entity_count() const { return adjacency_.size(); }
  std::size_t edge_entry_count() const;  // self-loops included
  bool contains(EntityId h, RelationId r, EntityId t) const;
  std::size_t duplicates_dropped() const { return duplicates_dropped_; }
  const std::vector<Triple>& stored_triples() const { return triples_; }

 private:
  Vocabulary vocab_;
  std::vector<Triple> triples_;  // deduplicated forward triples
  std::vector<std::vector<Action>> adjacency_;
  std::unordered_set<std::uint64_t> membership_;
  std::size_t duplicates_dropped_ = 0;
};

// Outgoing actions of `entity` truncated to `cap` entries; the self-loop stays
// at position 0 and truncation keeps the (relation, entity)-smallest edges.
std::vector<Action> action_set(const KnowledgeGraph& kg, EntityId entity,
                               std::size_t cap);

// Triples of `train` that appear in `valid` or `test` are dropped (warned to
// stderr; empty result additionally warned).
std::vector<Triple> filter_leakage(const std::vector<Triple>& train,
                                   const std::vector<Triple>& valid,
                                   const std::vector<Triple>& test);

// A dataset directory: train.txt / valid.txt / test.txt, plus optional
// graph.txt with background edges (when absent the filtered train split is
// the background). Vocabulary covers background + train; valid/test lines
// with unknown names are counted and skipped.
struct Dataset {
  Vocabulary vocab;
  std::vector<Triple> background;  // leakage-filtered graph edges
  std::vector<Triple> train, valid, test;
  std::vector<int> train_dist, valid_dist, test_dist;
  std::size_t skipped_valid = 0, skipped_test = 0;
  bool has_background_file = false;

  // Background plus train queries, deduplicated: what the embedding model
  // trains on (identical to background when there is no graph.txt).
  std::vector<Triple> pretrain_corpus() const;
};

Dataset load_dataset(const std::string& dir);

}  // namespace kgpf
