#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kgpf/kg.hpp"

namespace kgpf {

// Generator for reasoning benchmarks with controlled path lengths. For each
// distance d it emits `chains` disjoint d-hop paths sharing one relation
// sequence, a composed query relation whose answer is the path end, and
// decoy branches reusing the true relation labels so the next hop is never
// identifiable from the relation alone.
struct SynthConfig {
  std::vector<int> distances = {2, 3, 4, 5, 6, 7};
  std::size_t chains = 50;             // paths (= queries) per distance
  std::size_t entities_per_layer = 16; // decoy pool size per path position
  double distractor_ratio = 2.0;       // decoy edges per chain edge
  bool symmetric_paths = false;        // second half walks inverse edges
  double valid_fraction = 0.15;
  double test_fraction = 0.15;
  std::uint64_t seed = 7;
};

struct SynthDataset {
  std::vector<std::string> background;            // TSV lines h\tr\tt
  std::vector<std::string> train, valid, test;    // TSV + distance column
};

// Deterministic in the config. Every query's labeled tail is verified to be
// exactly its distance label away from the head by BFS over the augmented
// background graph; query triples never appear as background edges.
SynthDataset generate_synth(const SynthConfig& config);

// Writes graph.txt / train.txt / valid.txt / test.txt under dir.
void write_synth(const SynthDataset& ds, const std::string& dir);

// BFS hop distance over the augmented graph (inverse edges included,
// self-loops ignored); -1 when unreachable.
int bfs_distance(const KnowledgeGraph& kg, EntityId from, EntityId to,
                 int limit);

}  // namespace kgpf
