#include "kgpf/synth.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "kgpf/rng.hpp"

namespace kgpf {

namespace {

std::string tsv(const std::string& h, const std::string& r, const std::string& t) {
  return h + "\t" + r + "\t" + t;
}

}  // namespace

int bfs_distance(const KnowledgeGraph& kg, EntityId from, EntityId to,
                 int limit) {
  if (from == to) return 0;
  std::vector<int> dist(kg.entity_count(), -1);
  std::deque<EntityId> frontier{from};
  dist[from] = 0;
  while (!frontier.empty()) {
    const EntityId u = frontier.front();
    frontier.pop_front();
    if (dist[u] >= limit) continue;
    for (const Action& a : kg.adjacency(u)) {
      if (a.first == kSelfLoop) continue;
      if (dist[a.second] < 0) {
        dist[a.second] = dist[u] + 1;
        if (a.second == to) return dist[a.second];
        frontier.push_back(a.second);
      }
    }
  }
  return -1;
}

SynthDataset generate_synth(const SynthConfig& config) {
  if (config.chains < 1) throw std::runtime_error("synth: need at least one chain");
  if (config.distractor_ratio < 0.0)
    throw std::runtime_error("synth: distractor ratio must be >= 0");
  for (int d : config.distances) {
    if (d < 2) throw std::runtime_error("synth: distances must be >= 2");
  }

  Rng root(config.seed);
  SynthDataset ds;
  // Parallel structured view for the BFS self-check.
  struct QueryCheck {
    std::string head, rel, tail;
    int distance;
  };
  std::vector<QueryCheck> checks;
  std::set<std::string> background_seen;
  auto emit_background = [&](const std::string& line) {
    if (background_seen.insert(line).second) ds.background.push_back(line);
  };

  for (int d : config.distances) {
    Rng rng = root.at(static_cast<std::uint64_t>(d));
    const std::string dtag = "d" + std::to_string(d);
    const std::size_t pool = std::max<std::size_t>(config.entities_per_layer, 2);

    auto hop_rel = [&](int k) {
      return "hop_" + dtag + "_" + std::to_string(k);
    };
    // Position k edge u -> v; the second half of a symmetric path is stored
    // reversed so the walk crosses it through the inverse relation.
    const int flip_from = config.symmetric_paths ? (d + 1) / 2 : d;
    auto emit_hop = [&](int k, const std::string& u, const std::string& v) {
      if (k < flip_from)
        emit_background(tsv(u, hop_rel(k), v));
      else
        emit_background(tsv(v, hop_rel(d - 1 - k), u));
    };
    auto decoy_name = [&](int position, std::size_t j) {
      return dtag + "_x" + std::to_string(position) + "_" + std::to_string(j);
    };

    // Decoy continuations keep wrong branches alive for several hops.
    for (int k = 1; k < d; ++k) {
      for (std::size_t j = 0; j < pool; ++j) {
        const std::size_t next = rng.below(pool);
        emit_hop(k, decoy_name(k, j), decoy_name(k + 1, next));
      }
    }

    std::vector<std::string> queries;
    for (std::size_t c = 0; c < config.chains; ++c) {
      std::vector<std::string> nodes;
      for (int k = 0; k <= d; ++k)
        nodes.push_back(dtag + "_c" + std::to_string(c) + "_n" + std::to_string(k));
      for (int k = 0; k < d; ++k) emit_hop(k, nodes[k], nodes[k + 1]);
      queries.push_back(tsv(nodes[0], "path_" + dtag, nodes[d]) + "\t" +
                        std::to_string(d));
      checks.push_back({nodes[0], "path_" + dtag, nodes[d], d});

      // Decoy branches off this chain with the true relation labels.
      const std::size_t branches = static_cast<std::size_t>(
          config.distractor_ratio * static_cast<double>(d) + 0.5);
      for (std::size_t bi = 0; bi < branches; ++bi) {
        const int k = static_cast<int>(rng.below(static_cast<std::uint64_t>(d)));
        const std::size_t j = rng.below(pool);
        emit_hop(k, nodes[k], decoy_name(k + 1, j));
      }
    }

    // Disjoint chain-level splits.
    std::vector<std::size_t> order(queries.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
    const std::size_t n_valid = static_cast<std::size_t>(
        config.valid_fraction * static_cast<double>(queries.size()) + 0.5);
    const std::size_t n_test = static_cast<std::size_t>(
        config.test_fraction * static_cast<double>(queries.size()) + 0.5);
    for (std::size_t i = 0; i < order.size(); ++i) {
      const std::string& q = queries[order[i]];
      if (i < n_valid)
        ds.valid.push_back(q);
      else if (i < n_valid + n_test)
        ds.test.push_back(q);
      else
        ds.train.push_back(q);
    }
  }

  // Self-check: every labeled distance is the exact BFS hop count, and no
  // query triple leaked into the background.
  Vocabulary vocab;
  std::vector<Triple> bg;
  for (const std::string& line : ds.background) {
    const auto tab1 = line.find('\t');
    const auto tab2 = line.find('\t', tab1 + 1);
    bg.push_back({vocab.add_entity(line.substr(0, tab1)),
                  vocab.add_relation(line.substr(tab1 + 1, tab2 - tab1 - 1)),
                  vocab.add_entity(line.substr(tab2 + 1))});
  }
  KnowledgeGraph kg(bg, vocab);
  for (const QueryCheck& q : checks) {
    const EntityId h = kg.vocab().entity_id(q.head);
    const EntityId t = kg.vocab().entity_id(q.tail);
    if (h < 0 || t < 0)
      throw std::runtime_error("synth self-check: query entity missing from background");
    const int found = bfs_distance(kg, h, t, q.distance + 2);
    if (found != q.distance)
      throw std::runtime_error("synth self-check: BFS distance " +
                               std::to_string(found) + " != label " +
                               std::to_string(q.distance));
    const RelationId r = kg.vocab().relation_id(q.rel);
    if (r >= 0 && kg.contains(h, r, t))
      throw std::runtime_error("synth self-check: query triple leaked into background");
  }
  return ds;
}

void write_synth(const SynthDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write_lines = [&](const std::string& name,
                         const std::vector<std::string>& lines) {
    std::string joined;
    for (const std::string& l : lines) {
      joined += l;
      joined += '\n';
    }
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("synth: cannot write " + name);
    out << joined;
  };
  write_lines("graph.txt", ds.background);
  write_lines("train.txt", ds.train);
  write_lines("valid.txt", ds.valid);
  write_lines("test.txt", ds.test);
}

}  // namespace kgpf
