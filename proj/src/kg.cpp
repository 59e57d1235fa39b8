#include "kgpf/kg.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kgpf {

namespace {

std::uint64_t triple_key(EntityId h, RelationId r, EntityId t) {
  // 21 bits each; plenty for the graphs this handles.
  return (static_cast<std::uint64_t>(h) << 42) |
         (static_cast<std::uint64_t>(r) << 21) | static_cast<std::uint64_t>(t);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

LoadedTriples load_lines(const std::string& path, Vocabulary& vocab,
                         bool grow_vocab, bool allow_distance) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open triple file: " + path);
  LoadedTriples result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const bool with_distance = allow_distance && fields.size() == 4;
    if (fields.size() != 3 && !with_distance)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected head<TAB>relation<TAB>tail");
    if (fields[0].empty() || fields[1].empty() || fields[2].empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty field");
    EntityId h, t;
    RelationId r;
    if (grow_vocab) {
      h = vocab.add_entity(fields[0]);
      r = vocab.add_relation(fields[1]);
      t = vocab.add_entity(fields[2]);
    } else {
      h = vocab.entity_id(fields[0]);
      r = vocab.relation_id(fields[1]);
      t = vocab.entity_id(fields[2]);
      if (h < 0 || r < 0 || t < 0) {
        ++result.skipped_unknown;
        continue;
      }
    }
    result.triples.push_back({h, r, t});
    int dist = -1;
    if (with_distance) {
      try {
        dist = std::stoi(fields[3]);
      } catch (...) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": bad distance label '" + fields[3] + "'");
      }
    }
    result.distances.push_back(dist);
  }
  if (result.triples.empty() && result.skipped_unknown == 0)
    throw std::runtime_error("empty triple file: " + path);
  return result;
}

}  // namespace

Vocabulary::Vocabulary() {
  relation_names_ = {"SELF_LOOP", "START"};
  relation_ids_ = {{"SELF_LOOP", kSelfLoop}, {"START", kStart}};
}

EntityId Vocabulary::add_entity(const std::string& name) {
  auto it = entity_ids_.find(name);
  if (it != entity_ids_.end()) return it->second;
  EntityId id = static_cast<EntityId>(entity_names_.size());
  entity_names_.push_back(name);
  entity_ids_.emplace(name, id);
  return id;
}

RelationId Vocabulary::add_relation(const std::string& name) {
  auto it = relation_ids_.find(name);
  if (it != relation_ids_.end()) return it->second;
  RelationId id = static_cast<RelationId>(relation_names_.size());
  relation_names_.push_back(name);
  relation_names_.push_back(name + "_inv");
  relation_ids_.emplace(name, id);
  relation_ids_.emplace(name + "_inv", id + 1);
  return id;
}

EntityId Vocabulary::entity_id(const std::string& name) const {
  auto it = entity_ids_.find(name);
  return it == entity_ids_.end() ? -1 : it->second;
}

RelationId Vocabulary::relation_id(const std::string& name) const {
  auto it = relation_ids_.find(name);
  return it == relation_ids_.end() ? -1 : it->second;
}

std::string Vocabulary::to_json() const {
  nlohmann::json j;
  auto& ents = j["entities"] = nlohmann::json::object();
  for (std::size_t i = 0; i < entity_names_.size(); ++i)
    ents[entity_names_[i]] = i;
  auto& rels = j["relations"] = nlohmann::json::object();
  for (std::size_t i = 0; i < relation_names_.size(); ++i)
    rels[relation_names_[i]] = i;
  return j.dump(2);
}

LoadedTriples load_triples(const std::string& path, Vocabulary& vocab) {
  return load_lines(path, vocab, /*grow_vocab=*/true, /*allow_distance=*/false);
}

LoadedTriples load_queries(const std::string& path, Vocabulary& vocab,
                           bool grow_vocab) {
  return load_lines(path, vocab, grow_vocab, /*allow_distance=*/true);
}

KnowledgeGraph::KnowledgeGraph(std::vector<Triple> triples, Vocabulary vocab)
    : vocab_(std::move(vocab)) {
  triples_.reserve(triples.size());
  for (const Triple& t : triples) {
    if (t.head < 0 || t.tail < 0 ||
        static_cast<std::size_t>(t.head) >= vocab_.entity_count() ||
        static_cast<std::size_t>(t.tail) >= vocab_.entity_count() ||
        t.relation < 2 ||
        static_cast<std::size_t>(t.relation) >= vocab_.relation_count())
      throw std::runtime_error("build_graph: triple references unknown ids");
    if (membership_.insert(triple_key(t.head, t.relation, t.tail)).second)
      triples_.push_back(t);
    else
      ++duplicates_dropped_;
  }
  if (duplicates_dropped_ > 0)
    std::cerr << "[kg] dropped " << duplicates_dropped_
              << " duplicate triples\n";

  adjacency_.resize(vocab_.entity_count());
  for (EntityId e = 0; e < static_cast<EntityId>(adjacency_.size()); ++e)
    adjacency_[e].push_back({kSelfLoop, e});
  for (const Triple& t : triples_) {
    adjacency_[t.head].push_back({t.relation, t.tail});
    adjacency_[t.tail].push_back({Vocabulary::inverse_of(t.relation), t.head});
  }
  for (auto& list : adjacency_) {
    std::sort(list.begin() + 1, list.end());
    list.erase(std::unique(list.begin() + 1, list.end()), list.end());
  }
}

const std::vector<Action>& KnowledgeGraph::adjacency(EntityId e) const {
  if (e < 0 || static_cast<std::size_t>(e) >= adjacency_.size())
    throw std::runtime_error("adjacency: unknown entity id " + std::to_string(e));
  return adjacency_[e];
}

std::size_t KnowledgeGraph::edge_entry_count() const {
  std::size_t n = 0;
  for (const auto& list : adjacency_) n += list.size();
  return n;
}

bool KnowledgeGraph::contains(EntityId h, RelationId r, EntityId t) const {
  return membership_.contains(triple_key(h, r, t));
}

std::vector<Action> action_set(const KnowledgeGraph& kg, EntityId entity,
                               std::size_t cap) {
  if (cap < 1) throw std::runtime_error("action_set: cap must be >= 1");
  const auto& adj = kg.adjacency(entity);
  if (adj.size() <= cap) return adj;
  return {adj.begin(), adj.begin() + cap};
}

std::vector<Triple> filter_leakage(const std::vector<Triple>& train,
                                   const std::vector<Triple>& valid,
                                   const std::vector<Triple>& test) {
  std::unordered_set<std::uint64_t> held;
  for (const Triple& t : valid) held.insert(triple_key(t.head, t.relation, t.tail));
  for (const Triple& t : test) held.insert(triple_key(t.head, t.relation, t.tail));
  std::vector<Triple> out;
  out.reserve(train.size());
  for (const Triple& t : train) {
    if (!held.contains(triple_key(t.head, t.relation, t.tail))) out.push_back(t);
  }
  if (out.size() != train.size())
    std::cerr << "[kg] leakage filter dropped " << train.size() - out.size()
              << " train triples\n";
  if (out.empty() && !train.empty())
    std::cerr << "[kg] warning: leakage filter removed every train triple\n";
  return out;
}

std::vector<Triple> Dataset::pretrain_corpus() const {
  std::vector<Triple> corpus = background;
  std::unordered_set<std::uint64_t> seen;
  for (const Triple& t : background)
    seen.insert(triple_key(t.head, t.relation, t.tail));
  for (const Triple& t : train) {
    if (seen.insert(triple_key(t.head, t.relation, t.tail)).second)
      corpus.push_back(t);
  }
  return corpus;
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  Dataset ds;
  const std::string graph_path = (fs::path(dir) / "graph.txt").string();
  ds.has_background_file = fs::exists(graph_path);

  std::vector<Triple> graph_raw;
  if (ds.has_background_file)
    graph_raw = load_triples(graph_path, ds.vocab).triples;

  auto train = load_queries((fs::path(dir) / "train.txt").string(), ds.vocab,
                            /*grow_vocab=*/true);
  auto valid = load_queries((fs::path(dir) / "valid.txt").string(), ds.vocab,
                            /*grow_vocab=*/false);
  auto test = load_queries((fs::path(dir) / "test.txt").string(), ds.vocab,
                           /*grow_vocab=*/false);

  ds.train = filter_leakage(train.triples, valid.triples, test.triples);
  // Keep distance labels aligned with the filtered list.
  if (ds.train.size() == train.triples.size()) {
    ds.train_dist = train.distances;
  } else {
    std::unordered_set<std::uint64_t> held;
    for (const Triple& t : valid.triples)
      held.insert(triple_key(t.head, t.relation, t.tail));
    for (const Triple& t : test.triples)
      held.insert(triple_key(t.head, t.relation, t.tail));
    for (std::size_t i = 0; i < train.triples.size(); ++i) {
      const Triple& t = train.triples[i];
      if (!held.contains(triple_key(t.head, t.relation, t.tail)))
        ds.train_dist.push_back(train.distances[i]);
    }
  }
  ds.valid = std::move(valid.triples);
  ds.valid_dist = std::move(valid.distances);
  ds.test = std::move(test.triples);
  ds.test_dist = std::move(test.distances);
  ds.skipped_valid = valid.skipped_unknown;
  ds.skipped_test = test.skipped_unknown;

  ds.background = ds.has_background_file
                      ? filter_leakage(graph_raw, ds.valid, ds.test)
                      : ds.train;
  return ds;
}

}  // namespace kgpf
