#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "kgpf/kg.hpp"

using namespace kgpf;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path.string();
}

}  // namespace

TEST_CASE("load_triples: counts, order, vocabulary") {
  const std::string path =
      write_temp("kgpf_t1.txt", "a\tr\tb\nb\tr\tc\n");
  Vocabulary vocab;
  auto loaded = load_triples(path, vocab);
  CHECK(loaded.triples.size() == 2);
  CHECK(vocab.entity_count() == 3);
  // One loaded relation (plus reserved SELF_LOOP/START and the inverse).
  CHECK(vocab.relation_count() == 4);
  CHECK(vocab.entity_id("a") == 0);
  CHECK(vocab.entity_id("b") == 1);
  CHECK(vocab.entity_id("c") == 2);
  CHECK(vocab.relation_id("r") == 2);
  CHECK(vocab.relation_id("r_inv") == 3);
  CHECK(loaded.triples[0] == Triple{0, 2, 1});
  CHECK(loaded.triples[1] == Triple{1, 2, 2});
}

TEST_CASE("load_triples: malformed and empty files") {
  Vocabulary vocab;
  const std::string two_fields = write_temp("kgpf_t2.txt", "a\tr\tb\na\tr\n");
  CHECK_THROWS_WITH_AS(load_triples(two_fields, vocab),
                       doctest::Contains(":2"), std::runtime_error);
  const std::string empty = write_temp("kgpf_t3.txt", "");
  CHECK_THROWS(load_triples(empty, vocab));
  CHECK_THROWS(load_triples("/nonexistent/file.txt", vocab));
}

TEST_CASE("vocabulary inverse pairing") {
  Vocabulary vocab;
  RelationId r1 = vocab.add_relation("likes");
  RelationId r2 = vocab.add_relation("knows");
  CHECK(Vocabulary::inverse_of(Vocabulary::inverse_of(r1)) == r1);
  CHECK(Vocabulary::inverse_of(Vocabulary::inverse_of(r2)) == r2);
  CHECK(vocab.relation_name(Vocabulary::inverse_of(r1)) == "likes_inv");
  CHECK(!Vocabulary::has_inverse(kSelfLoop));
  CHECK(!Vocabulary::has_inverse(kStart));
  CHECK(Vocabulary::is_inverse(r1 + 1));
  CHECK(!Vocabulary::is_inverse(r1));
}

TEST_CASE("build_graph: augmentation") {
  Vocabulary vocab;
  EntityId a = vocab.add_entity("a");
  EntityId b = vocab.add_entity("b");
  RelationId r = vocab.add_relation("r");
  KnowledgeGraph kg({{a, r, b}}, vocab);

  const auto& adj_a = kg.adjacency(a);
  REQUIRE(adj_a.size() == 2);
  CHECK(adj_a[0] == Action{kSelfLoop, a});
  CHECK(adj_a[1] == Action{r, b});
  const auto& adj_b = kg.adjacency(b);
  REQUIRE(adj_b.size() == 2);
  CHECK(adj_b[0] == Action{kSelfLoop, b});
  CHECK(adj_b[1] == Action{Vocabulary::inverse_of(r), a});
}

TEST_CASE("build_graph: degenerate and duplicate inputs") {
  Vocabulary vocab;
  vocab.add_entity("a");
  vocab.add_entity("b");
  vocab.add_entity("c");
  KnowledgeGraph empty({}, vocab);
  for (EntityId e = 0; e < 3; ++e) {
    REQUIRE(empty.adjacency(e).size() == 1);
    CHECK(empty.adjacency(e)[0] == Action{kSelfLoop, e});
  }

  Vocabulary vocab2;
  EntityId a = vocab2.add_entity("a");
  EntityId b = vocab2.add_entity("b");
  RelationId r = vocab2.add_relation("r");
  KnowledgeGraph dup({{a, r, b}, {a, r, b}}, vocab2);
  CHECK(dup.duplicates_dropped() == 1);
  // Set-based oracle: no duplicate (relation, entity) pairs anywhere.
  for (EntityId e = 0; e < 2; ++e) {
    std::set<Action> uniq(dup.adjacency(e).begin(), dup.adjacency(e).end());
    CHECK(uniq.size() == dup.adjacency(e).size());
  }
}

TEST_CASE("graph invariants: inverse closure and entry count") {
  Vocabulary vocab;
  std::vector<Triple> triples;
  const char* names[] = {"a", "b", "c", "d", "e"};
  for (const char* n : names) vocab.add_entity(n);
  RelationId r1 = vocab.add_relation("r1");
  RelationId r2 = vocab.add_relation("r2");
  triples.push_back({0, r1, 1});
  triples.push_back({1, r1, 2});
  triples.push_back({1, r2, 3});
  triples.push_back({3, r2, 4});
  triples.push_back({4, r1, 0});
  KnowledgeGraph kg(triples, vocab);

  for (EntityId e = 0; e < 5; ++e) {
    for (const auto& [rel, to] : kg.adjacency(e)) {
      if (rel == kSelfLoop) continue;
      const auto& back = kg.adjacency(to);
      const Action inverse{Vocabulary::inverse_of(rel), e};
      CHECK(std::find(back.begin(), back.end(), inverse) != back.end());
    }
  }
  CHECK(kg.edge_entry_count() == 2 * triples.size() + 5);

  CHECK(kg.contains(0, r1, 1));
  CHECK(!kg.contains(1, r1, 0));
}

TEST_CASE("action_set: truncation and determinism") {
  Vocabulary vocab;
  EntityId hub = vocab.add_entity("hub");
  std::vector<Triple> triples;
  for (int i = 0; i < 500; ++i) {
    EntityId t = vocab.add_entity("t" + std::to_string(i));
    RelationId r = vocab.add_relation("r" + std::to_string(i % 7));
    triples.push_back({hub, r, t});
  }
  KnowledgeGraph kg(triples, vocab);

  auto a = action_set(kg, hub, 200);
  CHECK(a.size() == 200);
  CHECK(a[0].first == kSelfLoop);
  CHECK(a[0].second == hub);
  // Truncation keeps the smallest (relation, entity) pairs, in order.
  for (std::size_t i = 2; i < a.size(); ++i) CHECK(a[i - 1] < a[i]);

  auto b = action_set(kg, hub, 200);
  CHECK(a == b);

  auto small = action_set(kg, vocab.entity_id("t0"), 10);
  CHECK(small.size() == 2);  // self-loop + inverse edge back to the hub

  Vocabulary iso_vocab;
  EntityId lone = iso_vocab.add_entity("lone");
  KnowledgeGraph iso({}, iso_vocab);
  auto only = action_set(iso, lone, 5);
  REQUIRE(only.size() == 1);
  CHECK(only[0] == Action{kSelfLoop, lone});

  CHECK_THROWS(action_set(kg, 10000, 5));
  CHECK_THROWS(action_set(kg, hub, 0));
}

TEST_CASE("action_set keeps self-loop plus two edges under no cap pressure") {
  Vocabulary vocab;
  EntityId a = vocab.add_entity("a");
  EntityId b = vocab.add_entity("b");
  EntityId c = vocab.add_entity("c");
  RelationId r = vocab.add_relation("r");
  KnowledgeGraph kg({{a, r, b}, {a, r, c}}, vocab);
  CHECK(action_set(kg, a, 10).size() == 3);
}

TEST_CASE("filter_leakage") {
  Vocabulary vocab;
  for (const char* n : {"a", "b", "c", "d"}) vocab.add_entity(n);
  RelationId r = vocab.add_relation("r");
  std::vector<Triple> train = {{0, r, 1}, {2, r, 3}};
  std::vector<Triple> test = {{0, r, 1}};

  auto filtered = filter_leakage(train, {}, test);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0] == Triple{2, r, 3});

  auto unchanged = filter_leakage(train, {}, {{1, r, 2}});
  CHECK(unchanged.size() == 2);

  auto emptied = filter_leakage(train, train, {});
  CHECK(emptied.empty());
}

TEST_CASE("UMLS loader reports the published counts") {
  const std::string dir = std::string(KGPF_DATA_DIR) + "/umls";
  Dataset ds = load_dataset(dir);
  CHECK(ds.train.size() == 5216);
  CHECK(ds.valid.size() == 652);
  CHECK(ds.test.size() == 661);
  CHECK(ds.vocab.entity_count() == 135);
  CHECK((ds.vocab.relation_count() - 2) / 2 == 46);
  CHECK(ds.skipped_valid == 0);
  CHECK(ds.skipped_test == 0);
  CHECK(!ds.has_background_file);
  CHECK(ds.background.size() == ds.train.size());

  KnowledgeGraph kg(ds.background, ds.vocab);
  CHECK(kg.edge_entry_count() == 2 * 5216 + 135);
}

TEST_CASE("vocabulary json dump") {
  Vocabulary vocab;
  vocab.add_entity("alpha");
  vocab.add_relation("rel");
  const std::string j = vocab.to_json();
  CHECK(j.find("\"alpha\": 0") != std::string::npos);
  CHECK(j.find("\"rel\": 2") != std::string::npos);
  CHECK(j.find("\"rel_inv\": 3") != std::string::npos);
  CHECK(j.find("\"SELF_LOOP\": 0") != std::string::npos);
}
