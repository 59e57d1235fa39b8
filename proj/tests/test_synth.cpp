#include "doctest.h"

#include <filesystem>
#include <set>

#include "kgpf/synth.hpp"

using namespace kgpf;

TEST_CASE("generate: single 2-hop chain shape") {
  SynthConfig cfg;
  cfg.distances = {2};
  cfg.chains = 1;
  cfg.distractor_ratio = 0.0;
  cfg.entities_per_layer = 2;
  cfg.valid_fraction = 0.0;
  cfg.test_fraction = 0.0;
  cfg.seed = 3;
  SynthDataset ds = generate_synth(cfg);

  REQUIRE(ds.train.size() == 1);
  CHECK(ds.train[0].find("path_d2") != std::string::npos);
  CHECK(ds.train[0].back() == '2');
  // The two hop edges of the chain are in the background.
  std::set<std::string> bg(ds.background.begin(), ds.background.end());
  CHECK(bg.count("d2_c0_n0\thop_d2_0\td2_c0_n1") == 1);
  CHECK(bg.count("d2_c0_n1\thop_d2_1\td2_c0_n2") == 1);
}

TEST_CASE("generate: symmetric 4-hop paths store the mirrored orientation") {
  SynthConfig cfg;
  cfg.distances = {4};
  cfg.chains = 1;
  cfg.distractor_ratio = 0.0;
  cfg.entities_per_layer = 2;
  cfg.valid_fraction = 0.0;
  cfg.test_fraction = 0.0;
  cfg.symmetric_paths = true;
  cfg.seed = 3;
  SynthDataset ds = generate_synth(cfg);

  std::set<std::string> bg(ds.background.begin(), ds.background.end());
  // forward, forward, then reversed edges mirroring the first half
  CHECK(bg.count("d4_c0_n0\thop_d4_0\td4_c0_n1") == 1);
  CHECK(bg.count("d4_c0_n1\thop_d4_1\td4_c0_n2") == 1);
  CHECK(bg.count("d4_c0_n3\thop_d4_1\td4_c0_n2") == 1);
  CHECK(bg.count("d4_c0_n4\thop_d4_0\td4_c0_n3") == 1);
}

TEST_CASE("generated datasets verify BFS distances and stay leakage-free") {
  SynthConfig cfg;
  cfg.distances = {2, 3, 4};
  cfg.chains = 12;
  cfg.distractor_ratio = 2.0;
  cfg.entities_per_layer = 6;
  cfg.seed = 19;
  SynthDataset ds = generate_synth(cfg);  // internal BFS self-check ran

  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "kgpf_synth_t").string();
  write_synth(ds, dir);
  Dataset loaded = load_dataset(dir);
  CHECK(loaded.has_background_file);
  CHECK(loaded.train.size() == ds.train.size());
  CHECK(loaded.valid.size() == ds.valid.size());
  CHECK(loaded.test.size() == ds.test.size());
  // 12 chains per distance split 70/15/15.
  CHECK(loaded.valid.size() == 3 * 2);
  CHECK(loaded.test.size() == 3 * 2);
  CHECK(loaded.train.size() == 3 * 8);

  // Re-verify the distance labels from the written files with BFS.
  KnowledgeGraph kg(loaded.background, loaded.vocab);
  for (std::size_t i = 0; i < loaded.test.size(); ++i) {
    const Triple& q = loaded.test[i];
    const int d = loaded.test_dist[i];
    CHECK(d >= 2);
    CHECK(bfs_distance(kg, q.head, q.tail, d + 2) == d);
    CHECK(!kg.contains(q.head, q.relation, q.tail));
  }
  // Leakage filter finds nothing to drop.
  auto filtered = filter_leakage(loaded.train, loaded.valid, loaded.test);
  CHECK(filtered.size() == loaded.train.size());

  // Chain-level split disjointness: no head appears in two splits.
  std::set<EntityId> train_heads, eval_heads;
  for (const Triple& t : loaded.train) train_heads.insert(t.head);
  for (const Triple& t : loaded.valid) eval_heads.insert(t.head);
  for (const Triple& t : loaded.test) eval_heads.insert(t.head);
  for (EntityId h : eval_heads) CHECK(train_heads.count(h) == 0);

  fs::remove_all(dir);
}

TEST_CASE("generation is deterministic in the config") {
  SynthConfig cfg;
  cfg.distances = {2, 5};
  cfg.chains = 5;
  cfg.seed = 123;
  SynthDataset a = generate_synth(cfg);
  SynthDataset b = generate_synth(cfg);
  CHECK(a.background == b.background);
  CHECK(a.train == b.train);
  CHECK(a.valid == b.valid);
  CHECK(a.test == b.test);

  cfg.seed = 124;
  SynthDataset c = generate_synth(cfg);
  CHECK(a.background != c.background);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.distances = {1};
  CHECK_THROWS(generate_synth(cfg));
  cfg.distances = {2};
  cfg.chains = 0;
  CHECK_THROWS(generate_synth(cfg));
  cfg.chains = 1;
  cfg.distractor_ratio = -1.0;
  CHECK_THROWS(generate_synth(cfg));
}
