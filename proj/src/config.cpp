#include "kgpf/config.hpp"

#include <cstdlib>
#include <stdexcept>

#include "json.hpp"
#include "kgpf/serialize.hpp"

namespace kgpf {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& where, const std::string& key) {
  throw std::runtime_error("config: unknown key '" +
                           (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void get_to(const json& j, const std::string& where, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    it->get_to(out);
  } catch (const json::exception&) {
    throw std::runtime_error("config: bad value type for '" +
                             (where.empty() ? std::string(key)
                                            : where + "." + std::string(key)) +
                             "'");
  }
}

void check_keys(const json& j, const std::string& where,
                const std::vector<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed) ok |= it.key() == k;
    if (!ok) bad_key(where, it.key());
  }
}

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
  check_keys(j, "",
             {"seed", "threads", "data", "out", "dim", "max_steps", "max_loops",
              "action_cap", "aggregator", "pretrain", "train", "eval", "synth"});
  get_to(j, "", "seed", cfg.seed);
  get_to(j, "", "threads", cfg.threads);
  get_to(j, "", "data", cfg.data);
  get_to(j, "", "out", cfg.out);
  get_to(j, "", "dim", cfg.dim);
  get_to(j, "", "max_steps", cfg.max_steps);
  get_to(j, "", "max_loops", cfg.max_loops);
  get_to(j, "", "action_cap", cfg.action_cap);
  get_to(j, "", "aggregator", cfg.aggregator);

  if (auto it = j.find("pretrain"); it != j.end()) {
    check_keys(*it, "pretrain",
               {"model", "negatives", "batch_size", "learning_rate", "l2",
                "epochs", "patience"});
    get_to(*it, "pretrain", "model", cfg.pretrain.model);
    get_to(*it, "pretrain", "negatives", cfg.pretrain.negatives);
    get_to(*it, "pretrain", "batch_size", cfg.pretrain.batch_size);
    get_to(*it, "pretrain", "learning_rate", cfg.pretrain.learning_rate);
    get_to(*it, "pretrain", "l2", cfg.pretrain.l2);
    get_to(*it, "pretrain", "epochs", cfg.pretrain.epochs);
    get_to(*it, "pretrain", "patience", cfg.pretrain.patience);
  }
  if (auto it = j.find("train"); it != j.end()) {
    check_keys(*it, "train",
               {"embeddings", "embedding_hash", "num_rollouts", "batch_size",
                "learning_rate", "grad_clip_norm", "epochs", "patience",
                "baseline", "action_dropout", "dad_standardize",
                "use_attention", "use_global", "valid_beam", "valid_every"});
    get_to(*it, "train", "embeddings", cfg.train.embeddings);
    get_to(*it, "train", "embedding_hash", cfg.train.embedding_hash);
    get_to(*it, "train", "num_rollouts", cfg.train.num_rollouts);
    get_to(*it, "train", "batch_size", cfg.train.batch_size);
    get_to(*it, "train", "learning_rate", cfg.train.learning_rate);
    get_to(*it, "train", "grad_clip_norm", cfg.train.grad_clip_norm);
    get_to(*it, "train", "epochs", cfg.train.epochs);
    get_to(*it, "train", "patience", cfg.train.patience);
    get_to(*it, "train", "baseline", cfg.train.baseline);
    get_to(*it, "train", "action_dropout", cfg.train.action_dropout);
    get_to(*it, "train", "dad_standardize", cfg.train.dad_standardize);
    get_to(*it, "train", "use_attention", cfg.train.use_attention);
    get_to(*it, "train", "use_global", cfg.train.use_global);
    get_to(*it, "train", "valid_beam", cfg.train.valid_beam);
    get_to(*it, "train", "valid_every", cfg.train.valid_every);
  }
  if (auto it = j.find("eval"); it != j.end()) {
    check_keys(*it, "eval", {"checkpoint", "beam", "emit_paths"});
    get_to(*it, "eval", "checkpoint", cfg.eval.checkpoint);
    get_to(*it, "eval", "beam", cfg.eval.beam);
    get_to(*it, "eval", "emit_paths", cfg.eval.emit_paths);
  }
  if (auto it = j.find("synth"); it != j.end()) {
    check_keys(*it, "synth",
               {"distances", "chains", "entities_per_layer", "distractor_ratio",
                "symmetric_paths", "valid_fraction", "test_fraction"});
    get_to(*it, "synth", "distances", cfg.synth.distances);
    get_to(*it, "synth", "chains", cfg.synth.chains);
    get_to(*it, "synth", "entities_per_layer", cfg.synth.entities_per_layer);
    get_to(*it, "synth", "distractor_ratio", cfg.synth.distractor_ratio);
    get_to(*it, "synth", "symmetric_paths", cfg.synth.symmetric_paths);
    get_to(*it, "synth", "valid_fraction", cfg.synth.valid_fraction);
    get_to(*it, "synth", "test_fraction", cfg.synth.test_fraction);
  }
}

}  // namespace

TrainConfig RunConfig::train_config() const {
  TrainConfig tc;
  tc.max_steps = max_steps;
  tc.max_loops = max_loops;
  tc.dim = dim;
  tc.action_cap = action_cap;
  tc.num_rollouts = train.num_rollouts;
  tc.batch_size = train.batch_size;
  tc.learning_rate = train.learning_rate;
  tc.grad_clip_norm = train.grad_clip_norm;
  tc.epochs = train.epochs;
  tc.patience = train.patience;
  tc.aggregator = aggregator;
  tc.action_dropout = train.action_dropout;
  tc.dad_standardize = train.dad_standardize;
  tc.use_attention = train.use_attention;
  tc.use_global = train.use_global;
  tc.baseline = train.baseline;
  tc.seed = seed;
  tc.threads = threads;
  tc.valid_beam = train.valid_beam;
  tc.valid_every = train.valid_every;
  return tc;
}

PretrainConfig RunConfig::pretrain_config() const {
  PretrainConfig pc;
  pc.kind = score_kind_from(pretrain.model);
  pc.dim = dim;
  pc.negatives = pretrain.negatives;
  pc.batch_size = pretrain.batch_size;
  pc.learning_rate = pretrain.learning_rate;
  pc.l2 = pretrain.l2;
  pc.epochs = pretrain.epochs;
  pc.patience = pretrain.patience;
  return pc;
}

std::string RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["data"] = data;
  j["out"] = out;
  j["dim"] = dim;
  j["max_steps"] = max_steps;
  j["max_loops"] = max_loops;
  j["action_cap"] = action_cap;
  j["aggregator"] = aggregator;
  j["pretrain"] = {{"model", pretrain.model},
                   {"negatives", pretrain.negatives},
                   {"batch_size", pretrain.batch_size},
                   {"learning_rate", pretrain.learning_rate},
                   {"l2", pretrain.l2},
                   {"epochs", pretrain.epochs},
                   {"patience", pretrain.patience}};
  j["train"] = {{"embeddings", train.embeddings},
                {"embedding_hash", train.embedding_hash},
                {"num_rollouts", train.num_rollouts},
                {"batch_size", train.batch_size},
                {"learning_rate", train.learning_rate},
                {"grad_clip_norm", train.grad_clip_norm},
                {"epochs", train.epochs},
                {"patience", train.patience},
                {"baseline", train.baseline},
                {"action_dropout", train.action_dropout},
                {"dad_standardize", train.dad_standardize},
                {"use_attention", train.use_attention},
                {"use_global", train.use_global},
                {"valid_beam", train.valid_beam},
                {"valid_every", train.valid_every}};
  j["eval"] = {{"checkpoint", eval.checkpoint},
               {"beam", eval.beam},
               {"emit_paths", eval.emit_paths}};
  j["synth"] = {{"distances", synth.distances},
                {"chains", synth.chains},
                {"entities_per_layer", synth.entities_per_layer},
                {"distractor_ratio", synth.distractor_ratio},
                {"symmetric_paths", synth.symmetric_paths},
                {"valid_fraction", synth.valid_fraction},
                {"test_fraction", synth.test_fraction}};
  return j.dump(2);
}

RunConfig parse_config(const std::string& file_path,
                       const std::string& overrides_json) {
  RunConfig cfg;
  if (!file_path.empty()) {
    json j;
    try {
      j = json::parse(read_text_file(file_path));
    } catch (const json::exception& e) {
      throw std::runtime_error("config: cannot parse " + file_path + ": " +
                               e.what());
    }
    apply_json(cfg, j);
  }
  if (!overrides_json.empty()) apply_json(cfg, json::parse(overrides_json));
  if (const char* env = std::getenv("KGPF_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (...) {
      throw std::runtime_error("KGPF_SEED must be an integer");
    }
  }
  return cfg;
}

}  // namespace kgpf
