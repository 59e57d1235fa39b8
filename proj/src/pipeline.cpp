#include "kgpf/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "kgpf/eval.hpp"
#include "kgpf/pipeline.hpp"
#include "kgpf/serialize.hpp"

namespace kgpf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void prepare_out(const RunConfig& cfg) {
  if (cfg.out.empty()) throw std::runtime_error("config: 'out' directory not set");
  fs::create_directories(cfg.out);
  write_text_file((fs::path(cfg.out) / "run_config.json").string(),
                  cfg.to_json() + "\n");
}

Dataset load_data(const RunConfig& cfg) {
  if (cfg.data.empty()) throw std::runtime_error("config: 'data' directory not set");
  return load_dataset(cfg.data);
}

void check_table(const EmbeddingTable& table, const Dataset& ds,
                 const RunConfig& cfg) {
  if (table.entities.rows() != ds.vocab.entity_count() ||
      table.relations.rows() != ds.vocab.relation_count())
    throw std::runtime_error(
        "embedding table does not match the dataset vocabulary");
  if (table.dim != cfg.dim)
    throw std::runtime_error("embedding dim " + std::to_string(table.dim) +
                             " does not match config dim " +
                             std::to_string(cfg.dim));
}

}  // namespace

std::string run_pretrain(const RunConfig& cfg) {
  prepare_out(cfg);
  Dataset ds = load_data(cfg);
  Rng root(cfg.seed);

  PretrainResult res = pretrain(cfg.pretrain_config(), ds.pretrain_corpus(),
                                ds.vocab, ds.valid, root.stream("pretrain"));

  const std::string table_path = (fs::path(cfg.out) / "embeddings.kge").string();
  save_embeddings(res.table, table_path);
  write_text_file((fs::path(cfg.out) / "vocab.json").string(),
                  ds.vocab.to_json() + "\n");

  json sidecar;
  sidecar["model"] = cfg.pretrain.model;
  sidecar["dim"] = cfg.dim;
  sidecar["entities"] = ds.vocab.entity_count();
  sidecar["relations"] = ds.vocab.relation_count();
  sidecar["epochs_run"] = res.epoch_loss.size();
  sidecar["best_epoch"] = res.best_epoch;
  sidecar["best_valid_mrr"] = res.best_valid_mrr;
  sidecar["final_loss"] =
      res.epoch_loss.empty() ? 0.0 : res.epoch_loss.back();
  sidecar["seed"] = cfg.seed;
  write_text_file(table_path + ".json", sidecar.dump(2) + "\n");

  json summary;
  summary["embeddings"] = table_path;
  summary["best_valid_mrr"] = res.best_valid_mrr;
  summary["epochs_run"] = res.epoch_loss.size();
  return summary.dump(2);
}

std::string run_train(const RunConfig& cfg) {
  prepare_out(cfg);
  Dataset ds = load_data(cfg);
  if (cfg.train.embeddings.empty())
    throw std::runtime_error("config: train.embeddings not set");

  const std::string actual_hash = file_content_hash(cfg.train.embeddings);
  if (!cfg.train.embedding_hash.empty() &&
      cfg.train.embedding_hash != actual_hash)
    throw std::runtime_error("embedding file hash mismatch: expected " +
                             cfg.train.embedding_hash + ", got " + actual_hash);
  EmbeddingTable table = load_embeddings(cfg.train.embeddings);
  check_table(table, ds, cfg);

  KnowledgeGraph kg(ds.background, ds.vocab);
  KnownAnswers known;  // test answers stay invisible during training
  known.add(ds.background);
  known.add(ds.train);
  known.add(ds.valid);

  std::ofstream log_out(fs::path(cfg.out) / "train_log.jsonl",
                        std::ios::binary);
  auto log_epoch = [&](const EpochLog& e) {
    json line;
    line["epoch"] = e.epoch;
    line["mean_reward"] = e.mean_reward;
    line["mean_len"] = e.mean_length;
    if (e.valid_mrr >= 0.0) line["valid_mrr"] = e.valid_mrr;
    line["wall_ms"] = e.wall_ms;
    log_out << line.dump() << "\n";
    log_out.flush();
    std::cerr << "[train] epoch " << e.epoch << " reward " << e.mean_reward
              << " len " << e.mean_length << " valid_mrr " << e.valid_mrr
              << "\n";
  };

  TrainResult res = train(cfg.train_config(), kg, table, ds.train, ds.valid,
                          known, log_epoch);
  res.best.embedding_path = cfg.train.embeddings;
  res.best.embedding_hash = actual_hash;

  const std::string ckpt_path = (fs::path(cfg.out) / "policy.gmh").string();
  save_checkpoint(res.best, ckpt_path);
  write_text_file((fs::path(cfg.out) / "vocab.json").string(),
                  ds.vocab.to_json() + "\n");

  json summary;
  summary["checkpoint"] = ckpt_path;
  summary["best_epoch"] = res.best.epoch;
  summary["best_valid_mrr"] = res.best.valid_mrr_history.empty()
                                  ? -1.0
                                  : *std::max_element(
                                        res.best.valid_mrr_history.begin(),
                                        res.best.valid_mrr_history.end());
  summary["epochs_run"] = res.log.size();
  summary["aborted_on_nan"] = res.aborted_on_nan;
  return summary.dump(2);
}

std::string run_eval(const RunConfig& cfg) {
  prepare_out(cfg);
  Dataset ds = load_data(cfg);
  if (cfg.eval.checkpoint.empty())
    throw std::runtime_error("config: eval.checkpoint not set");

  Checkpoint ckpt = load_checkpoint(cfg.eval.checkpoint);
  EmbeddingTable table = load_embeddings(ckpt.embedding_path);
  if (table.entities.rows() != ds.vocab.entity_count())
    throw std::runtime_error("checkpoint embeddings do not match the dataset");

  KnowledgeGraph kg(ds.background, ds.vocab);
  KnownAnswers known;
  known.add(ds.background);
  known.add(ds.train);
  known.add(ds.valid);
  known.add(ds.test);

  RolloutConfig rc;
  rc.max_steps = ckpt.config.max_steps;
  rc.max_loops = ckpt.config.max_loops;
  rc.action_cap = ckpt.config.action_cap;
  rc.step.aggregator = aggregator_from(ckpt.config.aggregator);
  rc.step.dropout = DropoutMode::kOff;
  rc.step.use_attention = ckpt.config.use_attention;
  rc.step.use_global = ckpt.config.use_global;
  rc.step.training = false;

  EvalOptions opts;
  opts.beam_width = cfg.eval.beam;
  opts.threads = cfg.threads;

  std::vector<RankedAnswer> tops;
  MetricsReport report =
      evaluate(kg, ckpt.policy, table, ds.test, ds.test_dist, known, rc, opts,
               cfg.eval.emit_paths ? &tops : nullptr);

  const std::string metrics_json = report.to_json();
  write_text_file((fs::path(cfg.out) / "metrics.json").string(),
                  metrics_json + "\n");

  if (cfg.eval.emit_paths) {
    std::string lines;
    for (std::size_t qi = 0; qi < ds.test.size(); ++qi) {
      const Triple& q = ds.test[qi];
      json rec;
      rec["query"] = {{"head", ds.vocab.entity_name(q.head)},
                      {"relation", ds.vocab.relation_name(q.relation)},
                      {"tail", ds.vocab.entity_name(q.tail)}};
      json path = json::array();
      const RankedAnswer& top = tops[qi];
      for (std::size_t i = 1; i < top.path.size(); ++i) {
        path.push_back({ds.vocab.relation_name(top.path[i].first),
                        ds.vocab.entity_name(top.path[i].second)});
      }
      rec["path"] = path;
      rec["stopped_by"] = stop_reason_name(top.stopped_by);
      lines += rec.dump();
      lines += '\n';
    }
    write_text_file((fs::path(cfg.out) / "paths.jsonl").string(), lines);
  }
  return metrics_json;
}

std::string run_synth(const RunConfig& cfg) {
  prepare_out(cfg);
  SynthConfig sc = cfg.synth;
  sc.seed = Rng(cfg.seed).stream("synth").root_seed();
  SynthDataset ds = generate_synth(sc);
  write_synth(ds, cfg.out);

  json summary;
  summary["out"] = cfg.out;
  summary["background_edges"] = ds.background.size();
  summary["train"] = ds.train.size();
  summary["valid"] = ds.valid.size();
  summary["test"] = ds.test.size();
  return summary.dump(2);
}

}  // namespace kgpf
