// Command-line front end; all work happens behind the C API in libkgpf.

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgpf.h"

using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::string data, out;
  std::int64_t seed = -1;
  int threads = -1;
  int dim = -1;
  int max_steps = -1;
  int max_loops = -1;
  std::string aggregator;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_data) {
  cmd->add_option("--config", f.config, "JSON config file");
  auto* data = cmd->add_option("--data", f.data, "dataset directory");
  if (needs_data) data->required();
  cmd->add_option("--out", f.out, "output directory")->required();
  cmd->add_option("--seed", f.seed, "root random seed");
  cmd->add_option("--threads", f.threads, "worker threads (0 = hardware)");
  cmd->add_option("--dim", f.dim, "embedding dimension");
  cmd->add_option("--max-steps", f.max_steps, "maximum search steps (S)");
  cmd->add_option("--max-loops", f.max_loops, "self-loops that stop the search (N)");
  cmd->add_option("--aggregator", f.aggregator, "sum|scalar_product");
}

json common_overrides(const CommonFlags& f) {
  json o = json::object();
  if (!f.data.empty()) o["data"] = f.data;
  if (!f.out.empty()) o["out"] = f.out;
  if (f.seed >= 0) o["seed"] = f.seed;
  if (f.threads >= 0) o["threads"] = f.threads;
  if (f.dim >= 0) o["dim"] = f.dim;
  if (f.max_steps >= 0) o["max_steps"] = f.max_steps;
  if (f.max_loops >= 0) o["max_loops"] = f.max_loops;
  if (!f.aggregator.empty()) o["aggregator"] = f.aggregator;
  return o;
}

int run_stage(const char* name,
              kgpf_status (*stage)(const char*, char**),
              const CommonFlags& flags, const json& overrides,
              std::string* summary_out = nullptr) {
  char* resolved = nullptr;
  const std::string ov = overrides.dump();
  if (kgpf_config_resolve(flags.config.empty() ? nullptr : flags.config.c_str(),
                          ov.c_str(), &resolved) != KGPF_OK) {
    std::fprintf(stderr, "kgpf %s: %s\n", name, kgpf_last_error());
    return 2;
  }
  char* summary = nullptr;
  const kgpf_status rc = stage(resolved, &summary);
  kgpf_string_free(resolved);
  if (rc != KGPF_OK) {
    std::fprintf(stderr, "kgpf %s: %s\n", name, kgpf_last_error());
    return 1;
  }
  if (summary) {
    if (summary_out)
      *summary_out = summary;
    else
      std::printf("%s\n", summary);
    kgpf_string_free(summary);
  }
  return 0;
}

void print_metrics_table(const std::string& metrics_json) {
  const json m = json::parse(metrics_json);
  std::printf("%-28s %8s %8s %8s %8s\n", "protocol", "MRR", "HITS@1", "HITS@3",
              "HITS@10");
  std::printf("%-28s %8.4f %8.4f %8.4f %8.4f\n", "filtered_beam_rank",
              m["mrr"].get<double>(), m["hits1"].get<double>(),
              m["hits3"].get<double>(), m["hits10"].get<double>());
  std::printf("%-28s %8.4f %8.4f %8.4f %8.4f\n", "unfiltered_beam_rank",
              m["mrr_raw"].get<double>(), m["hits1_raw"].get<double>(),
              m["hits3_raw"].get<double>(), m["hits10_raw"].get<double>());
  if (m.contains("per_distance_mrr")) {
    for (auto& [d, v] : m["per_distance_mrr"].items())
      std::printf("distance %-20s %8.4f\n", d.c_str(), v.get<double>());
  }
  std::printf("unanswered: %llu  skipped: %llu\n",
              static_cast<unsigned long long>(m["unanswered"].get<std::uint64_t>()),
              static_cast<unsigned long long>(m["skipped"].get<std::uint64_t>()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kgpf: multi-hop knowledge-graph link prediction"};
  app.require_subcommand(1);

  // pretrain
  CommonFlags pre_flags;
  std::string pre_model;
  auto* pre = app.add_subcommand("pretrain", "pretrain the embedding model");
  add_common(pre, pre_flags, /*needs_data=*/true);
  pre->add_option("--model", pre_model, "complex|distmult|transe");

  // train
  CommonFlags tr_flags;
  std::string tr_embeddings, tr_dropout;
  std::int64_t tr_epochs = -1, tr_rollouts = -1, tr_batch = -1;
  auto* tr = app.add_subcommand("train", "train the search policy");
  add_common(tr, tr_flags, /*needs_data=*/true);
  tr->add_option("--embeddings", tr_embeddings, "pretrained embedding file")
      ->required();
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--rollouts", tr_rollouts, "sampled rollouts per query");
  tr->add_option("--batch", tr_batch, "queries per update");
  tr->add_option("--action-dropout", tr_dropout, "off|scored|uniform");

  // eval
  CommonFlags ev_flags;
  std::string ev_checkpoint;
  std::int64_t ev_beam = -1;
  bool ev_emit_paths = false;
  auto* ev = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(ev, ev_flags, /*needs_data=*/true);
  ev->add_option("--checkpoint", ev_checkpoint, "policy checkpoint file")
      ->required();
  ev->add_option("--beam", ev_beam, "beam width");
  ev->add_flag("--emit-paths", ev_emit_paths,
               "write per-query trajectories to paths.jsonl");

  // synth
  CommonFlags sy_flags;
  std::string sy_distances;
  std::int64_t sy_chains = -1;
  double sy_ratio = -1.0;
  bool sy_symmetric = false;
  auto* sy = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(sy, sy_flags, /*needs_data=*/false);
  sy->add_option("--distances", sy_distances,
                 "comma-separated reasoning distances, e.g. 2,3,4");
  sy->add_option("--chains", sy_chains, "paths per distance");
  sy->add_option("--distractor-ratio", sy_ratio, "decoy edges per chain edge");
  sy->add_flag("--symmetric", sy_symmetric, "generate symmetric paths");

  CLI11_PARSE(app, argc, argv);

  if (pre->parsed()) {
    json o = common_overrides(pre_flags);
    if (!pre_model.empty()) o["pretrain"]["model"] = pre_model;
    return run_stage("pretrain", kgpf_pretrain, pre_flags, o);
  }
  if (tr->parsed()) {
    json o = common_overrides(tr_flags);
    o["train"]["embeddings"] = tr_embeddings;
    if (tr_epochs >= 0) o["train"]["epochs"] = tr_epochs;
    if (tr_rollouts >= 0) o["train"]["num_rollouts"] = tr_rollouts;
    if (tr_batch >= 0) o["train"]["batch_size"] = tr_batch;
    if (!tr_dropout.empty()) o["train"]["action_dropout"] = tr_dropout;
    return run_stage("train", kgpf_train, tr_flags, o);
  }
  if (ev->parsed()) {
    json o = common_overrides(ev_flags);
    o["eval"]["checkpoint"] = ev_checkpoint;
    if (ev_beam >= 0) o["eval"]["beam"] = ev_beam;
    if (ev_emit_paths) o["eval"]["emit_paths"] = true;
    std::string metrics;
    const int rc = run_stage("eval", kgpf_eval, ev_flags, o, &metrics);
    if (rc == 0) print_metrics_table(metrics);
    return rc;
  }
  if (sy->parsed()) {
    json o = common_overrides(sy_flags);
    if (!sy_distances.empty()) {
      std::vector<int> ds;
      std::string token;
      for (char c : sy_distances + ",") {
        if (c == ',') {
          if (!token.empty()) ds.push_back(std::stoi(token));
          token.clear();
        } else {
          token += c;
        }
      }
      o["synth"]["distances"] = ds;
    }
    if (sy_chains >= 0) o["synth"]["chains"] = sy_chains;
    if (sy_ratio >= 0) o["synth"]["distractor_ratio"] = sy_ratio;
    if (sy_symmetric) o["synth"]["symmetric_paths"] = true;
    return run_stage("synth", kgpf_synth, sy_flags, o);
  }
  return 2;
}
