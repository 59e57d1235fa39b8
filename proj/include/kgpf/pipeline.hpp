#pragma once

#include <string>

#include "kgpf/config.hpp"

namespace kgpf {

// Stage entry points shared by the C API and the CLI. Each writes its
// artifacts under cfg.out and returns a JSON summary. All stages echo the
// resolved config to <out>/run_config.json first; re-running with that
// config and seed reproduces every artifact bitwise.

// -> <out>/embeddings.kge (+ .json sidecar), <out>/vocab.json
std::string run_pretrain(const RunConfig& cfg);

// -> <out>/policy.gmh, <out>/train_log.jsonl, <out>/vocab.json
std::string run_train(const RunConfig& cfg);

// -> <out>/metrics.json (+ <out>/paths.jsonl with eval.emit_paths)
std::string run_eval(const RunConfig& cfg);

// -> dataset files under cfg.out
std::string run_synth(const RunConfig& cfg);

}  // namespace kgpf
