#include "kgpf.h"

#include <cstring>
#include <exception>
#include <string>

#include "kgpf/pipeline.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

kgpf_status fail(kgpf_status code, const std::string& message) {
  g_last_error = message;
  return code;
}

// The config layer reports unknown keys / bad types with a "config:" prefix.
kgpf_status classify(const std::exception& e) {
  const std::string what = e.what();
  if (what.rfind("config:", 0) == 0 || what.rfind("KGPF_SEED", 0) == 0)
    return KGPF_ERR_CONFIG;
  if (what.find("cannot open") != std::string::npos ||
      what.find("cannot write") != std::string::npos ||
      what.find("truncated") != std::string::npos)
    return KGPF_ERR_IO;
  return KGPF_ERR_RUNTIME;
}

template <typename Fn>
kgpf_status run_stage(const char* config_json, char** out_summary_json, Fn fn) {
  if (!config_json)
    return fail(KGPF_ERR_INVALID_ARGUMENT, "config_json is null");
  try {
    kgpf::RunConfig cfg = kgpf::parse_config("", config_json);
    const std::string summary = fn(cfg);
    if (out_summary_json) *out_summary_json = dup_string(summary);
    return KGPF_OK;
  } catch (const std::exception& e) {
    return fail(classify(e), e.what());
  }
}

struct DatasetHandle {
  kgpf::Dataset data;
};

}  // namespace

extern "C" {

const char* kgpf_last_error(void) { return g_last_error.c_str(); }

void kgpf_string_free(char* s) { ::free(s); }

const char* kgpf_version(void) { return "1.0.0"; }

kgpf_status kgpf_config_resolve(const char* config_path,
                                const char* overrides_json, char** out_json) {
  if (!out_json) return fail(KGPF_ERR_INVALID_ARGUMENT, "out_json is null");
  try {
    kgpf::RunConfig cfg = kgpf::parse_config(
        config_path ? config_path : "", overrides_json ? overrides_json : "");
    *out_json = dup_string(cfg.to_json());
    return KGPF_OK;
  } catch (const std::exception& e) {
    return fail(classify(e), e.what());
  }
}

kgpf_status kgpf_pretrain(const char* config_json, char** out_summary_json) {
  return run_stage(config_json, out_summary_json,
                   [](const kgpf::RunConfig& c) { return kgpf::run_pretrain(c); });
}

kgpf_status kgpf_train(const char* config_json, char** out_summary_json) {
  return run_stage(config_json, out_summary_json,
                   [](const kgpf::RunConfig& c) { return kgpf::run_train(c); });
}

kgpf_status kgpf_eval(const char* config_json, char** out_summary_json) {
  return run_stage(config_json, out_summary_json,
                   [](const kgpf::RunConfig& c) { return kgpf::run_eval(c); });
}

kgpf_status kgpf_synth(const char* config_json, char** out_summary_json) {
  return run_stage(config_json, out_summary_json,
                   [](const kgpf::RunConfig& c) { return kgpf::run_synth(c); });
}

kgpf_status kgpf_dataset_open(const char* dir, kgpf_dataset** out) {
  if (!dir || !out) return fail(KGPF_ERR_INVALID_ARGUMENT, "null argument");
  try {
    auto* handle = new DatasetHandle{kgpf::load_dataset(dir)};
    *out = reinterpret_cast<kgpf_dataset*>(handle);
    return KGPF_OK;
  } catch (const std::exception& e) {
    return fail(classify(e), e.what());
  }
}

kgpf_status kgpf_dataset_stats_get(const kgpf_dataset* ds,
                                   kgpf_dataset_stats* out) {
  if (!ds || !out) return fail(KGPF_ERR_INVALID_ARGUMENT, "null argument");
  const auto* handle = reinterpret_cast<const DatasetHandle*>(ds);
  out->entities = handle->data.vocab.entity_count();
  // Reserved SELF_LOOP/START and the synthesized inverses are internal.
  out->relations = (handle->data.vocab.relation_count() - 2) / 2;
  out->background_edges = handle->data.background.size();
  out->train_triples = handle->data.train.size();
  out->valid_triples = handle->data.valid.size();
  out->test_triples = handle->data.test.size();
  return KGPF_OK;
}

void kgpf_dataset_close(kgpf_dataset* ds) {
  delete reinterpret_cast<DatasetHandle*>(ds);
}

}  // extern "C"
