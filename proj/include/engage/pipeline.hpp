#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "engage/analytics.hpp"
#include "engage/corpus.hpp"
#include "engage/stance.hpp"

namespace engage {

struct PipelineConfig {
  std::string backend = "hashed";  // embedding backend spec
  std::string signal_backend;      // empty => built-in lexicons
  // Above the 0.5 no-evidence posterior so unvoted comments are kept.
  double filter_threshold = 0.6;
  std::size_t reduce_dim = 8;
  std::size_t min_cluster_size = 15;
  std::size_t min_samples = 5;
  std::size_t top_k = 10;
  StanceConfig stance;
  std::string kb_dir;  // optional directory of per-topic claim files
  TimeBucket bucket = TimeBucket::Month;
  double spike_factor = 3.0;
  bool exclude_creator = true;

  static PipelineConfig from_file(const std::filesystem::path& path);
  std::string to_json_string() const;
  std::uint64_t fingerprint() const;  // over the canonical JSON form
};

// One content-addressed directory per run; the run id is derived from the
// corpus and config fingerprints, so identical inputs land in the same place.
struct PipelineRun {
  std::string run_id;
  std::filesystem::path dir;
  std::uint64_t config_fingerprint = 0;
  std::uint64_t corpus_fp = 0;
  bool sealed = false;
  std::vector<std::string> completed_stages;  // in execution order

  struct Failure {
    std::string stage;
    std::string message;
  };
  std::optional<Failure> failure;

  bool stage_done(const std::string& name) const;
};

inline const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {"ingest", "filter",  "topics",
                                                 "signals", "stance", "analytics"};
  return names;
}

// Stages run in order; each stage's files are flushed and the manifest updated
// before the next stage starts, so a failure leaves a readable partial run.
PipelineRun run_pipeline(const std::vector<std::filesystem::path>& corpus_paths,
                         const PipelineConfig& config,
                         const std::filesystem::path& out_root);

PipelineRun load_run(const std::filesystem::path& run_dir);
std::vector<PipelineRun> list_runs(const std::filesystem::path& out_root);

// Claim files "<topic_id>.kb" (or "topic_<id>.kb") inside dir.
std::map<int, KnowledgeBase> load_kb_dir(const std::filesystem::path& dir,
                                         const EmbeddingBackend& backend);

void write_stance_results(const std::vector<StanceResult>& results,
                          const std::filesystem::path& path);
std::vector<StanceResult> load_stance_results(const std::filesystem::path& path);

}  // namespace engage
