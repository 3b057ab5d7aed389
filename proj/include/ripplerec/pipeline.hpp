#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ripplerec/archive.hpp"
#include "ripplerec/eval.hpp"

namespace ripplerec {

// Flat, typed key-value configuration. Dotted keys are normative
// (data.inter_path, model.n_hop, coldstart.strategy, pipeline.serving_dir,
// seed); the concrete syntax is a flat JSON object.
struct PipelineConfig {
  std::string inter_path;
  std::string user_path;
  std::string item_path;
  std::string timezone = "Europe/Warsaw";
  std::optional<std::string> device_filter;  // match .inter device_type

  ModelConfig model;
  ExtractionConfig extraction;
  int64_t max_history = -1;
  ColdStartStrategy strategy = ColdStartStrategy::Similarity;

  std::string train_date;  // YYYY-MM-DD, local calendar day
  std::string work_dir;
  std::string serving_dir;
  double validation_user_fraction = 0.10;
  bool parallel_stages = true;
  int eval_k = 10;
  uint64_t seed = 0;

  // Test hook: abort (throw) right after the numbered stage completes, as if
  // the process died between stages. Settable via the
  // RIPPLEREC_ABORT_AFTER_STAGE environment variable.
  std::optional<int> abort_after_stage;

  nlohmann::json snapshot;  // the flat document as given

  static PipelineConfig from_json_text(std::string_view text);
  static PipelineConfig from_json_file(const std::filesystem::path& path);
  void validate() const;
};

struct StageResult {
  std::string name;
  std::string status;  // completed | skipped
  double seconds = 0.0;
  std::string detail;
};

struct PipelineResult {
  std::vector<StageResult> stages;
  std::filesystem::path deployed_dir;
  std::string content_hash;
};

// Local staged runner with the reference DAG shape: check-data, extract-kg,
// then train and build-profiles (independent, optionally concurrent), merge
// into an archive, atomic deploy. Stage markers under <work_dir>/stages make
// reruns resume after the last completed stage. A stage failure leaves the
// previously deployed archive untouched.
PipelineResult run_pipeline(const PipelineConfig& config);

// Interaction rows after the optional device filter.
std::vector<InteractionRecord> filter_interactions(const DatasetBundle& bundle,
                                                   const std::optional<std::string>& device);

// Split-based training used by the standalone train command: train split
// feeds the model, validation split drives early stopping, and the artifacts
// carry everything the serving side needs.
struct TrainRunOptions {
  ModelConfig model;
  ExtractionConfig extraction;
  int64_t max_history = -1;
  ColdStartStrategy strategy = ColdStartStrategy::Similarity;
  std::string timezone = "Europe/Warsaw";
  std::optional<std::string> device_filter;
  int eval_k = 10;
  nlohmann::json snapshot;
};

ModelArtifacts train_artifacts_from_splits(const DatasetBundle& bundle,
                                           const TrainRunOptions& options,
                                           TrainResult* train_log = nullptr);

// Serving-style inference.
struct Recommendation {
  int rank = 0;
  std::string item_id;
  double score = 0.0;
  std::string provenance;
};

// Candidates may repeat; they are deduplicated. An empty candidate list means
// "all items known to the archive". Unknown users (or users with empty
// profiles) fall back to popularity ranking with an explicit tag. top_n = 0
// returns the full ranking.
std::vector<Recommendation> recommend(const ModelArtifacts& artifacts,
                                      const std::string& user_id,
                                      std::vector<std::string> candidates, size_t top_n,
                                      ColdStartStrategy strategy,
                                      const ContentEmbeddingProvider* provider);

std::string recommendations_tsv(std::span<const Recommendation> recs);

}  // namespace ripplerec
