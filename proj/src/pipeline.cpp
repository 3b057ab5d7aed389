#include "ripplerec/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <set>

#include "ripplerec/binio.hpp"
#include "ripplerec/rng.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("pipeline config: expected a flat JSON object");

  PipelineConfig config;
  config.snapshot = j;
  read_key(j, "data.inter_path", config.inter_path);
  read_key(j, "data.user_path", config.user_path);
  read_key(j, "data.item_path", config.item_path);
  read_key(j, "data.timezone", config.timezone);
  std::string device;
  read_key(j, "data.device_filter", device);
  if (!device.empty()) config.device_filter = device;

  read_key(j, "model.dim", config.model.dim);
  read_key(j, "model.n_hop", config.model.n_hop);
  read_key(j, "model.n_memory", config.model.n_memory);
  read_key(j, "model.learning_rate", config.model.learning_rate);
  read_key(j, "model.max_epochs", config.model.max_epochs);
  read_key(j, "model.patience", config.model.patience);
  read_key(j, "model.l2_weight", config.model.l2_weight);
  read_key(j, "model.kge_weight", config.model.kge_weight);
  read_key(j, "model.batch_size", config.model.batch_size);

  read_key(j, "kg.entity_score_threshold", config.extraction.entity_score_threshold);
  read_key(j, "kg.category_threshold", config.extraction.category_threshold);
  read_key(j, "kg.max_history", config.max_history);

  std::string strategy = "similarity";
  read_key(j, "coldstart.strategy", strategy);
  config.strategy = parse_strategy(strategy);

  read_key(j, "pipeline.train_date", config.train_date);
  read_key(j, "pipeline.work_dir", config.work_dir);
  read_key(j, "pipeline.serving_dir", config.serving_dir);
  read_key(j, "pipeline.validation_user_fraction", config.validation_user_fraction);
  read_key(j, "pipeline.parallel_stages", config.parallel_stages);
  read_key(j, "eval.k", config.eval_k);
  read_key(j, "seed", config.seed);
  config.model.seed = config.seed;

  if (const char* env = std::getenv("RIPPLEREC_SERVING_DIR"); env != nullptr && *env) {
    config.serving_dir = env;
  }
  if (const char* env = std::getenv("RIPPLEREC_ABORT_AFTER_STAGE");
      env != nullptr && *env) {
    config.abort_after_stage = std::atoi(env);
  }
  return config;
}

PipelineConfig PipelineConfig::from_json_file(const std::filesystem::path& path) {
  return from_json_text(read_file(path));
}

void PipelineConfig::validate() const {
  if (inter_path.empty() || user_path.empty() || item_path.empty()) {
    throw ConfigError("pipeline config: data.inter_path/user_path/item_path are required");
  }
  if (train_date.empty()) throw ConfigError("pipeline config: pipeline.train_date is required");
  parse_day(train_date);
  if (work_dir.empty() || serving_dir.empty()) {
    throw ConfigError("pipeline config: pipeline.work_dir and pipeline.serving_dir are required");
  }
  if (validation_user_fraction < 0.0 || validation_user_fraction >= 1.0) {
    throw ConfigError("pipeline config: validation_user_fraction must be in [0, 1)");
  }
  if (eval_k < 1) throw ConfigError("pipeline config: eval.k must be >= 1");
  model.validate();
  TimezoneRule::parse(timezone);
}

std::vector<InteractionRecord> filter_interactions(
    const DatasetBundle& bundle, const std::optional<std::string>& device) {
  std::vector<InteractionRecord> rows;
  rows.reserve(bundle.interactions.size());
  for (const auto& rec : bundle.interactions) {
    if (device) {
      const AtomicValue* cell = bundle.inter_table.cell(rec.row, "device_type");
      if (cell == nullptr || !cell->present() || cell->token() != *device) continue;
    }
    rows.push_back(rec);
  }
  return rows;
}

namespace {

std::vector<InteractionRecord> rows_on_day(std::span<const InteractionRecord> rows,
                                           int64_t day, const TimezoneRule& tz) {
  std::vector<InteractionRecord> out;
  for (const auto& rec : rows) {
    if (rec.event_timestamp_unix > 0 && tz.local_day(rec.event_timestamp_unix) == day) {
      out.push_back(rec);
    }
  }
  return out;
}

// Item records for every distinct item in `rows`; items missing from the
// .item file become bare records (isolated KG entities).
std::vector<ItemRecord> training_item_records(std::span<const InteractionRecord> rows,
                                              const DatasetBundle& bundle) {
  std::set<std::string> ids;
  for (const auto& rec : rows) ids.insert(rec.item_id);
  std::vector<ItemRecord> records;
  records.reserve(ids.size());
  for (const auto& id : ids) {
    if (const ItemRecord* item = bundle.find_item(id)) {
      records.push_back(*item);
    } else {
      ItemRecord bare;
      bare.item_id = id;
      records.push_back(std::move(bare));
    }
  }
  return records;
}

struct TrainingPieces {
  ProfileStore profiles;
  RippleProfile empty_profile;
  std::vector<TrainingExample> examples;
};

TrainingPieces build_training_pieces(std::span<const InteractionRecord> rows,
                                     const KnowledgeGraph& kg, const ModelConfig& model,
                                     int64_t max_history) {
  RippleConfig ripple;
  ripple.n_hop = model.n_hop;
  ripple.n_memory = model.n_memory;
  ripple.seed = model.seed;
  ripple.max_history = max_history;

  TrainingPieces pieces;
  pieces.profiles = build_all_profiles(rows, kg, ripple);
  pieces.empty_profile.hops.resize(static_cast<size_t>(model.n_hop));

  pieces.examples.reserve(rows.size());
  for (const auto& rec : rows) {
    const RippleProfile* profile = pieces.profiles.find(rec.user_id);
    if (profile == nullptr) profile = &pieces.empty_profile;
    const auto entity = kg.entities().lookup(item_entity_name(rec.item_id));
    if (!entity) continue;  // cannot happen for rows the KG was built from
    pieces.examples.push_back({profile, *entity, rec.is_click});
  }
  return pieces;
}

SimilarityIndex build_index_for_vocab(const Vocab& entities, const DatasetBundle& bundle) {
  std::vector<ItemRecord> known;
  for (const auto& name : entities.names()) {
    const auto item_id = item_id_from_entity(name);
    if (!item_id) continue;
    if (const ItemRecord* item = bundle.find_item(*item_id)) known.push_back(*item);
  }
  return build_similarity_index(entities, known);
}

EncoderParams train_bridge_encoder(const ModelParameters& params,
                                   const SimilarityIndex& index, uint64_t seed) {
  std::vector<EmbeddingPair> pairs;
  pairs.reserve(index.entries.size());
  for (const auto& entry : index.entries) {
    std::vector<double> content(entry.unit_embedding.begin(), entry.unit_embedding.end());
    pairs.emplace_back(std::move(content), params.entity_row_d(entry.entity));
  }
  EncoderConfig config;
  config.input_dim = static_cast<int>(index.dim);
  config.output_dim = params.dim;
  config.seed = seed;
  return train_encoder(pairs, config).params;
}

// Validation NDCG@k over the given users' slates with the current
// parameters; items are always in-vocabulary during training runs.
ValidationFn make_validation_fn(std::vector<InteractionRecord> validation_rows,
                                const KnowledgeGraph& kg, const ProfileStore& profiles,
                                int k) {
  return [rows = std::move(validation_rows), &kg, &profiles, k](
             const ModelParameters& params) -> double {
    SliceEvalContext ctx;
    ctx.params = &params;
    ctx.profiles = &profiles;
    // Resolver that only needs the vocabulary: validation slates are made of
    // trained items, so cold-start bridging never triggers here.
    ColdStartResolver resolver(params, kg.entities(), ColdStartStrategy::KnownOnly,
                               nullptr, nullptr, nullptr);
    ctx.resolver = &resolver;
    const SliceReport report = evaluate_slice(ctx, rows, "validation", 0, k);
    return report.users_evaluated == 0 ? 0.0 : report.ndcg;
  };
}

}  // namespace

ModelArtifacts train_artifacts_from_splits(const DatasetBundle& bundle,
                                           const TrainRunOptions& options,
                                           TrainResult* train_log) {
  const TimezoneRule tz = TimezoneRule::parse(options.timezone);
  const TemporalSplit split = make_temporal_splits(bundle, tz);
  const std::vector<InteractionRecord> rows = filter_interactions(bundle, options.device_filter);

  std::vector<InteractionRecord> train_rows, valid_rows;
  for (const auto& rec : rows) {
    const int s = split.split_of_timestamp(rec.event_timestamp_unix);
    if (s == 0) train_rows.push_back(rec);
    if (s == 1) valid_rows.push_back(rec);
  }
  if (train_rows.empty()) throw InsufficientDataError("train split is empty");
  if (valid_rows.empty()) throw InsufficientDataError("validation split is empty");

  const std::vector<ItemRecord> train_items = training_item_records(train_rows, bundle);
  const KnowledgeGraph kg = extract_knowledge_graph(train_items, options.extraction);
  TrainingPieces pieces =
      build_training_pieces(train_rows, kg, options.model, options.max_history);

  const ValidationFn validate =
      make_validation_fn(std::move(valid_rows), kg, pieces.profiles, options.eval_k);
  TrainResult result = train_model(pieces.examples, kg.entities().size(),
                                   kg.relations().size(), options.model, validate);

  ModelArtifacts artifacts;
  artifacts.config_snapshot = options.snapshot;
  artifacts.entities = kg.entities();
  artifacts.relations = kg.relations();
  artifacts.params = result.params;
  artifacts.profiles = std::move(pieces.profiles);
  artifacts.simindex = build_index_for_vocab(artifacts.entities, bundle);
  if (options.strategy == ColdStartStrategy::Encoder) {
    artifacts.encoder = train_bridge_encoder(artifacts.params, artifacts.simindex,
                                             options.model.seed);
  }
  if (train_log != nullptr) *train_log = std::move(result);
  return artifacts;
}

// ---------------------------------------------------------------------------
// Staged pipeline.
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<const char*, 6> kStageNames = {
    "01-check-data", "02-extract-kg",    "03-train",
    "04-build-profiles", "05-merge-archive", "06-deploy"};

class StageRunner {
public:
  StageRunner(const PipelineConfig& config, PipelineResult& result)
      : config_(config), result_(result) {
    markers_dir_ = std::filesystem::path(config.work_dir) / "stages";
    std::filesystem::create_directories(markers_dir_);
  }

  bool done(size_t stage) const {
    return std::filesystem::exists(marker_path(stage));
  }

  template <typename Fn>
  void run(size_t stage, Fn&& body) {
    const char* name = kStageNames[stage];
    if (done(stage)) {
      result_.stages.push_back({name, "skipped", 0.0, "marker present"});
      return;
    }
    const auto start = Clock::now();
    const std::string detail = body();
    mark(stage, detail);
    result_.stages.push_back({name, "completed", seconds_since(start), detail});
    maybe_abort(stage);
  }

  void mark(size_t stage, const std::string& detail) {
    nlohmann::json j;
    j["stage"] = kStageNames[stage];
    j["detail"] = detail;
    atomic_write_file(marker_path(stage), j.dump() + "\n");
  }

  void maybe_abort(size_t stage) const {
    if (config_.abort_after_stage && *config_.abort_after_stage == static_cast<int>(stage) + 1) {
      throw PipelineError("aborted after stage " + std::string(kStageNames[stage]) +
                          " (test hook)");
    }
  }

private:
  std::filesystem::path marker_path(size_t stage) const {
    return markers_dir_ / (std::string(kStageNames[stage]) + ".done");
  }

  const PipelineConfig& config_;
  PipelineResult& result_;
  std::filesystem::path markers_dir_;
};

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.validate();
  const TimezoneRule tz = TimezoneRule::parse(config.timezone);
  const int64_t train_day = parse_day(config.train_date);
  const std::filesystem::path work(config.work_dir);
  std::filesystem::create_directories(work);

  PipelineResult result;
  StageRunner runner(config, result);

  // Stages communicate only through files under work_dir so a rerun can
  // resume after the last completed stage; this in-run cache just avoids
  // re-parsing inside a single run.
  std::optional<DatasetBundle> bundle_cache;
  const auto bundle = [&]() -> const DatasetBundle& {
    if (!bundle_cache) {
      bundle_cache = load_dataset_bundle(config.inter_path, config.user_path,
                                         config.item_path);
    }
    return *bundle_cache;
  };
  const auto train_rows = [&]() {
    return rows_on_day(filter_interactions(bundle(), config.device_filter), train_day, tz);
  };

  // 1. check-data: files exist, parse, and cover the training date.
  runner.run(0, [&]() {
    for (const std::string& p : {config.inter_path, config.user_path, config.item_path}) {
      if (!std::filesystem::exists(p)) {
        throw PipelineError("check-data: missing input file " + p);
      }
    }
    const DatasetBundle& b = bundle();
    const auto rows = train_rows();
    if (rows.empty()) {
      throw PipelineError("check-data: no interactions on train date " + config.train_date +
                          " in " + config.inter_path);
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "interactions=%zu train_day_rows=%zu users=%zu items=%zu",
                  b.interactions.size(), rows.size(), b.users.size(), b.items.size());
    return std::string(buf);
  });

  // 2. extract-kg.
  runner.run(1, [&]() {
    const auto items = training_item_records(train_rows(), bundle());
    ExtractionReport report;
    const KnowledgeGraph kg = extract_knowledge_graph(items, config.extraction, &report);
    save_kg(kg, work / "kg");
    char buf[160];
    std::snprintf(buf, sizeof(buf), "entities=%zu relations=%zu triples=%zu isolated=%zu",
                  kg.entities().size(), kg.relations().size(), kg.triples().size(),
                  report.isolated_items);
    return std::string(buf);
  });

  // 3 and 4 are independent given 2; run them concurrently when allowed.
  const auto stage_train = [&]() -> std::string {
    const KnowledgeGraph kg = load_kg(work / "kg");
    const auto rows = train_rows();

    // Deterministic user carve-out for early stopping.
    const uint64_t cut = static_cast<uint64_t>(config.validation_user_fraction * 1000.0);
    std::vector<InteractionRecord> fit_rows, valid_rows;
    for (const auto& rec : rows) {
      const bool holdout = mix_seed(config.seed, fnv1a64(rec.user_id)) % 1000 < cut;
      (holdout ? valid_rows : fit_rows).push_back(rec);
    }
    if (fit_rows.empty()) fit_rows = rows;  // degenerate carve-out, train on all

    TrainingPieces pieces =
        build_training_pieces(fit_rows, kg, config.model, config.max_history);
    ValidationFn validate;
    ProfileStore valid_profiles;
    if (valid_rows.empty()) {
      validate = [](const ModelParameters&) { return 0.0; };
    } else {
      RippleConfig ripple;
      ripple.n_hop = config.model.n_hop;
      ripple.n_memory = config.model.n_memory;
      ripple.seed = config.seed;
      ripple.max_history = config.max_history;
      valid_profiles = build_all_profiles(valid_rows, kg, ripple);
      validate = make_validation_fn(valid_rows, kg, valid_profiles, config.eval_k);
    }

    const TrainResult trained = train_model(pieces.examples, kg.entities().size(),
                                            kg.relations().size(), config.model, validate);
    save_model_params(trained.params, work / "model");

    nlohmann::json log;
    log["best_epoch"] = trained.best_epoch;
    log["best_metric"] = trained.best_metric;
    log["aborted"] = trained.aborted;
    if (trained.aborted) log["abort_reason"] = trained.abort_reason;
    auto epochs = nlohmann::json::array();
    for (const auto& e : trained.log) {
      epochs.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_metric", e.val_metric},
                        {"best_metric", e.best_metric}});
    }
    log["epochs"] = epochs;
    write_file(work / "model" / "training_log.json", log.dump(2) + "\n");

    char buf[160];
    std::snprintf(buf, sizeof(buf), "examples=%zu epochs=%zu best_epoch=%d best_ndcg=%.5f",
                  pieces.examples.size(), trained.log.size(), trained.best_epoch,
                  trained.best_metric);
    return std::string(buf);
  };

  const auto stage_profiles = [&]() -> std::string {
    const KnowledgeGraph kg = load_kg(work / "kg");
    RippleConfig ripple;
    ripple.n_hop = config.model.n_hop;
    ripple.n_memory = config.model.n_memory;
    ripple.seed = config.seed;
    ripple.max_history = config.max_history;
    const ProfileStore store = build_all_profiles(train_rows(), kg, ripple);
    write_file(work / "profiles.bin", serialize_profiles(store));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "profiles=%zu", store.profiles.size());
    return std::string(buf);
  };

  const bool need_train = !runner.done(2);
  const bool need_profiles = !runner.done(3);
  if (config.parallel_stages && need_train && need_profiles) {
    bundle();  // materialize the shared cache before the fan-out
    auto profiles_future = std::async(std::launch::async, stage_profiles);
    std::string train_detail;
    std::exception_ptr train_error;
    const auto start = Clock::now();
    try {
      train_detail = stage_train();
    } catch (...) {
      train_error = std::current_exception();
    }
    // Join before rethrowing so the future never outlives this scope.
    std::string profiles_detail;
    std::exception_ptr profiles_error;
    try {
      profiles_detail = profiles_future.get();
    } catch (...) {
      profiles_error = std::current_exception();
    }
    if (train_error) std::rethrow_exception(train_error);
    if (profiles_error) std::rethrow_exception(profiles_error);
    const double elapsed = seconds_since(start);
    runner.mark(2, train_detail);
    result.stages.push_back({kStageNames[2], "completed", elapsed, train_detail});
    runner.maybe_abort(2);
    runner.mark(3, profiles_detail);
    result.stages.push_back({kStageNames[3], "completed", 0.0, profiles_detail});
    runner.maybe_abort(3);
  } else {
    runner.run(2, stage_train);
    runner.run(3, stage_profiles);
  }

  // 5. merge + archive.
  runner.run(4, [&]() {
    const KnowledgeGraph kg = load_kg(work / "kg");
    ModelArtifacts artifacts;
    artifacts.config_snapshot = config.snapshot;
    artifacts.train_date = config.train_date;
    artifacts.entities = kg.entities();
    artifacts.relations = kg.relations();
    artifacts.params = load_model_params(work / "model");
    artifacts.profiles =
        deserialize_profiles(read_file(work / "profiles.bin"), "profiles.bin");
    artifacts.simindex = build_index_for_vocab(artifacts.entities, bundle());
    if (config.strategy == ColdStartStrategy::Encoder) {
      artifacts.encoder = train_bridge_encoder(artifacts.params, artifacts.simindex,
                                               config.seed);
    }
    std::filesystem::remove_all(work / "archive");
    save_archive(artifacts, work / "archive");
    return "archive_hash=" + archive_content_hash(work / "archive");
  });

  // 6. deploy.
  runner.run(5, [&]() {
    const auto deployed = deploy_archive(work / "archive", config.serving_dir);
    return "deployed=" + deployed.string();
  });

  result.deployed_dir = resolve_archive_dir(config.serving_dir);
  result.content_hash = archive_content_hash(config.serving_dir);
  return result;
}

std::vector<Recommendation> recommend(const ModelArtifacts& artifacts,
                                      const std::string& user_id,
                                      std::vector<std::string> candidates, size_t top_n,
                                      ColdStartStrategy strategy,
                                      const ContentEmbeddingProvider* provider) {
  std::set<std::string> unique;
  if (candidates.empty()) {
    for (const auto& name : artifacts.entities.names()) {
      if (const auto item_id = item_id_from_entity(name)) unique.insert(*item_id);
    }
  } else {
    unique.insert(candidates.begin(), candidates.end());
  }
  if (unique.empty()) throw ValueError("recommend: empty candidate set");

  const RippleProfile* profile = artifacts.profiles.find(user_id);
  const bool usable = profile != nullptr && !profile->empty();

  std::vector<Recommendation> recs;
  recs.reserve(unique.size());
  if (!usable) {
    for (const auto& item_id : unique) {
      Recommendation rec;
      rec.item_id = item_id;
      rec.score = static_cast<double>(artifacts.profiles.popularity(item_id));
      rec.provenance = "fallback:popularity";
      recs.push_back(std::move(rec));
    }
  } else {
    const SimilarityIndex* index =
        artifacts.simindex.entries.empty() ? nullptr : &artifacts.simindex;
    const EncoderParams* encoder = artifacts.encoder ? &*artifacts.encoder : nullptr;
    ColdStartResolver resolver(artifacts.params, artifacts.entities, strategy, index,
                               encoder, provider);
    for (const auto& item_id : unique) {
      Recommendation rec;
      rec.item_id = item_id;
      const ResolvedEmbedding resolved = resolver.resolve(item_id);
      rec.score = score_candidate(artifacts.params, *profile, resolved.vec).score;
      rec.provenance = resolved.provenance;
      recs.push_back(std::move(rec));
    }
  }

  std::sort(recs.begin(), recs.end(), [](const Recommendation& a, const Recommendation& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.item_id < b.item_id;
  });
  if (top_n > 0 && recs.size() > top_n) recs.resize(top_n);
  for (size_t i = 0; i < recs.size(); ++i) recs[i].rank = static_cast<int>(i) + 1;
  return recs;
}

std::string recommendations_tsv(std::span<const Recommendation> recs) {
  std::string out = "rank\titem_id\tscore\tprovenance\n";
  char buf[48];
  for (const auto& rec : recs) {
    std::snprintf(buf, sizeof(buf), "%d\t", rec.rank);
    out += buf;
    out += rec.item_id;
    std::snprintf(buf, sizeof(buf), "\t%.6f\t", rec.score);
    out += buf;
    out += rec.provenance;
    out += '\n';
  }
  return out;
}

}  // namespace ripplerec
