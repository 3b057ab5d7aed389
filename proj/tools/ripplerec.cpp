#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <set>

#include "ripplerec/archive.hpp"
#include "ripplerec/binio.hpp"
#include "ripplerec/eval.hpp"
#include "ripplerec/pipeline.hpp"
#include "ripplerec/synth.hpp"
#include "ripplerec/text.hpp"

namespace rr = ripplerec;

namespace {

struct DatasetPaths {
  std::filesystem::path inter, user, item;
};

// A data directory holds exactly one <name>.inter / .user / .item trio.
DatasetPaths find_dataset_files(const std::filesystem::path& dir) {
  DatasetPaths paths;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (ext == ".inter") paths.inter = entry.path();
    if (ext == ".user") paths.user = entry.path();
    if (ext == ".item") paths.item = entry.path();
  }
  if (paths.inter.empty() || paths.user.empty() || paths.item.empty()) {
    throw rr::IoError("data directory " + dir.string() +
                      " must contain .inter, .user and .item files");
  }
  return paths;
}

int cmd_data_validate(const std::string& inter, const std::string& user,
                      const std::string& item, const std::string& timezone) {
  const rr::DatasetBundle bundle = rr::load_dataset_bundle(inter, user, item);
  std::printf("interactions\t%zu\n", bundle.interactions.size());
  std::printf("users\t%zu\n", bundle.users.size());
  std::printf("items\t%zu\n", bundle.items.size());
  std::printf("dangling_users\t%zu\n", bundle.referential.dangling_users);
  std::printf("dangling_items\t%zu\n", bundle.referential.dangling_items);

  const rr::TimezoneRule tz = rr::TimezoneRule::parse(timezone);
  try {
    const rr::TemporalSplit split = rr::make_temporal_splits(bundle, tz);
    std::printf("split_train\t%s..%s\n", rr::format_day(split.train.first).c_str(),
                rr::format_day(split.train.last).c_str());
    std::printf("split_valid\t%s..%s\n", rr::format_day(split.valid.first).c_str(),
                rr::format_day(split.valid.last).c_str());
    std::printf("split_test\t%s..%s\n", rr::format_day(split.test.first).c_str(),
                rr::format_day(split.test.last).c_str());
  } catch (const rr::InsufficientDataError& e) {
    std::printf("split\tunavailable (%s)\n", e.what());
  }
  return 0;
}

int cmd_data_synth(const std::string& config_path, const std::string& out,
                   std::optional<uint64_t> seed) {
  rr::SynthConfig config;
  if (!config_path.empty()) {
    config = rr::synth_config_from_json_text(rr::read_file(config_path));
  }
  if (seed) config.seed = *seed;
  const rr::SynthResult result = rr::generate_synthetic_dataset(config);
  const rr::SynthPaths paths = rr::write_synthetic_dataset(result, out);
  std::printf("wrote\t%s\n", paths.inter.string().c_str());
  std::printf("wrote\t%s\n", paths.user.string().c_str());
  std::printf("wrote\t%s\n", paths.item.string().c_str());
  std::printf("interactions\t%zu\n", result.inter.rows.size());
  return 0;
}

int cmd_kg_extract(const std::string& item_path, const std::string& inter_path,
                   const std::string& out, double entity_threshold,
                   double category_threshold) {
  const rr::AtomicTable item_table =
      rr::parse_atomic_file(item_path, rr::AtomicFileKind::Item);
  std::vector<rr::ItemRecord> items = rr::extract_items(item_table, item_path);

  if (!inter_path.empty()) {
    const rr::AtomicTable inter_table =
        rr::parse_atomic_file(inter_path, rr::AtomicFileKind::Inter);
    const auto inter = rr::extract_interactions(inter_table, inter_path);
    std::set<std::string> referenced;
    for (const auto& rec : inter) referenced.insert(rec.item_id);
    std::erase_if(items, [&referenced](const rr::ItemRecord& rec) {
      return !referenced.contains(rec.item_id);
    });
  }

  rr::ExtractionConfig config;
  config.entity_score_threshold = entity_threshold;
  config.category_threshold = category_threshold;
  rr::ExtractionReport report;
  const rr::KnowledgeGraph kg = rr::extract_knowledge_graph(items, config, &report);
  rr::save_kg(kg, out);
  std::printf("entities\t%zu\n", kg.entities().size());
  std::printf("relations\t%zu\n", kg.relations().size());
  std::printf("triples\t%zu\n", kg.triples().size());
  std::printf("isolated_items\t%zu\n", report.isolated_items);
  return 0;
}

int cmd_kg_profiles(const std::string& kg_dir, const std::string& inter_path, int hops,
                    int memory, uint64_t seed, int64_t max_history,
                    const std::string& out) {
  const rr::KnowledgeGraph kg = rr::load_kg(kg_dir);
  const rr::AtomicTable inter_table =
      rr::parse_atomic_file(inter_path, rr::AtomicFileKind::Inter);
  const auto rows = rr::extract_interactions(inter_table, inter_path);

  rr::RippleConfig config;
  config.n_hop = hops;
  config.n_memory = memory;
  config.seed = seed;
  config.max_history = max_history;
  const rr::ProfileStore store = rr::build_all_profiles(rows, kg, config);
  rr::write_file(out, rr::serialize_profiles(store));

  size_t empty = 0;
  for (const auto& p : store.profiles) {
    if (p.empty()) ++empty;
  }
  std::printf("profiles\t%zu\n", store.profiles.size());
  std::printf("empty_profiles\t%zu\n", empty);
  std::printf("wrote\t%s\n", out.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out) {
  rr::PipelineConfig base = config_path.empty()
                                ? rr::PipelineConfig::from_json_text("{}")
                                : rr::PipelineConfig::from_json_file(config_path);

  DatasetPaths paths;
  if (!data_dir.empty()) {
    paths = find_dataset_files(data_dir);
  } else {
    paths = {base.inter_path, base.user_path, base.item_path};
  }
  const rr::DatasetBundle bundle =
      rr::load_dataset_bundle(paths.inter, paths.user, paths.item);

  rr::TrainRunOptions options;
  options.model = base.model;
  options.extraction = base.extraction;
  options.max_history = base.max_history;
  options.strategy = base.strategy;
  options.timezone = base.timezone;
  options.device_filter = base.device_filter;
  options.eval_k = base.eval_k;
  options.snapshot = base.snapshot;

  rr::TrainResult log;
  const rr::ModelArtifacts artifacts =
      rr::train_artifacts_from_splits(bundle, options, &log);
  rr::save_archive(artifacts, out);

  for (const auto& e : log.log) {
    std::printf("epoch\t%d\tloss\t%.6f\tval_ndcg@%d\t%.5f\n", e.epoch, e.train_loss,
                options.eval_k, e.val_metric);
  }
  std::printf("best_epoch\t%d\tbest_ndcg@%d\t%.5f\n", log.best_epoch, options.eval_k,
              log.best_metric);
  std::printf("archive\t%s\n", out.c_str());
  return 0;
}

int cmd_coldstart_index(const std::string& archive, const std::string& item_path,
                        const std::string& out) {
  const rr::ModelArtifacts artifacts = rr::load_archive(archive);
  const rr::AtomicTable item_table =
      rr::parse_atomic_file(item_path, rr::AtomicFileKind::Item);
  const auto items = rr::extract_items(item_table, item_path);
  const rr::SimilarityIndex index = rr::build_similarity_index(artifacts.entities, items);
  std::printf("indexed_items\t%zu\n", index.entries.size());
  std::printf("excluded_zero_norm\t%zu\n", index.excluded_zero_norm);
  std::printf("excluded_missing_embedding\t%zu\n", index.excluded_missing_embedding);
  if (!out.empty()) {
    std::string body = "item_id\tentity\n";
    for (const auto& e : index.entries) {
      body += e.item_id + "\t" + std::to_string(e.entity) + "\n";
    }
    rr::write_file(out, body);
    std::printf("wrote\t%s\n", out.c_str());
  }
  return 0;
}

int cmd_coldstart_eval(const std::string& archive, const std::string& item_path,
                       const std::string& strategy, double holdout, uint64_t seed,
                       const std::string& out_dir) {
  const rr::ModelArtifacts artifacts = rr::load_archive(archive);
  const rr::AtomicTable item_table =
      rr::parse_atomic_file(item_path, rr::AtomicFileKind::Item);
  const auto items = rr::extract_items(item_table, item_path);

  const rr::BridgeReport report =
      rr::evaluate_bridge(artifacts.params, artifacts.entities, items,
                          rr::parse_strategy(strategy), holdout, seed);
  std::printf("strategy\t%s\n", report.strategy.c_str());
  std::printf("pairs\t%zu\n", report.pairs);
  std::printf("mean_cosine\t%.6f\n", report.mean);
  std::printf("median_cosine\t%.6f\n", report.median);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto tsv = std::filesystem::path(out_dir) / "bridge_report.tsv";
    const auto csv = std::filesystem::path(out_dir) / "histogram.csv";
    rr::write_file(tsv, rr::bridge_report_tsv(report));
    rr::write_file(csv, rr::histogram_csv(report));
    std::printf("wrote\t%s\n", tsv.string().c_str());
    std::printf("wrote\t%s\n", csv.string().c_str());
  }
  return 0;
}

int cmd_eval(const std::string& archive, const std::string& data_dir,
             const std::string& train_date, int k, const std::string& strategy,
             const std::string& baseline_path, const std::string& out_path) {
  const rr::ModelArtifacts artifacts = rr::load_archive(archive);
  const DatasetPaths paths = find_dataset_files(data_dir);
  const rr::DatasetBundle bundle =
      rr::load_dataset_bundle(paths.inter, paths.user, paths.item);

  const std::string tz_name = artifacts.config_snapshot.value("data.timezone",
                                                              std::string("Europe/Warsaw"));
  const rr::TimezoneRule tz = rr::TimezoneRule::parse(tz_name);
  const int64_t train_day = rr::parse_day(train_date);

  const rr::ItemTableProvider provider(bundle.items);
  const rr::SimilarityIndex* index =
      artifacts.simindex.entries.empty() ? nullptr : &artifacts.simindex;
  const rr::EncoderParams* encoder = artifacts.encoder ? &*artifacts.encoder : nullptr;
  const rr::ColdStartResolver resolver(artifacts.params, artifacts.entities,
                                       rr::parse_strategy(strategy), index, encoder,
                                       &provider);
  rr::SliceEvalContext ctx;
  ctx.params = &artifacts.params;
  ctx.profiles = &artifacts.profiles;
  ctx.resolver = &resolver;

  std::vector<rr::ModelSliceRow> rows;
  rows.push_back({"ripplenet+" + strategy,
                  rr::build_slice_report(ctx, bundle, train_day, tz, k)});
  if (!baseline_path.empty()) {
    const rr::BaselineScores baseline = rr::BaselineScores::load_tsv(baseline_path, tz);
    rows.push_back({"baseline", rr::build_slice_report_fn(
                                    [&baseline](int64_t day) { return baseline.scorer(day); },
                                    bundle, train_day, tz, k)});
  }

  std::fputs(rr::render_comparison_table(rows, k).c_str(), stdout);
  if (!out_path.empty()) {
    rr::write_file(out_path, rr::comparison_tsv(rows, k));
    std::printf("wrote\t%s\n", out_path.c_str());
  }
  return 0;
}

int cmd_pipeline_run(const std::string& config_path) {
  const rr::PipelineConfig config = rr::PipelineConfig::from_json_file(config_path);
  const rr::PipelineResult result = rr::run_pipeline(config);
  for (const auto& stage : result.stages) {
    std::printf("%s\t%s\t%.2fs\t%s\n", stage.name.c_str(), stage.status.c_str(),
                stage.seconds, stage.detail.c_str());
  }
  std::printf("deployed\t%s\n", result.deployed_dir.string().c_str());
  std::printf("content_hash\t%s\n", result.content_hash.c_str());
  return 0;
}

int cmd_recommend(const std::string& archive, const std::string& user,
                  const std::string& items_csv, size_t top_n, const std::string& strategy,
                  const std::string& item_file) {
  const rr::ModelArtifacts artifacts = rr::load_archive(archive);

  std::vector<std::string> candidates;
  if (!items_csv.empty()) {
    for (auto& part : rr::split(items_csv, ',')) {
      if (!part.empty()) candidates.push_back(std::move(part));
    }
  }

  std::unique_ptr<rr::ContentEmbeddingProvider> provider;
  if (!item_file.empty()) {
    const rr::AtomicTable item_table =
        rr::parse_atomic_file(item_file, rr::AtomicFileKind::Item);
    // The provider copies the embeddings it needs.
    provider = std::make_unique<rr::ItemTableProvider>(rr::extract_items(item_table, item_file));
  }

  const auto recs = rr::recommend(artifacts, user, std::move(candidates), top_n,
                                  rr::parse_strategy(strategy), provider.get());
  std::fputs(rr::recommendations_tsv(recs).c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ripple-propagation news recommender with cold-start bridging"};
  app.require_subcommand(1);

  // data
  auto* data = app.add_subcommand("data", "dataset utilities");
  data->require_subcommand(1);
  std::string inter, user, item, timezone = "Europe/Warsaw";
  auto* validate = data->add_subcommand("validate", "parse and report a dataset");
  validate->add_option("--inter", inter)->required();
  validate->add_option("--user", user)->required();
  validate->add_option("--item", item)->required();
  validate->add_option("--timezone", timezone);

  std::string synth_config, synth_out;
  std::optional<uint64_t> synth_seed;
  auto* synth = data->add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", synth_config);
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--seed", synth_seed);

  // kg
  auto* kg = app.add_subcommand("kg", "knowledge graph utilities");
  kg->require_subcommand(1);
  std::string kg_item, kg_inter, kg_out;
  double entity_threshold = 0.0, category_threshold = 0.5;
  auto* extract = kg->add_subcommand("extract", "extract a knowledge graph from item metadata");
  extract->add_option("--item", kg_item)->required();
  extract->add_option("--inter", kg_inter, "restrict to items referenced here");
  extract->add_option("--out", kg_out)->required();
  extract->add_option("--entity-threshold", entity_threshold);
  extract->add_option("--category-threshold", category_threshold);

  std::string prof_kg, prof_inter, prof_out;
  int hops = 5, memory = 16;
  uint64_t prof_seed = 0;
  int64_t max_history = -1;
  auto* profiles = kg->add_subcommand("profiles", "build ripple profiles");
  profiles->add_option("--kg", prof_kg)->required();
  profiles->add_option("--inter", prof_inter)->required();
  profiles->add_option("--out", prof_out)->required();
  profiles->add_option("--hops", hops);
  profiles->add_option("--memory", memory);
  profiles->add_option("--seed", prof_seed);
  profiles->add_option("--max-history", max_history);

  // train
  std::string train_config, train_data, train_out;
  auto* train = app.add_subcommand("train", "train on the dataset's temporal splits");
  train->add_option("--config", train_config);
  train->add_option("--data", train_data, "directory with .inter/.user/.item");
  train->add_option("--out", train_out)->required();

  // coldstart
  auto* coldstart = app.add_subcommand("coldstart", "cold-start bridge utilities");
  coldstart->require_subcommand(1);
  std::string cs_archive, cs_item, cs_out;
  auto* cs_index = coldstart->add_subcommand("index", "build the similarity index");
  cs_index->add_option("--archive", cs_archive)->required();
  cs_index->add_option("--item", cs_item)->required();
  cs_index->add_option("--out", cs_out);

  std::string cse_archive, cse_item, cse_strategy = "similarity", cse_out;
  double cse_holdout = 0.2;
  uint64_t cse_seed = 0;
  auto* cs_eval = coldstart->add_subcommand("eval", "held-out bridge quality report");
  cs_eval->add_option("--archive", cse_archive)->required();
  cs_eval->add_option("--item", cse_item)->required();
  cs_eval->add_option("--strategy", cse_strategy)->check(CLI::IsMember({"similarity", "encoder"}));
  cs_eval->add_option("--holdout", cse_holdout);
  cs_eval->add_option("--seed", cse_seed);
  cs_eval->add_option("--out", cse_out);

  // eval
  std::string eval_archive, eval_data, eval_date, eval_strategy = "similarity";
  std::string eval_baseline, eval_out;
  int eval_k = 10;
  auto* eval = app.add_subcommand("eval", "three-slice offline evaluation");
  eval->add_option("--archive", eval_archive)->required();
  eval->add_option("--data", eval_data)->required();
  eval->add_option("--train-date", eval_date)->required();
  eval->add_option("--k", eval_k);
  eval->add_option("--strategy", eval_strategy);
  eval->add_option("--baseline", eval_baseline, "TSV: user_id item_id day score");
  eval->add_option("--out", eval_out);

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "retraining pipeline");
  pipeline->require_subcommand(1);
  std::string pipe_config;
  auto* pipe_run = pipeline->add_subcommand("run", "run all stages and deploy");
  pipe_run->add_option("--config", pipe_config)->required();

  // recommend
  std::string rec_archive, rec_user, rec_items, rec_strategy = "similarity", rec_item_file;
  size_t rec_top = 10;
  auto* rec = app.add_subcommand("recommend", "rank candidates for a user");
  rec->add_option("--archive", rec_archive)->required();
  rec->add_option("--user", rec_user)->required();
  rec->add_option("--items", rec_items, "comma-separated candidate item ids");
  rec->add_option("--top", rec_top, "result count (0 = all)");
  rec->add_option("--strategy", rec_strategy);
  rec->add_option("--item-file", rec_item_file, ".item file for content embeddings");

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_data_validate(inter, user, item, timezone);
    if (synth->parsed()) return cmd_data_synth(synth_config, synth_out, synth_seed);
    if (extract->parsed()) {
      return cmd_kg_extract(kg_item, kg_inter, kg_out, entity_threshold, category_threshold);
    }
    if (profiles->parsed()) {
      return cmd_kg_profiles(prof_kg, prof_inter, hops, memory, prof_seed, max_history,
                             prof_out);
    }
    if (train->parsed()) return cmd_train(train_config, train_data, train_out);
    if (cs_index->parsed()) return cmd_coldstart_index(cs_archive, cs_item, cs_out);
    if (cs_eval->parsed()) {
      return cmd_coldstart_eval(cse_archive, cse_item, cse_strategy, cse_holdout, cse_seed,
                                cse_out);
    }
    if (eval->parsed()) {
      return cmd_eval(eval_archive, eval_data, eval_date, eval_k, eval_strategy,
                      eval_baseline, eval_out);
    }
    if (pipe_run->parsed()) return cmd_pipeline_run(pipe_config);
    if (rec->parsed()) {
      return cmd_recommend(rec_archive, rec_user, rec_items, rec_top, rec_strategy,
                           rec_item_file);
    }
  } catch (const rr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
