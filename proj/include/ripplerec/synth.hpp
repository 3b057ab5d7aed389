#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ripplerec/atomic_format.hpp"

namespace ripplerec {

// Generator for schema-complete synthetic data. Users carry a latent topic
// preference, items carry a topic with shared wikidata entities and a
// content embedding near the topic centroid, so learned models have real
// structure to recover. Scales default to roughly 1/100 of the small
// reference split.
struct SynthConfig {
  int n_users = 187;
  int n_items = 208;
  int n_days = 34;
  int n_topics = 10;
  double click_noise = 0.1;
  uint64_t seed = 7;

  // Shape knobs.
  int impressions_per_user_day = 10;      // mean; drawn uniform in [m/2, 3m/2]
  double preference_concentration = 0.7;  // weight of a user's primary topic
  double target_click_rate = 0.093;       // approx 1:9.7 positives:negatives
  double embedding_noise = 0.02;          // per-component noise around centroid
  bool daily_catalog = false;             // true: full catalog turnover per day
  std::string start_date = "2025-03-12";
  std::string timezone = "Europe/Warsaw";

  void validate() const;  // throws ConfigError
};

struct SynthResult {
  AtomicTable inter;
  AtomicTable user;
  AtomicTable item;
};

SynthResult generate_synthetic_dataset(const SynthConfig& config);

// Writes <name>.inter / <name>.user / <name>.item into dir. Deterministic
// byte content for a fixed config.
struct SynthPaths {
  std::filesystem::path inter;
  std::filesystem::path user;
  std::filesystem::path item;
};
SynthPaths write_synthetic_dataset(const SynthResult& result,
                                   const std::filesystem::path& dir,
                                   const std::string& name = "synth");

SynthConfig synth_config_from_json_text(std::string_view text);

}  // namespace ripplerec
