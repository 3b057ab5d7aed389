#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "ripplerec/synth.hpp"

using namespace ripplerec;

namespace {

SynthConfig small_config() {
  SynthConfig config;
  config.n_users = 40;
  config.n_items = 30;
  config.n_days = 8;
  config.n_topics = 5;
  config.seed = 3;
  return config;
}

}  // namespace

TEST_CASE("identical config and seed give byte-identical files") {
  const SynthConfig config = small_config();
  const SynthResult a = generate_synthetic_dataset(config);
  const SynthResult b = generate_synthetic_dataset(config);
  CHECK(write_atomic_text(a.inter) == write_atomic_text(b.inter));
  CHECK(write_atomic_text(a.user) == write_atomic_text(b.user));
  CHECK(write_atomic_text(a.item) == write_atomic_text(b.item));

  SynthConfig other = config;
  other.seed = 4;
  const SynthResult c = generate_synthetic_dataset(other);
  CHECK(write_atomic_text(a.inter) != write_atomic_text(c.inter));
}

TEST_CASE("noiseless single-topic users click only their topic") {
  SynthConfig config = small_config();
  config.click_noise = 0.0;
  config.preference_concentration = 1.0;
  config.impressions_per_user_day = 14;
  const SynthResult result = generate_synthetic_dataset(config);

  // item -> topic from the item table; user -> primary topic from prefs.
  const auto items = extract_items(result.item);
  std::unordered_map<std::string, std::string> item_topic;
  for (const auto& item : items) {
    REQUIRE(item.wikidata_topics.size() == 1);
    item_topic[item.item_id] = item.wikidata_topics[0];
  }
  const auto users = extract_users(result.user);
  std::unordered_map<std::string, std::string> user_topic;
  for (const auto& user : users) {
    const auto& prefs = user.category_preferences;
    const auto best = std::max_element(prefs.begin(), prefs.end());
    user_topic[user.user_id] = "T" + std::to_string(best - prefs.begin());
  }

  size_t clicks = 0;
  for (const auto& rec : extract_interactions(result.inter)) {
    if (rec.is_click != 1) continue;
    ++clicks;
    CHECK(item_topic.at(rec.item_id) == user_topic.at(rec.user_id));
  }
  CHECK(clicks > 0);
}

TEST_CASE("default config hits the target label ratio band") {
  const SynthResult result = generate_synthetic_dataset(SynthConfig{});
  size_t pos = 0, neg = 0;
  for (const auto& rec : extract_interactions(result.inter)) {
    (rec.is_click == 1 ? pos : neg) += 1;
  }
  REQUIRE(pos > 0);
  const double ratio = static_cast<double>(pos) / static_cast<double>(neg);
  // positives:negatives within [1:15, 1:5]; the reference split sits at
  // roughly 1:9.7.
  CHECK(ratio >= 1.0 / 15.0);
  CHECK(ratio <= 1.0 / 5.0);
}

TEST_CASE("generated files round-trip through the parser with the full schema") {
  rrtest::TempDir tmp;
  const SynthResult result = generate_synthetic_dataset(small_config());
  const SynthPaths paths = write_synthetic_dataset(result, tmp.path());
  const DatasetBundle bundle = load_dataset_bundle(paths.inter, paths.user, paths.item);
  CHECK(bundle.interactions.size() == result.inter.rows.size());
  CHECK(bundle.referential.dangling_users == 0);
  CHECK(bundle.referential.dangling_items == 0);

  const auto has_field = [](const AtomicTable& table, const std::string& name) {
    return table.column(name).has_value();
  };
  for (const char* name :
       {"user_id", "item_id", "is_click", "event_timestamp_unix", "event_date", "weekday",
        "hour", "is_business_day", "ip_cnt", "pu_ip_cnt", "pv_cnt", "glowna_ip_cnt",
        "pv_on_content_publication_premium_cnt", "ses_duration_sum", "device_type",
        "context_client_brand", "context_client_version", "cs", "rh_user_agent",
        "latitude", "longitude", "accuracy_radius", "geoip_city_name",
        "geoip_region_name", "is_active_click", "is_active_pageview",
        "user_evoked_sso_logged_in", "user_subscriber", "lts_pred"}) {
    CHECK_MESSAGE(has_field(bundle.inter_table, name), name);
  }
  for (const char* name :
       {"user_id", "category_preferences", "user_sso_name", "browser", "device"}) {
    CHECK_MESSAGE(has_field(bundle.user_table, name), name);
  }
  for (const char* name :
       {"item_id", "title", "lead", "text", "text_length", "author", "images",
        "wikidata_entities_words", "wikidata_entities_ids", "wikidata_entities_scores",
        "wikidata_topics", "wikidata_topics_scores", "content_publication_premium",
        "openai_embedding", "category_scores", "stylometrix_title", "stylometrix_lead",
        "stylometrix_text"}) {
    CHECK_MESSAGE(has_field(bundle.item_table, name), name);
  }

  // 8 generated days support the 1/3/3 split.
  const TemporalSplit split =
      make_temporal_splits(bundle, TimezoneRule::europe_warsaw());
  CHECK(split.train.span() == 2);
  CHECK(split.test.last == parse_day("2025-03-19"));
}

TEST_CASE("daily catalog turnover keeps items on their own day") {
  SynthConfig config = small_config();
  config.daily_catalog = true;
  const SynthResult result = generate_synthetic_dataset(config);
  const TimezoneRule tz = TimezoneRule::parse(config.timezone);
  const int64_t day0 = parse_day(config.start_date);

  std::unordered_map<std::string, std::set<int64_t>> item_days;
  for (const auto& rec : extract_interactions(result.inter)) {
    item_days[rec.item_id].insert(tz.local_day(rec.event_timestamp_unix) - day0);
  }
  for (const auto& [item, days] : item_days) {
    CHECK_MESSAGE(days.size() == 1, item);
  }
}

TEST_CASE("invalid configs are rejected") {
  SynthConfig config;
  config.n_topics = config.n_items + 1;
  CHECK_THROWS_AS(generate_synthetic_dataset(config), ConfigError);
  config = SynthConfig{};
  config.click_noise = 1.5;
  CHECK_THROWS_AS(generate_synthetic_dataset(config), ConfigError);
  config = SynthConfig{};
  config.n_users = 0;
  CHECK_THROWS_AS(generate_synthetic_dataset(config), ConfigError);
}

TEST_CASE("synth config parses from JSON") {
  const SynthConfig config = synth_config_from_json_text(
      R"({"n_users": 12, "n_items": 9, "n_days": 7, "n_topics": 3, "seed": 42,
          "daily_catalog": true})");
  CHECK(config.n_users == 12);
  CHECK(config.n_items == 9);
  CHECK(config.daily_catalog);
  CHECK_THROWS_AS(synth_config_from_json_text("{"), ConfigError);
}
