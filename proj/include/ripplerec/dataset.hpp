#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ripplerec/atomic_format.hpp"
#include "ripplerec/civil_time.hpp"

namespace ripplerec {

constexpr size_t kContentEmbeddingDim = 256;

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  int is_click = 0;
  int64_t event_timestamp_unix = 0;
  size_t row = 0;  // index into the source table for extra columns
};

struct ItemRecord {
  std::string item_id;
  std::string title;
  std::string lead;
  std::string text;
  std::string author;
  std::vector<std::string> wikidata_entity_ids;
  std::vector<double> wikidata_entity_scores;  // same length as ids
  std::vector<std::string> wikidata_topics;
  std::vector<double> wikidata_topic_scores;
  std::optional<std::vector<double>> content_embedding;  // 256 when present
  std::vector<double> category_scores;
  int premium_flag = 0;
  std::vector<double> stylometric_features;  // opaque
  size_t row = 0;
};

struct UserRecord {
  std::string user_id;
  std::vector<double> category_preferences;  // 10 floats, sum 1 when present
  std::string login_status;
  std::string browser;
  std::string device;
  size_t row = 0;
};

struct ReferentialReport {
  size_t dangling_users = 0;  // interactions whose user has no .user row
  size_t dangling_items = 0;  // interactions whose item has no .item row
};

struct DatasetBundle {
  AtomicTable inter_table;
  AtomicTable user_table;
  AtomicTable item_table;

  std::vector<InteractionRecord> interactions;
  std::vector<UserRecord> users;
  std::vector<ItemRecord> items;

  std::unordered_map<std::string, size_t> user_index;  // user_id -> users[i]
  std::unordered_map<std::string, size_t> item_index;  // item_id -> items[i]

  ReferentialReport referential;

  const ItemRecord* find_item(const std::string& id) const;
  const UserRecord* find_user(const std::string& id) const;
};

// Typed views over already-parsed tables. Validation errors are ValueError.
std::vector<InteractionRecord> extract_interactions(const AtomicTable& table,
                                                    std::string_view origin = ".inter");
std::vector<ItemRecord> extract_items(const AtomicTable& table,
                                      std::string_view origin = ".item");
std::vector<UserRecord> extract_users(const AtomicTable& table,
                                      std::string_view origin = ".user");

DatasetBundle load_dataset_bundle(const std::filesystem::path& inter_path,
                                  const std::filesystem::path& user_path,
                                  const std::filesystem::path& item_path);
DatasetBundle bundle_from_tables(AtomicTable inter, AtomicTable user, AtomicTable item);

// Inclusive local-day range.
struct DayRange {
  int64_t first = 0;
  int64_t last = 0;

  bool contains(int64_t day) const { return day >= first && day <= last; }
  int64_t span() const { return last - first + 1; }
  bool operator==(const DayRange&) const = default;
};

struct TemporalSplit {
  DayRange train;
  DayRange valid;  // 3 calendar days
  DayRange test;   // final 3 calendar days
  TimezoneRule timezone = TimezoneRule::europe_warsaw();

  // 0=train, 1=valid, 2=test
  int split_of_timestamp(int64_t unix_ts) const;
};

// test = final 3 calendar days of the data, valid = the 3 days before,
// train = everything earlier. Requires a span of at least 7 days; throws
// InsufficientDataError otherwise.
TemporalSplit make_temporal_splits(const DatasetBundle& bundle, const TimezoneRule& tz);

}  // namespace ripplerec
