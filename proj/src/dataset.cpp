#include "ripplerec/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace ripplerec {

namespace {

std::string cell_token(const AtomicTable& table, size_t row, std::string_view name) {
  const AtomicValue* v = table.cell(row, name);
  if (v == nullptr || !v->present()) return {};
  return v->token();
}

std::vector<std::string> cell_tokens(const AtomicTable& table, size_t row,
                                     std::string_view name) {
  const AtomicValue* v = table.cell(row, name);
  if (v == nullptr || !v->present()) return {};
  return v->tokens();
}

std::vector<double> cell_numbers(const AtomicTable& table, size_t row,
                                 std::string_view name) {
  const AtomicValue* v = table.cell(row, name);
  if (v == nullptr || !v->present()) return {};
  return v->numbers();
}

std::optional<double> cell_number(const AtomicTable& table, size_t row,
                                  std::string_view name) {
  const AtomicValue* v = table.cell(row, name);
  if (v == nullptr || !v->present()) return std::nullopt;
  return v->number();
}

[[noreturn]] void value_error(std::string_view origin, size_t row, const std::string& msg) {
  // row is 0-based over data rows; +2 converts to a 1-based file line number
  // counting the header.
  throw ValueError(std::string(origin) + ":" + std::to_string(row + 2) + ": " + msg);
}

}  // namespace

const ItemRecord* DatasetBundle::find_item(const std::string& id) const {
  const auto it = item_index.find(id);
  return it == item_index.end() ? nullptr : &items[it->second];
}

const UserRecord* DatasetBundle::find_user(const std::string& id) const {
  const auto it = user_index.find(id);
  return it == user_index.end() ? nullptr : &users[it->second];
}

std::vector<InteractionRecord> extract_interactions(const AtomicTable& table,
                                                    std::string_view origin) {
  std::vector<InteractionRecord> out;
  out.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    InteractionRecord rec;
    rec.row = r;
    rec.user_id = cell_token(table, r, "user_id");
    rec.item_id = cell_token(table, r, "item_id");
    if (rec.user_id.empty()) value_error(origin, r, "missing user_id");
    if (rec.item_id.empty()) value_error(origin, r, "missing item_id");

    const auto click = cell_number(table, r, "is_click");
    if (!click) value_error(origin, r, "missing is_click");
    if (*click != 0.0 && *click != 1.0) {
      value_error(origin, r, "is_click must be 0 or 1, got " + std::to_string(*click));
    }
    rec.is_click = static_cast<int>(*click);

    if (const auto ts = cell_number(table, r, "event_timestamp_unix")) {
      if (*ts <= 0) value_error(origin, r, "event_timestamp_unix must be positive");
      rec.event_timestamp_unix = static_cast<int64_t>(std::llround(*ts));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ItemRecord> extract_items(const AtomicTable& table, std::string_view origin) {
  std::vector<ItemRecord> out;
  out.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    ItemRecord rec;
    rec.row = r;
    rec.item_id = cell_token(table, r, "item_id");
    if (rec.item_id.empty()) value_error(origin, r, "missing item_id");
    rec.title = cell_token(table, r, "title");
    rec.lead = cell_token(table, r, "lead");
    rec.text = cell_token(table, r, "text");
    rec.author = cell_token(table, r, "author");

    rec.wikidata_entity_ids = cell_tokens(table, r, "wikidata_entities_ids");
    rec.wikidata_entity_scores = cell_numbers(table, r, "wikidata_entities_scores");
    if (rec.wikidata_entity_scores.empty() && !rec.wikidata_entity_ids.empty()) {
      rec.wikidata_entity_scores.assign(rec.wikidata_entity_ids.size(), 1.0);
    }
    if (rec.wikidata_entity_ids.size() != rec.wikidata_entity_scores.size()) {
      value_error(origin, r, "wikidata_entities_ids and wikidata_entities_scores lengths differ");
    }

    rec.wikidata_topics = cell_tokens(table, r, "wikidata_topics");
    rec.wikidata_topic_scores = cell_numbers(table, r, "wikidata_topics_scores");
    if (rec.wikidata_topic_scores.empty() && !rec.wikidata_topics.empty()) {
      rec.wikidata_topic_scores.assign(rec.wikidata_topics.size(), 1.0);
    }
    if (rec.wikidata_topics.size() != rec.wikidata_topic_scores.size()) {
      value_error(origin, r, "wikidata_topics and wikidata_topics_scores lengths differ");
    }

    auto embedding = cell_numbers(table, r, "openai_embedding");
    if (!embedding.empty()) {
      if (embedding.size() != kContentEmbeddingDim) {
        value_error(origin, r, "openai_embedding has " + std::to_string(embedding.size()) +
                                   " dims, expected " + std::to_string(kContentEmbeddingDim));
      }
      for (double v : embedding) {
        if (!std::isfinite(v)) value_error(origin, r, "openai_embedding has non-finite entry");
      }
      rec.content_embedding = std::move(embedding);
    }

    rec.category_scores = cell_numbers(table, r, "category_scores");
    if (const auto premium = cell_number(table, r, "content_publication_premium")) {
      rec.premium_flag = *premium != 0.0 ? 1 : 0;
    }
    for (const auto& spec : table.fields) {
      if (spec.kind == FieldKind::FloatSeq && spec.name.rfind("stylometrix_", 0) == 0) {
        const auto vals = cell_numbers(table, r, spec.name);
        rec.stylometric_features.insert(rec.stylometric_features.end(), vals.begin(),
                                        vals.end());
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<UserRecord> extract_users(const AtomicTable& table, std::string_view origin) {
  std::vector<UserRecord> out;
  out.reserve(table.rows.size());
  for (size_t r = 0; r < table.rows.size(); ++r) {
    UserRecord rec;
    rec.row = r;
    rec.user_id = cell_token(table, r, "user_id");
    if (rec.user_id.empty()) value_error(origin, r, "missing user_id");
    rec.category_preferences = cell_numbers(table, r, "category_preferences");
    if (!rec.category_preferences.empty()) {
      double sum = 0.0;
      for (double v : rec.category_preferences) sum += v;
      if (std::abs(sum - 1.0) > 1e-6) {
        value_error(origin, r, "category_preferences sum to " + std::to_string(sum) +
                                   ", expected 1");
      }
    }
    rec.login_status = cell_token(table, r, "user_sso_name");
    rec.browser = cell_token(table, r, "browser");
    rec.device = cell_token(table, r, "device");
    out.push_back(std::move(rec));
  }
  return out;
}

DatasetBundle bundle_from_tables(AtomicTable inter, AtomicTable user, AtomicTable item) {
  DatasetBundle bundle;
  bundle.inter_table = std::move(inter);
  bundle.user_table = std::move(user);
  bundle.item_table = std::move(item);

  bundle.interactions = extract_interactions(bundle.inter_table);
  bundle.users = extract_users(bundle.user_table);
  bundle.items = extract_items(bundle.item_table);

  for (size_t i = 0; i < bundle.users.size(); ++i) {
    if (!bundle.user_index.emplace(bundle.users[i].user_id, i).second) {
      throw SchemaError(".user: duplicate user_id '" + bundle.users[i].user_id + "'");
    }
  }
  for (size_t i = 0; i < bundle.items.size(); ++i) {
    if (!bundle.item_index.emplace(bundle.items[i].item_id, i).second) {
      throw SchemaError(".item: duplicate item_id '" + bundle.items[i].item_id + "'");
    }
  }
  for (const auto& rec : bundle.interactions) {
    if (!bundle.user_index.contains(rec.user_id)) ++bundle.referential.dangling_users;
    if (!bundle.item_index.contains(rec.item_id)) ++bundle.referential.dangling_items;
  }
  return bundle;
}

DatasetBundle load_dataset_bundle(const std::filesystem::path& inter_path,
                                  const std::filesystem::path& user_path,
                                  const std::filesystem::path& item_path) {
  return bundle_from_tables(parse_atomic_file(inter_path, AtomicFileKind::Inter),
                            parse_atomic_file(user_path, AtomicFileKind::User),
                            parse_atomic_file(item_path, AtomicFileKind::Item));
}

int TemporalSplit::split_of_timestamp(int64_t unix_ts) const {
  const int64_t day = timezone.local_day(unix_ts);
  if (day <= train.last) return 0;
  if (day <= valid.last) return 1;
  return 2;
}

TemporalSplit make_temporal_splits(const DatasetBundle& bundle, const TimezoneRule& tz) {
  int64_t min_day = 0, max_day = 0;
  bool any = false;
  for (const auto& rec : bundle.interactions) {
    if (rec.event_timestamp_unix <= 0) {
      throw InsufficientDataError(
          "interaction without event_timestamp_unix cannot be split temporally");
    }
    const int64_t day = tz.local_day(rec.event_timestamp_unix);
    if (!any) {
      min_day = max_day = day;
      any = true;
    } else {
      min_day = std::min(min_day, day);
      max_day = std::max(max_day, day);
    }
  }
  if (!any) throw InsufficientDataError("no interactions to split");

  const int64_t span = max_day - min_day + 1;
  if (span < 7) {
    throw InsufficientDataError("interactions span " + std::to_string(span) +
                                " calendar days, need at least 7 (3 test + 3 valid + 1 train)");
  }

  TemporalSplit split;
  split.timezone = tz;
  split.test = {max_day - 2, max_day};
  split.valid = {max_day - 5, max_day - 3};
  split.train = {min_day, max_day - 6};
  return split;
}

}  // namespace ripplerec
