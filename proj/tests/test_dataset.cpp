#include <doctest.h>

#include "helpers.hpp"
#include "ripplerec/dataset.hpp"

using namespace ripplerec;
using rrtest::InterRow;

TEST_CASE("bundle reports record counts") {
  std::vector<InterRow> rows;
  for (int i = 0; i < 10; ++i) {
    rows.push_back({"u" + std::to_string(i % 4), "i" + std::to_string(i % 5), i % 2,
                    1000000 + i});
  }
  const auto bundle = rrtest::make_bundle(rows, {"u0", "u1", "u2", "u3"},
                                          {"i0", "i1", "i2", "i3", "i4"});
  CHECK(bundle.interactions.size() == 10);
  CHECK(bundle.users.size() == 4);
  CHECK(bundle.items.size() == 5);
  CHECK(bundle.referential.dangling_users == 0);
  CHECK(bundle.referential.dangling_items == 0);
}

TEST_CASE("dangling references are reported, not fatal") {
  const auto bundle = rrtest::make_bundle({{"u0", "ghost", 1, 1000}}, {"u0"}, {"i0"});
  CHECK(bundle.referential.dangling_items == 1);
  CHECK(bundle.referential.dangling_users == 0);
  CHECK(bundle.interactions.size() == 1);
}

TEST_CASE("duplicate item_id in .item is a schema error") {
  CHECK_THROWS_AS(rrtest::make_bundle({{"u0", "i0", 1, 1000}}, {"u0"}, {"i0", "i0"}),
                  SchemaError);
}

TEST_CASE("is_click outside {0,1} is a value error") {
  const std::string text =
      "user_id:token\titem_id:token\tis_click:float\nu1\ti1\t2\n";
  const auto table = parse_atomic_text(text, AtomicFileKind::Inter);
  CHECK_THROWS_AS(extract_interactions(table), ValueError);
}

TEST_CASE("non-positive timestamp is a value error") {
  const std::string text =
      "user_id:token\titem_id:token\tis_click:float\tevent_timestamp_unix:float\n"
      "u1\ti1\t1\t0\n";
  const auto table = parse_atomic_text(text, AtomicFileKind::Inter);
  CHECK_THROWS_AS(extract_interactions(table), ValueError);
}

TEST_CASE("content embedding must have 256 dims when present") {
  std::string text = "item_id:token\topenai_embedding:float_seq\ni1\t";
  for (int i = 0; i < 255; ++i) text += (i ? " 0" : "0");
  text += "\n";
  const auto table = parse_atomic_text(text, AtomicFileKind::Item);
  CHECK_THROWS_AS(extract_items(table), ValueError);
}

TEST_CASE("entity ids and scores must pair up") {
  const std::string text =
      "item_id:token\twikidata_entities_ids:token_seq\twikidata_entities_scores:float_seq\n"
      "i1\tQ1 Q2\t0.5\n";
  const auto table = parse_atomic_text(text, AtomicFileKind::Item);
  CHECK_THROWS_AS(extract_items(table), ValueError);
}

TEST_CASE("missing scores default to 1 per entity") {
  const std::string text =
      "item_id:token\twikidata_entities_ids:token_seq\ni1\tQ1 Q2\n";
  const auto items = extract_items(parse_atomic_text(text, AtomicFileKind::Item));
  REQUIRE(items.size() == 1);
  CHECK(items[0].wikidata_entity_scores == FloatSeq{1.0, 1.0});
}

TEST_CASE("category preferences must sum to one") {
  const std::string text =
      "user_id:token\tcategory_preferences:float_seq\nu1\t0.5 0.4\n";
  const auto table = parse_atomic_text(text, AtomicFileKind::User);
  CHECK_THROWS_AS(extract_users(table), ValueError);
}

TEST_CASE("splits reproduce the reference span") {
  // Data spanning 2025-03-12 .. 2025-04-14 -> test Apr 12-14, valid Apr 9-11,
  // train Mar 12 - Apr 8.
  const TimezoneRule tz = TimezoneRule::europe_warsaw();
  std::vector<InterRow> rows;
  const int64_t first = days_from_civil(2025, 3, 12);
  const int64_t last = days_from_civil(2025, 4, 14);
  for (int64_t d = first; d <= last; ++d) {
    int y, m, dd;
    civil_from_days(d, y, m, dd);
    rows.push_back({"u0", "i0", 0, rrtest::noon_ts(y, m, dd, tz)});
  }
  const auto bundle = rrtest::make_bundle(rows, {"u0"}, {"i0"});
  const TemporalSplit split = make_temporal_splits(bundle, tz);

  CHECK(split.test.first == days_from_civil(2025, 4, 12));
  CHECK(split.test.last == days_from_civil(2025, 4, 14));
  CHECK(split.valid.first == days_from_civil(2025, 4, 9));
  CHECK(split.valid.last == days_from_civil(2025, 4, 11));
  CHECK(split.train.first == days_from_civil(2025, 3, 12));
  CHECK(split.train.last == days_from_civil(2025, 4, 8));
  CHECK(split.valid.span() == 3);
  CHECK(split.test.span() == 3);
}

TEST_CASE("exactly seven days leaves one training day") {
  const TimezoneRule tz = TimezoneRule::utc();
  std::vector<InterRow> rows;
  for (int d = 1; d <= 7; ++d) rows.push_back({"u0", "i0", 0, rrtest::noon_ts(2025, 6, d, tz)});
  const TemporalSplit split =
      make_temporal_splits(rrtest::make_bundle(rows, {"u0"}, {"i0"}), tz);
  CHECK(split.train.span() == 1);
  CHECK(split.valid.span() == 3);
  CHECK(split.test.span() == 3);
}

TEST_CASE("a five-day span is insufficient") {
  const TimezoneRule tz = TimezoneRule::utc();
  std::vector<InterRow> rows;
  for (int d = 1; d <= 5; ++d) rows.push_back({"u0", "i0", 0, rrtest::noon_ts(2025, 6, d, tz)});
  CHECK_THROWS_AS(make_temporal_splits(rrtest::make_bundle(rows, {"u0"}, {"i0"}), tz),
                  InsufficientDataError);
}

TEST_CASE("every interaction falls in exactly one split") {
  const TimezoneRule tz = TimezoneRule::europe_warsaw();
  Rng rng(77);
  std::vector<InterRow> rows;
  const int64_t base = days_from_civil(2025, 3, 20) * 86400;
  for (int i = 0; i < 500; ++i) {
    rows.push_back({"u0", "i0", 0,
                    base + static_cast<int64_t>(rng.bounded(20ull * 86400))});
  }
  const auto bundle = rrtest::make_bundle(rows, {"u0"}, {"i0"});
  const TemporalSplit split = make_temporal_splits(bundle, tz);

  size_t in_train = 0, in_valid = 0, in_test = 0;
  for (const auto& rec : bundle.interactions) {
    const int64_t day = tz.local_day(rec.event_timestamp_unix);
    const int s = split.split_of_timestamp(rec.event_timestamp_unix);
    const bool claims_train = split.train.contains(day);
    const bool claims_valid = split.valid.contains(day);
    const bool claims_test = split.test.contains(day);
    CHECK(int(claims_train) + int(claims_valid) + int(claims_test) == 1);
    CHECK(s == (claims_train ? 0 : claims_valid ? 1 : 2));
    if (s == 0) ++in_train;
    if (s == 1) ++in_valid;
    if (s == 2) ++in_test;
  }
  CHECK(in_train + in_valid + in_test == bundle.interactions.size());
}

TEST_CASE("timezone rules shift day boundaries") {
  // 2025-06-15 22:30 UTC is already June 16 in Warsaw (CEST, +2).
  const int64_t ts = days_from_civil(2025, 6, 15) * 86400 + 22 * 3600 + 1800;
  CHECK(TimezoneRule::utc().local_day(ts) == days_from_civil(2025, 6, 15));
  CHECK(TimezoneRule::europe_warsaw().local_day(ts) == days_from_civil(2025, 6, 16));
  CHECK(TimezoneRule::parse("UTC+2").local_day(ts) == days_from_civil(2025, 6, 16));
}

TEST_CASE("Warsaw offset follows the EU summer-time rule") {
  const TimezoneRule tz = TimezoneRule::europe_warsaw();
  // The 2025 spring transition is Sunday, March 30 at 01:00 UTC.
  const int64_t mar30 = days_from_civil(2025, 3, 30) * 86400;
  CHECK(tz.offset_seconds_at(mar30 + 1800) == 3600);       // 00:30 UTC, still CET
  CHECK(tz.offset_seconds_at(mar30 + 2 * 3600) == 7200);   // 02:00 UTC, CEST
  // The autumn transition is Sunday, October 26 at 01:00 UTC.
  const int64_t oct26 = days_from_civil(2025, 10, 26) * 86400;
  CHECK(tz.offset_seconds_at(oct26 + 1800) == 7200);
  CHECK(tz.offset_seconds_at(oct26 + 2 * 3600) == 3600);
  // January is plain CET.
  CHECK(tz.offset_seconds_at(days_from_civil(2025, 1, 10) * 86400) == 3600);
}

TEST_CASE("timezone parsing accepts fixed offsets and rejects junk") {
  CHECK(TimezoneRule::parse("UTC+05:30").offset_seconds_at(0) == 19800);
  CHECK(TimezoneRule::parse("UTC-3").offset_seconds_at(0) == -10800);
  CHECK(TimezoneRule::parse("UTC").offset_seconds_at(0) == 0);
  CHECK_THROWS_AS(TimezoneRule::parse("Mars/Olympus"), ConfigError);
  CHECK_THROWS_AS(TimezoneRule::parse("UTC+99"), ConfigError);
}

TEST_CASE("date formatting round-trips") {
  CHECK(format_day(days_from_civil(2025, 4, 14)) == "2025-04-14");
  CHECK(parse_day("2025-04-14") == days_from_civil(2025, 4, 14));
  CHECK_THROWS_AS(parse_day("14-04-2025"), ConfigError);
}
