#include <doctest.h>

#include <functional>

#include "helpers.hpp"
#include "ripplerec/atomic_format.hpp"
#include "ripplerec/text.hpp"

using namespace ripplerec;

namespace {

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("header and rows parse with typed coercion") {
  const auto table = parse_atomic_text(
      "user_id:token\titem_id:token\tis_click:float\nu1\ti9\t1\n", AtomicFileKind::Inter);
  REQUIRE(table.fields.size() == 3);
  CHECK(table.fields[0].name == "user_id");
  CHECK(table.fields[0].kind == FieldKind::Token);
  CHECK(table.fields[2].kind == FieldKind::Float);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0][0].token() == "u1");
  CHECK(table.rows[0][2].number() == 1.0);

  const auto records = extract_interactions(table);
  REQUIRE(records.size() == 1);
  CHECK(records[0].user_id == "u1");
  CHECK(records[0].item_id == "i9");
  CHECK(records[0].is_click == 1);
}

TEST_CASE("row arity mismatch reports the line number") {
  const std::string text = "user_id:token\titem_id:token\tis_click:float\nu1\ti9\n";
  CHECK_THROWS_AS(parse_atomic_text(text, AtomicFileKind::Inter), RowError);
  const std::string msg =
      error_text([&] { parse_atomic_text(text, AtomicFileKind::Inter); });
  CHECK(msg.find(":2:") != std::string::npos);
}

TEST_CASE("unknown kind names the offending column") {
  const std::string text = "user_id:token\tfoo:blob\nu1\tx\n";
  CHECK_THROWS_AS(parse_atomic_text(text, AtomicFileKind::User), SchemaError);
  const std::string msg =
      error_text([&] { parse_atomic_text(text, AtomicFileKind::User); });
  CHECK(msg.find("foo") != std::string::npos);
  CHECK(msg.find("blob") != std::string::npos);
}

TEST_CASE("non-numeric float cell is a value error") {
  const std::string text = "user_id:token\titem_id:token\tis_click:float\nu1\ti9\tyes\n";
  CHECK_THROWS_AS(parse_atomic_text(text, AtomicFileKind::Inter), ValueError);
  const std::string msg =
      error_text([&] { parse_atomic_text(text, AtomicFileKind::Inter); });
  CHECK(msg.find("is_click") != std::string::npos);
}

TEST_CASE("empty cell means absent") {
  const auto table = parse_atomic_text(
      "user_id:token\tnote:token\tscore:float\nu1\t\t\n", AtomicFileKind::User);
  CHECK(table.rows[0][0].present());
  CHECK_FALSE(table.rows[0][1].present());
  CHECK_FALSE(table.rows[0][2].present());
}

TEST_CASE("sequence cells split on single spaces") {
  const auto table = parse_atomic_text(
      "item_id:token\ttags:token_seq\tvals:float_seq\ni1\ta b c\t1 2.5 -3\n",
      AtomicFileKind::Item);
  CHECK(table.rows[0][1].tokens() == TokenSeq{"a", "b", "c"});
  CHECK(table.rows[0][2].numbers() == FloatSeq{1.0, 2.5, -3.0});
}

TEST_CASE("missing required column is a schema error") {
  CHECK_THROWS_AS(parse_atomic_text("user_id:token\titem_id:token\nu\ti\n",
                                    AtomicFileKind::Inter),
                  SchemaError);
  CHECK_THROWS_AS(parse_atomic_text("name:token\nx\n", AtomicFileKind::Item), SchemaError);
}

TEST_CASE("duplicate column names are rejected") {
  CHECK_THROWS_AS(parse_atomic_text("user_id:token\tuser_id:token\nu\tv\n",
                                    AtomicFileKind::User),
                  SchemaError);
}

TEST_CASE("float formatting is shortest-round-trip and idempotent") {
  const std::string original =
      "item_id:token\tv:float\tw:float_seq\n"
      "i1\t1.0\t0.10 2.50\n"
      "i2\t1e3\t-0.0001 37\n";
  const auto first = parse_atomic_text(original, AtomicFileKind::Item);
  const std::string written = write_atomic_text(first);
  const auto second = parse_atomic_text(written, AtomicFileKind::Item);
  CHECK(first.rows == second.rows);
  CHECK(write_atomic_text(second) == written);
  CHECK(second.rows[0][1].number() == 1.0);
  CHECK(second.rows[1][1].number() == 1000.0);
}

TEST_CASE("round-trip property on random tables") {
  Rng rng(20240612);
  const auto random_token = [&rng]() {
    std::string s;
    const size_t n = 1 + rng.bounded(8);
    for (size_t i = 0; i < n; ++i) s.push_back(char('a' + rng.bounded(26)));
    return s;
  };

  for (int trial = 0; trial < 40; ++trial) {
    AtomicTable table;
    table.fields.push_back({"item_id", FieldKind::Token});
    const size_t extra = 1 + rng.bounded(4);
    for (size_t c = 0; c < extra; ++c) {
      table.fields.push_back(
          {"f" + std::to_string(c), static_cast<FieldKind>(rng.bounded(4))});
    }
    const size_t n_rows = rng.bounded(12);
    for (size_t r = 0; r < n_rows; ++r) {
      std::vector<AtomicValue> row;
      row.emplace_back(random_token());
      for (size_t c = 0; c < extra; ++c) {
        if (rng.uniform() < 0.15) {
          row.emplace_back();  // absent
          continue;
        }
        switch (table.fields[c + 1].kind) {
          case FieldKind::Token:
            row.emplace_back(random_token());
            break;
          case FieldKind::TokenSeq: {
            TokenSeq seq;
            const size_t n = 1 + rng.bounded(4);
            for (size_t i = 0; i < n; ++i) seq.push_back(random_token());
            row.emplace_back(std::move(seq));
            break;
          }
          case FieldKind::Float:
            row.emplace_back(rng.uniform(-1e6, 1e6));
            break;
          case FieldKind::FloatSeq: {
            FloatSeq seq;
            const size_t n = 1 + rng.bounded(4);
            for (size_t i = 0; i < n; ++i) seq.push_back(rng.gaussian());
            row.emplace_back(std::move(seq));
            break;
          }
        }
      }
      table.rows.push_back(std::move(row));
    }

    const std::string once = write_atomic_text(table);
    const auto parsed = parse_atomic_text(once, AtomicFileKind::Item);
    CHECK(parsed.fields == table.fields);
    CHECK(parsed.rows == table.rows);          // field-for-field
    CHECK(write_atomic_text(parsed) == once);  // byte-stable
  }
}

TEST_CASE("file round trip") {
  rrtest::TempDir tmp;
  AtomicTable table;
  table.fields = {{"item_id", FieldKind::Token}, {"v", FieldKind::Float}};
  table.rows.push_back({AtomicValue(std::string("i1")), AtomicValue(0.25)});
  write_atomic_file(table, tmp / "x.item");
  const auto back = parse_atomic_file(tmp / "x.item", AtomicFileKind::Item);
  CHECK(back.rows == table.rows);
}
