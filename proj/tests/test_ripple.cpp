#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "helpers.hpp"
#include "ripplerec/ripple.hpp"
#include "ripplerec/synth.hpp"

using namespace ripplerec;
using rrtest::KgBuilder;

namespace {

// Independent BFS oracle: hop-1 heads must come from the history set, hop-k
// heads from the sampled hop-(k-1) tails, and every sampled triple must
// exist in the graph (checked against the raw triple list, not the index).
void check_hop_soundness(const RippleProfile& profile,
                         const std::vector<std::string>& history,
                         const KnowledgeGraph& kg) {
  std::set<int32_t> frontier;
  for (const auto& item : history) {
    if (const auto id = kg.entities().lookup(item_entity_name(item))) frontier.insert(*id);
  }
  const std::set<Triple> all(kg.triples().begin(), kg.triples().end());

  bool seen_empty = false;
  for (const auto& hop : profile.hops) {
    if (hop.empty()) {
      seen_empty = true;
      continue;
    }
    CHECK_FALSE(seen_empty);  // truncation empties every later hop
    std::set<int32_t> tails;
    for (const auto& t : hop) {
      CHECK(all.contains(t));
      CHECK(frontier.contains(t.head));
      tails.insert(t.tail);
    }
    frontier = std::move(tails);
  }
}

KnowledgeGraph three_triple_fixture() {
  KgBuilder b;
  b.triple("A", "t", "T1");
  b.triple("T1", "t_inv", "A");
  b.triple("B", "t", "T1");
  b.triple("T1", "t_inv", "B");
  b.triple("B", "a", "Au1");
  b.triple("Au1", "a_inv", "B");
  return b.build();
}

}  // namespace

TEST_CASE("hand-checkable BFS on the three-entity fixture") {
  KgBuilder b;
  b.triple("item:A", "t", "T1");
  b.triple("T1", "t_inv", "item:A");
  b.triple("item:B", "t", "T1");
  b.triple("T1", "t_inv", "item:B");
  b.triple("item:B", "a", "Au1");
  b.triple("Au1", "a_inv", "item:B");
  const KnowledgeGraph kg = b.build();

  RippleConfig config;
  config.n_hop = 3;
  config.n_memory = 1;
  const std::vector<std::string> history = {"A"};
  const RippleProfile profile = build_ripple_profile(history, kg, config, 7);

  REQUIRE(profile.hops.size() == 3);
  REQUIRE(profile.hops[0].size() == 1);
  // Hop 1: the only triple headed at A.
  CHECK(profile.hops[0][0].head == *kg.entities().lookup("item:A"));
  CHECK(profile.hops[0][0].tail == *kg.entities().lookup("T1"));

  // Hop 2: one of the two triples headed at T1.
  REQUIRE(profile.hops[1].size() == 1);
  CHECK(profile.hops[1][0].head == *kg.entities().lookup("T1"));

  // Hop 3: headed at hop 2's sampled tail.
  REQUIRE(profile.hops[2].size() == 1);
  CHECK(profile.hops[2][0].head == profile.hops[1][0].tail);
  CHECK(profile.truncation_depth == 3);
  check_hop_soundness(profile, history, kg);
}

TEST_CASE("empty history yields an empty flagged profile") {
  const KnowledgeGraph kg = three_triple_fixture();
  RippleConfig config;
  config.n_hop = 2;
  config.n_memory = 4;
  const RippleProfile profile = build_ripple_profile({}, kg, config, 1);
  CHECK(profile.empty());
  CHECK(profile.truncation_depth == 0);
  for (const auto& hop : profile.hops) CHECK(hop.empty());
}

TEST_CASE("unknown history items are skipped and counted") {
  KgBuilder b;
  b.triple("item:A", "t", "T1");
  const KnowledgeGraph kg = b.build();
  RippleConfig config;
  config.n_hop = 1;
  config.n_memory = 2;
  const std::vector<std::string> history = {"ghost1", "A", "ghost2"};
  const RippleProfile profile = build_ripple_profile(history, kg, config, 1);
  CHECK(profile.skipped_history == 2);
  CHECK(profile.truncation_depth == 1);
}

TEST_CASE("sampling with replacement fills n_memory from two candidates") {
  KgBuilder b;
  b.triple("item:A", "t", "T1");
  b.triple("item:A", "t", "T2");
  const KnowledgeGraph kg = b.build();
  RippleConfig config;
  config.n_hop = 1;
  config.n_memory = 16;
  const std::vector<std::string> history = {"A"};
  const RippleProfile profile = build_ripple_profile(history, kg, config, 5);
  REQUIRE(profile.hops[0].size() == 16);
  const int32_t a = *kg.entities().lookup("item:A");
  std::set<int32_t> tails;
  for (const auto& t : profile.hops[0]) {
    CHECK(t.head == a);
    tails.insert(t.tail);
  }
  CHECK(tails.size() <= 2);
}

TEST_CASE("dead ends truncate the profile instead of erroring") {
  KgBuilder b;
  b.triple("item:A", "t", "T1");  // T1 has no outgoing triples
  const KnowledgeGraph kg = b.build();
  RippleConfig config;
  config.n_hop = 4;
  config.n_memory = 2;
  const std::vector<std::string> history = {"A"};
  const RippleProfile profile = build_ripple_profile(history, kg, config, 3);
  CHECK(profile.truncation_depth == 1);
  CHECK(profile.hops[0].size() == 2);
  CHECK(profile.hops[1].empty());
  CHECK(profile.hops[2].empty());
  CHECK(profile.hops[3].empty());
}

TEST_CASE("profiles are deterministic in the seed") {
  RippleConfig config;
  config.n_hop = 3;
  config.n_memory = 8;
  const std::vector<std::string> history = {"A", "B"};
  KgBuilder b;
  b.triple("item:A", "t", "T1");
  b.triple("T1", "t_inv", "item:A");
  b.triple("item:B", "t", "T1");
  b.triple("T1", "t_inv", "item:B");
  const KnowledgeGraph kg2 = b.build();
  const RippleProfile p1 = build_ripple_profile(history, kg2, config, 42);
  const RippleProfile p2 = build_ripple_profile(history, kg2, config, 42);
  CHECK(p1 == p2);
}

TEST_CASE("hop soundness on random graphs") {
  Rng rng(555);
  for (int trial = 0; trial < 25; ++trial) {
    KgBuilder b;
    const int n_items = 3 + static_cast<int>(rng.bounded(5));
    const int n_attrs = 2 + static_cast<int>(rng.bounded(4));
    for (int i = 0; i < n_items; ++i) {
      for (int a = 0; a < n_attrs; ++a) {
        if (rng.uniform() < 0.4) {
          const std::string item = "item:i" + std::to_string(i);
          const std::string attr = "attr" + std::to_string(a);
          b.triple(item, "r", attr);
          b.triple(attr, "r_inv", item);
        }
      }
    }
    if (b.triples.empty()) continue;
    const KnowledgeGraph kg = b.build();

    RippleConfig config;
    config.n_hop = 1 + static_cast<int>(rng.bounded(4));
    config.n_memory = 1 + static_cast<int>(rng.bounded(6));
    std::vector<std::string> history;
    for (int i = 0; i < n_items; ++i) {
      if (rng.uniform() < 0.5) history.push_back("i" + std::to_string(i));
    }
    const RippleProfile profile =
        build_ripple_profile(history, kg, config, rng.next_u64());
    check_hop_soundness(profile, history, kg);
    for (const auto& hop : profile.hops) {
      CHECK((hop.empty() || hop.size() == static_cast<size_t>(config.n_memory)));
    }
  }
}

TEST_CASE("store construction is order independent and counts popularity") {
  SynthConfig synth;
  synth.n_users = 25;
  synth.n_items = 20;
  synth.n_days = 7;
  synth.n_topics = 4;
  synth.seed = 18;
  const SynthResult data = generate_synthetic_dataset(synth);
  const auto items = extract_items(data.item);
  const KnowledgeGraph kg = extract_knowledge_graph(items, {});
  auto rows = extract_interactions(data.inter);

  RippleConfig config;
  config.n_hop = 2;
  config.n_memory = 4;
  config.seed = 99;
  const ProfileStore store1 = build_all_profiles(rows, kg, config);

  std::reverse(rows.begin(), rows.end());
  const ProfileStore store2 = build_all_profiles(rows, kg, config);
  CHECK(store1 == store2);

  // Popularity equals per-item click counts.
  std::map<std::string, int64_t> expected;
  for (const auto& rec : rows) {
    if (rec.is_click == 1) ++expected[rec.item_id];
  }
  for (const auto& [item, count] : expected) {
    CHECK(store1.popularity(item) == count);
  }
  CHECK(store1.popularity("no-such-item") == 0);

  // Exactly the users with at least one click have profiles.
  std::set<std::string> clickers;
  for (const auto& rec : rows) {
    if (rec.is_click == 1) clickers.insert(rec.user_id);
  }
  CHECK(store1.profiles.size() == clickers.size());
  CHECK(std::is_sorted(store1.profiles.begin(), store1.profiles.end(),
                       [](const RippleProfile& a, const RippleProfile& b) {
                         return a.user_id < b.user_id;
                       }));

  // Every non-empty hop set is exactly n_memory.
  for (const auto& profile : store1.profiles) {
    for (const auto& hop : profile.hops) {
      CHECK((hop.empty() || hop.size() == 4));
    }
  }
}

TEST_CASE("clicks on unknown items only give an empty profile") {
  KgBuilder b;
  b.triple("item:known", "t", "T1");
  const KnowledgeGraph kg = b.build();
  std::vector<InteractionRecord> rows;
  InteractionRecord rec;
  rec.user_id = "u1";
  rec.item_id = "unknown-item";
  rec.is_click = 1;
  rec.event_timestamp_unix = 1000;
  rows.push_back(rec);
  RippleConfig config;
  config.n_hop = 2;
  config.n_memory = 2;
  const ProfileStore store = build_all_profiles(rows, kg, config);
  REQUIRE(store.profiles.size() == 1);
  CHECK(store.profiles[0].empty());
  CHECK(store.profiles[0].skipped_history == 1);
}

TEST_CASE("max_history keeps only the most recent distinct clicks") {
  KgBuilder b;
  b.triple("item:old", "t", "Told");
  b.triple("item:new", "t", "Tnew");
  const KnowledgeGraph kg = b.build();

  std::vector<InteractionRecord> rows;
  InteractionRecord rec;
  rec.user_id = "u1";
  rec.is_click = 1;
  rec.item_id = "old";
  rec.event_timestamp_unix = 100;
  rows.push_back(rec);
  rec.item_id = "new";
  rec.event_timestamp_unix = 200;
  rows.push_back(rec);

  RippleConfig config;
  config.n_hop = 1;
  config.n_memory = 4;
  config.max_history = 1;
  const ProfileStore store = build_all_profiles(rows, kg, config);
  REQUIRE(store.profiles.size() == 1);
  const int32_t tnew = *kg.entities().lookup("Tnew");
  for (const auto& t : store.profiles[0].hops[0]) CHECK(t.tail == tnew);
}

TEST_CASE("profile store serialization round-trips") {
  SynthConfig synth;
  synth.n_users = 10;
  synth.n_items = 12;
  synth.n_days = 7;
  synth.n_topics = 3;
  synth.seed = 4;
  const SynthResult data = generate_synthetic_dataset(synth);
  const KnowledgeGraph kg = extract_knowledge_graph(extract_items(data.item), {});
  RippleConfig config;
  config.n_hop = 3;
  config.n_memory = 5;
  const ProfileStore store =
      build_all_profiles(extract_interactions(data.inter), kg, config);

  const std::string bytes = serialize_profiles(store);
  const ProfileStore back = deserialize_profiles(bytes, "test");
  CHECK(store == back);
  CHECK(serialize_profiles(back) == bytes);

  // Corrupted stream is refused.
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(deserialize_profiles(bad, "test"), CorruptionError);
}
