#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "ripplerec/kg.hpp"
#include "ripplerec/synth.hpp"

using namespace ripplerec;

namespace {

ItemRecord item_with_metadata() {
  ItemRecord item;
  item.item_id = "i1";
  item.wikidata_entity_ids = {"Q1", "Q2"};
  item.wikidata_entity_scores = {0.9, 0.8};
  item.author = "a1";
  item.category_scores = {0.1, 0.9, 0.2};  // argmax = index 1
  return item;
}

std::set<std::string> triple_strings(const KnowledgeGraph& kg) {
  std::set<std::string> out;
  for (const auto& t : kg.triples()) {
    out.insert(kg.entities().name(t.head) + "|" + kg.relations().name(t.relation) + "|" +
               kg.entities().name(t.tail));
  }
  return out;
}

}  // namespace

TEST_CASE("mapping rules produce four forward and four inverse triples") {
  ExtractionConfig config;
  config.category_labels = {"news", "sport", "biz"};
  ExtractionReport report;
  const std::vector<ItemRecord> items = {item_with_metadata()};
  const KnowledgeGraph kg = extract_knowledge_graph(items, config, &report);

  // Hand enumeration of the mapping rules on this fixture: two entity
  // mentions, one author, one category, each with an inverse.
  const std::set<std::string> expected = {
      "item:i1|mentions_entity|wd:Q1",  "wd:Q1|mentions_entity_inv|item:i1",
      "item:i1|mentions_entity|wd:Q2",  "wd:Q2|mentions_entity_inv|item:i1",
      "item:i1|authored_by|author:a1",  "author:a1|authored_by_inv|item:i1",
      "item:i1|has_category|cat:sport", "cat:sport|has_category_inv|item:i1",
  };
  CHECK(triple_strings(kg) == expected);
  CHECK(report.forward_triples == 4);
  CHECK(report.isolated_items == 0);
  CHECK(kg.entities().size() == 5);  // item + Q1 + Q2 + author + category
  CHECK(kg.relations().size() == 8);
}

TEST_CASE("items without metadata become isolated entities") {
  ItemRecord bare;
  bare.item_id = "lonely";
  ExtractionReport report;
  const std::vector<ItemRecord> items = {bare};
  const KnowledgeGraph kg = extract_knowledge_graph(items, {}, &report);
  CHECK(report.isolated_items == 1);
  CHECK(kg.triples().empty());
  REQUIRE(kg.entities().lookup("item:lonely").has_value());
  CHECK(kg.triples_with_head(*kg.entities().lookup("item:lonely")).empty());
}

TEST_CASE("shared topics create two-hop paths between items") {
  ItemRecord a, b;
  a.item_id = "i1";
  a.wikidata_topics = {"T1"};
  a.wikidata_topic_scores = {1.0};
  b.item_id = "i2";
  b.wikidata_topics = {"T1"};
  b.wikidata_topic_scores = {1.0};
  const std::vector<ItemRecord> items = {a, b};
  const KnowledgeGraph kg = extract_knowledge_graph(items, {});

  const int32_t i1 = *kg.entities().lookup("item:i1");
  const int32_t topic = *kg.entities().lookup("topic:T1");
  const int32_t i2 = *kg.entities().lookup("item:i2");

  bool i1_to_topic = false;
  for (const auto& t : kg.triples_with_head(i1)) i1_to_topic |= t.tail == topic;
  bool topic_to_i2 = false;
  for (const auto& t : kg.triples_with_head(topic)) topic_to_i2 |= t.tail == i2;
  CHECK(i1_to_topic);
  CHECK(topic_to_i2);
}

TEST_CASE("score thresholds filter entities and categories") {
  ItemRecord item = item_with_metadata();
  ExtractionConfig config;
  config.entity_score_threshold = 0.85;  // keeps Q1 (0.9), drops Q2 (0.8)
  config.category_labels = {"news", "sport", "biz"};
  const std::vector<ItemRecord> items = {item};
  const auto triples = triple_strings(extract_knowledge_graph(items, config));
  CHECK(triples.contains("item:i1|mentions_entity|wd:Q1"));
  CHECK_FALSE(triples.contains("item:i1|mentions_entity|wd:Q2"));

  ItemRecord weak = item_with_metadata();
  weak.category_scores = {0.1, 0.4, 0.2};  // max below the 0.5 default
  const std::vector<ItemRecord> weak_items = {weak};
  const auto weak_triples = triple_strings(extract_knowledge_graph(weak_items, {}));
  for (const auto& t : weak_triples) CHECK(t.find("has_category") == std::string::npos);
}

TEST_CASE("inverse closure holds on generated data") {
  SynthConfig config;
  config.n_users = 10;
  config.n_items = 25;
  config.n_days = 7;
  config.n_topics = 4;
  config.seed = 9;
  const auto items = extract_items(generate_synthetic_dataset(config).item);
  const KnowledgeGraph kg = extract_knowledge_graph(items, {});
  REQUIRE(kg.triples().size() > 0);

  const auto inverse_name = [](const std::string& rel) {
    const std::string suffix = "_inv";
    if (rel.size() > suffix.size() &&
        rel.compare(rel.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return rel.substr(0, rel.size() - suffix.size());
    }
    return rel + suffix;
  };
  const auto triples = triple_strings(kg);
  for (const auto& t : kg.triples()) {
    const std::string inv = kg.entities().name(t.tail) + "|" +
                            inverse_name(kg.relations().name(t.relation)) + "|" +
                            kg.entities().name(t.head);
    CHECK(triples.contains(inv));
  }
}

TEST_CASE("extraction is deterministic and input-order independent") {
  SynthConfig config;
  config.n_users = 5;
  config.n_items = 20;
  config.n_days = 7;
  config.n_topics = 4;
  config.seed = 21;
  auto items = extract_items(generate_synthetic_dataset(config).item);
  const KnowledgeGraph kg1 = extract_knowledge_graph(items, {});

  std::reverse(items.begin(), items.end());
  const KnowledgeGraph kg2 = extract_knowledge_graph(items, {});
  CHECK(kg1 == kg2);

  // Sorted triple order.
  const auto triples = kg1.triples();
  CHECK(std::is_sorted(triples.begin(), triples.end()));
}

TEST_CASE("kg TSV export loads back identically") {
  rrtest::TempDir tmp;
  const std::vector<ItemRecord> items = {item_with_metadata()};
  const KnowledgeGraph kg = extract_knowledge_graph(items, {});
  save_kg(kg, tmp.path());
  const KnowledgeGraph loaded = load_kg(tmp.path());
  CHECK(kg == loaded);
}
