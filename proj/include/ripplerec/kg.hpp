#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ripplerec/dataset.hpp"

namespace ripplerec {

// Entity name prefixes keep item ids, wikidata ids, topics, authors and
// categories in one namespace without collisions.
std::string item_entity_name(const std::string& item_id);
std::optional<std::string> item_id_from_entity(const std::string& entity_name);

class Vocab {
public:
  int32_t add(const std::string& name);              // idempotent
  std::optional<int32_t> lookup(const std::string& name) const;
  const std::string& name(int32_t id) const { return names_.at(static_cast<size_t>(id)); }
  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int32_t> ids_;
};

struct Triple {
  int32_t head;
  int32_t relation;
  int32_t tail;

  auto operator<=>(const Triple&) const = default;
};

// Forward relations; each has an inverse registered as "<name>_inv".
inline constexpr const char* kRelMentionsEntity = "mentions_entity";
inline constexpr const char* kRelHasTopic = "has_topic";
inline constexpr const char* kRelAuthoredBy = "authored_by";
inline constexpr const char* kRelHasCategory = "has_category";

class KnowledgeGraph {
public:
  // Takes ownership, deduplicates and sorts triples, builds the head index.
  static KnowledgeGraph build(Vocab entities, Vocab relations, std::vector<Triple> triples);

  const Vocab& entities() const { return entities_; }
  const Vocab& relations() const { return relations_; }
  std::span<const Triple> triples() const { return triples_; }
  std::span<const Triple> triples_with_head(int32_t head) const;

  bool operator==(const KnowledgeGraph& other) const {
    return entities_.names() == other.entities_.names() &&
           relations_.names() == other.relations_.names() && triples_ == other.triples_;
  }

private:
  Vocab entities_;
  Vocab relations_;
  std::vector<Triple> triples_;         // sorted by (head, relation, tail)
  std::vector<uint32_t> head_offsets_;  // CSR over heads
};

struct ExtractionConfig {
  double entity_score_threshold = 0.0;  // include wikidata entities scoring >= this
  double category_threshold = 0.5;      // has_category only when max score >= this
  std::vector<std::string> category_labels;  // defaults to cat_0..cat_9
};

struct ExtractionReport {
  size_t items = 0;
  size_t isolated_items = 0;   // items that produced no triples
  size_t forward_triples = 0;  // before inverse closure
};

// Mapping rules: (item, mentions_entity, Q*) per wikidata entity at or above
// the score threshold; (item, has_topic, T*) per topic; (item, authored_by,
// author) when present; (item, has_category, argmax category) when the max
// category score clears the threshold. Every forward triple gets an inverse.
// Every input item becomes an entity even when isolated.
KnowledgeGraph extract_knowledge_graph(std::span<const ItemRecord> items,
                                       const ExtractionConfig& config,
                                       ExtractionReport* report = nullptr);

// TSV export/import: kg.tsv (head\trelation\ttail), entities.tsv and
// relations.tsv (name\tid).
void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& dir);
KnowledgeGraph load_kg(const std::filesystem::path& dir);

}  // namespace ripplerec
