#include "ripplerec/kg.hpp"

#include <algorithm>
#include <set>

#include "ripplerec/binio.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

namespace {
constexpr const char* kItemPrefix = "item:";
}

std::string item_entity_name(const std::string& item_id) { return kItemPrefix + item_id; }

std::optional<std::string> item_id_from_entity(const std::string& entity_name) {
  if (entity_name.rfind(kItemPrefix, 0) == 0) return entity_name.substr(5);
  return std::nullopt;
}

int32_t Vocab::add(const std::string& name) {
  const auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  const int32_t id = static_cast<int32_t>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::optional<int32_t> Vocab::lookup(const std::string& name) const {
  const auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

KnowledgeGraph KnowledgeGraph::build(Vocab entities, Vocab relations,
                                     std::vector<Triple> triples) {
  std::sort(triples.begin(), triples.end());
  triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

  KnowledgeGraph kg;
  kg.entities_ = std::move(entities);
  kg.relations_ = std::move(relations);
  kg.triples_ = std::move(triples);

  kg.head_offsets_.assign(kg.entities_.size() + 1, 0);
  for (const auto& t : kg.triples_) ++kg.head_offsets_[static_cast<size_t>(t.head) + 1];
  for (size_t i = 1; i < kg.head_offsets_.size(); ++i) {
    kg.head_offsets_[i] += kg.head_offsets_[i - 1];
  }
  return kg;
}

std::span<const Triple> KnowledgeGraph::triples_with_head(int32_t head) const {
  if (head < 0 || static_cast<size_t>(head) >= entities_.size()) return {};
  const uint32_t begin = head_offsets_[static_cast<size_t>(head)];
  const uint32_t end = head_offsets_[static_cast<size_t>(head) + 1];
  return std::span<const Triple>(triples_.data() + begin, end - begin);
}

KnowledgeGraph extract_knowledge_graph(std::span<const ItemRecord> items,
                                       const ExtractionConfig& config,
                                       ExtractionReport* report) {
  std::vector<std::string> labels = config.category_labels;
  if (labels.empty()) {
    for (int c = 0; c < 10; ++c) labels.push_back("cat_" + std::to_string(c));
  }

  // Vocabulary order is deterministic: items sorted by id first, then
  // attribute entities sorted by name.
  std::vector<const ItemRecord*> sorted_items;
  sorted_items.reserve(items.size());
  for (const auto& item : items) sorted_items.push_back(&item);
  std::sort(sorted_items.begin(), sorted_items.end(),
            [](const ItemRecord* a, const ItemRecord* b) { return a->item_id < b->item_id; });

  Vocab entities;
  for (const ItemRecord* item : sorted_items) entities.add(item_entity_name(item->item_id));

  struct PendingTriple {
    std::string head, relation, tail;
  };
  std::vector<PendingTriple> pending;
  std::set<std::string> attribute_entities;
  size_t isolated = 0;

  for (const ItemRecord* item : sorted_items) {
    const std::string head = item_entity_name(item->item_id);
    const size_t before = pending.size();

    for (size_t i = 0; i < item->wikidata_entity_ids.size(); ++i) {
      if (item->wikidata_entity_scores[i] < config.entity_score_threshold) continue;
      pending.push_back({head, kRelMentionsEntity, "wd:" + item->wikidata_entity_ids[i]});
    }
    for (const auto& topic : item->wikidata_topics) {
      pending.push_back({head, kRelHasTopic, "topic:" + topic});
    }
    if (!item->author.empty()) {
      pending.push_back({head, kRelAuthoredBy, "author:" + item->author});
    }
    if (!item->category_scores.empty()) {
      const auto best = std::max_element(item->category_scores.begin(),
                                         item->category_scores.end());
      if (*best >= config.category_threshold) {
        const size_t idx = static_cast<size_t>(best - item->category_scores.begin());
        const std::string label =
            idx < labels.size() ? labels[idx] : "cat_" + std::to_string(idx);
        pending.push_back({head, kRelHasCategory, "cat:" + label});
      }
    }

    if (pending.size() == before) ++isolated;
    for (size_t i = before; i < pending.size(); ++i) attribute_entities.insert(pending[i].tail);
  }

  for (const auto& name : attribute_entities) entities.add(name);

  Vocab relations;
  for (const char* rel : {kRelMentionsEntity, kRelHasTopic, kRelAuthoredBy, kRelHasCategory}) {
    relations.add(rel);
    relations.add(std::string(rel) + "_inv");
  }

  std::vector<Triple> triples;
  triples.reserve(pending.size() * 2);
  for (const auto& p : pending) {
    const int32_t h = *entities.lookup(p.head);
    const int32_t t = *entities.lookup(p.tail);
    const int32_t r = *relations.lookup(p.relation);
    const int32_t r_inv = *relations.lookup(p.relation + "_inv");
    triples.push_back({h, r, t});
    triples.push_back({t, r_inv, h});
  }

  if (report != nullptr) {
    report->items = items.size();
    report->isolated_items = isolated;
    report->forward_triples = pending.size();
  }
  return KnowledgeGraph::build(std::move(entities), std::move(relations), std::move(triples));
}

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  std::string vocab;
  for (size_t i = 0; i < kg.entities().size(); ++i) {
    vocab += kg.entities().name(static_cast<int32_t>(i));
    vocab += '\t';
    vocab += std::to_string(i);
    vocab += '\n';
  }
  write_file(dir / "entities.tsv", vocab);

  vocab.clear();
  for (size_t i = 0; i < kg.relations().size(); ++i) {
    vocab += kg.relations().name(static_cast<int32_t>(i));
    vocab += '\t';
    vocab += std::to_string(i);
    vocab += '\n';
  }
  write_file(dir / "relations.tsv", vocab);

  std::string body;
  for (const auto& t : kg.triples()) {
    body += kg.entities().name(t.head);
    body += '\t';
    body += kg.relations().name(t.relation);
    body += '\t';
    body += kg.entities().name(t.tail);
    body += '\n';
  }
  write_file(dir / "kg.tsv", body);
}

namespace {

Vocab load_vocab_tsv(const std::filesystem::path& path) {
  Vocab vocab;
  const std::string data = read_file(path);
  size_t line_no = 0;
  for (const auto& line : split(data, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 2) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                        ": expected name\\tid");
    }
    const int32_t id = vocab.add(parts[0]);
    if (std::to_string(id) != parts[1]) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                        ": ids must be dense and in order");
    }
  }
  return vocab;
}

}  // namespace

KnowledgeGraph load_kg(const std::filesystem::path& dir) {
  Vocab entities = load_vocab_tsv(dir / "entities.tsv");
  Vocab relations = load_vocab_tsv(dir / "relations.tsv");

  std::vector<Triple> triples;
  const std::string data = read_file(dir / "kg.tsv");
  size_t line_no = 0;
  for (const auto& line : split(data, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 3) {
      throw SchemaError(dir.string() + "/kg.tsv:" + std::to_string(line_no) +
                        ": expected head\\trelation\\ttail");
    }
    const auto h = entities.lookup(parts[0]);
    const auto r = relations.lookup(parts[1]);
    const auto t = entities.lookup(parts[2]);
    if (!h || !r || !t) {
      throw SchemaError(dir.string() + "/kg.tsv:" + std::to_string(line_no) +
                        ": unresolved entity or relation");
    }
    triples.push_back({*h, *r, *t});
  }
  return KnowledgeGraph::build(std::move(entities), std::move(relations), std::move(triples));
}

}  // namespace ripplerec
