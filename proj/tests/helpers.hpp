#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include "ripplerec/atomic_format.hpp"
#include "ripplerec/dataset.hpp"
#include "ripplerec/kg.hpp"
#include "ripplerec/rng.hpp"

namespace rrtest {

// Self-cleaning unique temp directory.
class TempDir {
public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ripplerec-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

// Seconds-from-epoch for noon local time on the given civil day, good for
// any zone whose offset is within a few hours of UTC.
inline int64_t noon_ts(int year, int month, int day,
                       const ripplerec::TimezoneRule& tz) {
  const int64_t d = ripplerec::days_from_civil(year, month, day);
  const int64_t guess = d * 86400 + 12 * 3600;
  return guess - tz.offset_seconds_at(guess);
}

// Minimal .inter table: rows of (user, item, click, ts).
struct InterRow {
  std::string user;
  std::string item;
  int click;
  int64_t ts;
};

inline std::string make_inter_text(const std::vector<InterRow>& rows) {
  std::string text =
      "user_id:token\titem_id:token\tis_click:float\tevent_timestamp_unix:float\n";
  for (const auto& r : rows) {
    text += r.user + "\t" + r.item + "\t" + std::to_string(r.click) + "\t" +
            std::to_string(r.ts) + "\n";
  }
  return text;
}

inline std::string make_user_text(const std::vector<std::string>& users) {
  std::string text = "user_id:token\n";
  for (const auto& u : users) text += u + "\n";
  return text;
}

inline std::string make_item_text(const std::vector<std::string>& items) {
  std::string text = "item_id:token\n";
  for (const auto& i : items) text += i + "\n";
  return text;
}

inline ripplerec::DatasetBundle make_bundle(const std::vector<InterRow>& rows,
                                            const std::vector<std::string>& users,
                                            const std::vector<std::string>& items) {
  using namespace ripplerec;
  return bundle_from_tables(
      parse_atomic_text(make_inter_text(rows), AtomicFileKind::Inter),
      parse_atomic_text(make_user_text(users), AtomicFileKind::User),
      parse_atomic_text(make_item_text(items), AtomicFileKind::Item));
}

// Hand-buildable knowledge graph for ripple tests.
struct KgBuilder {
  ripplerec::Vocab entities;
  ripplerec::Vocab relations;
  std::vector<ripplerec::Triple> triples;

  void triple(const std::string& h, const std::string& r, const std::string& t) {
    triples.push_back({entities.add(h), relations.add(r), entities.add(t)});
  }
  ripplerec::KnowledgeGraph build() {
    return ripplerec::KnowledgeGraph::build(entities, relations, triples);
  }
};

}  // namespace rrtest
