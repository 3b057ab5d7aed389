#include "ripplerec/ripple.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "ripplerec/binio.hpp"
#include "ripplerec/rng.hpp"

namespace ripplerec {

RippleProfile build_ripple_profile(std::span<const std::string> history,
                                   const KnowledgeGraph& kg, const RippleConfig& config,
                                   uint64_t seed) {
  RippleProfile profile;
  profile.hops.resize(static_cast<size_t>(config.n_hop));

  // Map history items to entity ids; cap to the most recent max_history.
  std::vector<int32_t> seeds;
  size_t taken = 0;
  for (const auto& item_id : history) {
    if (config.max_history >= 0 && taken >= static_cast<size_t>(config.max_history)) break;
    ++taken;
    if (const auto id = kg.entities().lookup(item_entity_name(item_id))) {
      seeds.push_back(*id);
    } else {
      ++profile.skipped_history;
    }
  }
  if (seeds.empty()) return profile;  // empty profile, truncation_depth 0

  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  Rng rng(seed);
  std::vector<int32_t> frontier = std::move(seeds);
  for (int hop = 0; hop < config.n_hop; ++hop) {
    std::vector<Triple> candidates;
    for (const int32_t head : frontier) {
      const auto adjacent = kg.triples_with_head(head);
      candidates.insert(candidates.end(), adjacent.begin(), adjacent.end());
    }
    if (candidates.empty()) break;  // this hop and all later hops stay empty

    auto& hop_set = profile.hops[static_cast<size_t>(hop)];
    hop_set.reserve(static_cast<size_t>(config.n_memory));
    std::set<int32_t> tails;
    for (int i = 0; i < config.n_memory; ++i) {
      const Triple& t = candidates[rng.bounded(candidates.size())];
      hop_set.push_back(t);
      tails.insert(t.tail);
    }
    profile.truncation_depth = hop + 1;
    frontier.assign(tails.begin(), tails.end());
  }
  return profile;
}

const RippleProfile* ProfileStore::find(const std::string& user_id) const {
  const auto it = std::lower_bound(
      profiles.begin(), profiles.end(), user_id,
      [](const RippleProfile& p, const std::string& id) { return p.user_id < id; });
  if (it == profiles.end() || it->user_id != user_id) return nullptr;
  return &*it;
}

int64_t ProfileStore::popularity(const std::string& item_id) const {
  const auto it = std::lower_bound(
      item_popularity.begin(), item_popularity.end(), item_id,
      [](const auto& entry, const std::string& id) { return entry.first < id; });
  if (it == item_popularity.end() || it->first != item_id) return 0;
  return it->second;
}

ProfileStore build_all_profiles(std::span<const InteractionRecord> train_rows,
                                const KnowledgeGraph& kg, const RippleConfig& config) {
  // Gather per-user click histories; ordered maps keep everything
  // independent of input row order.
  struct Click {
    int64_t ts;
    std::string item_id;
  };
  std::map<std::string, std::vector<Click>> clicks_by_user;
  std::map<std::string, int64_t> popularity;
  for (const auto& rec : train_rows) {
    if (rec.is_click != 1) continue;
    clicks_by_user[rec.user_id].push_back({rec.event_timestamp_unix, rec.item_id});
    ++popularity[rec.item_id];
  }

  ProfileStore store;
  store.profiles.reserve(clicks_by_user.size());
  for (auto& [user_id, clicks] : clicks_by_user) {
    // Most recent first; ties broken by item id so ordering is total.
    std::sort(clicks.begin(), clicks.end(), [](const Click& a, const Click& b) {
      if (a.ts != b.ts) return a.ts > b.ts;
      return a.item_id < b.item_id;
    });
    std::vector<std::string> history;
    history.reserve(clicks.size());
    std::set<std::string> seen;
    for (const auto& c : clicks) {
      if (seen.insert(c.item_id).second) history.push_back(c.item_id);
    }
    RippleProfile profile =
        build_ripple_profile(history, kg, config, user_stream_seed(config.seed, user_id));
    profile.user_id = user_id;
    store.profiles.push_back(std::move(profile));
  }

  store.item_popularity.assign(popularity.begin(), popularity.end());
  return store;
}

std::string serialize_profiles(const ProfileStore& store) {
  BinWriter w;
  w.raw("RRPS", 4);
  w.u32(1);  // format version
  w.u64(store.profiles.size());
  for (const auto& p : store.profiles) {
    w.str(p.user_id);
    w.u32(static_cast<uint32_t>(p.skipped_history));
    w.u32(static_cast<uint32_t>(p.hops.size()));
    for (const auto& hop : p.hops) {
      w.u32(static_cast<uint32_t>(hop.size()));
      for (const auto& t : hop) {
        w.u32(static_cast<uint32_t>(t.head));
        w.u32(static_cast<uint32_t>(t.relation));
        w.u32(static_cast<uint32_t>(t.tail));
      }
    }
  }
  w.u64(store.item_popularity.size());
  for (const auto& [item_id, count] : store.item_popularity) {
    w.str(item_id);
    w.i64(count);
  }
  return w.take();
}

ProfileStore deserialize_profiles(std::string_view bytes, std::string_view origin) {
  BinReader r(bytes, std::string(origin));
  if (bytes.size() < 8 || bytes.substr(0, 4) != "RRPS") {
    throw CorruptionError(std::string(origin) + ": not a profile store");
  }
  (void)r.u32();  // magic, validated above
  const uint32_t version = r.u32();
  if (version != 1) {
    throw VersionError(std::string(origin) + ": profile store version " +
                       std::to_string(version) + " unsupported (supported: 1)");
  }

  ProfileStore store;
  const uint64_t n = r.u64();
  store.profiles.reserve(n);
  for (uint64_t i = 0; i < n; ++i) {
    RippleProfile p;
    p.user_id = r.str();
    p.skipped_history = r.u32();
    const uint32_t n_hops = r.u32();
    p.hops.resize(n_hops);
    for (auto& hop : p.hops) {
      const uint32_t m = r.u32();
      hop.resize(m);
      for (auto& t : hop) {
        t.head = static_cast<int32_t>(r.u32());
        t.relation = static_cast<int32_t>(r.u32());
        t.tail = static_cast<int32_t>(r.u32());
      }
      if (m > 0) ++p.truncation_depth;
    }
    store.profiles.push_back(std::move(p));
  }
  const uint64_t n_pop = r.u64();
  store.item_popularity.reserve(n_pop);
  for (uint64_t i = 0; i < n_pop; ++i) {
    std::string id = r.str();
    const int64_t count = r.i64();
    store.item_popularity.emplace_back(std::move(id), count);
  }
  r.expect_end();
  return store;
}

}  // namespace ripplerec
