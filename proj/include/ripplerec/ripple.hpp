#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ripplerec/dataset.hpp"
#include "ripplerec/kg.hpp"

namespace ripplerec {

// Per-user sampled hop sets. Hop k+1 expands from the tails of the sampled
// hop-k set, so profiles stay rectangular: every non-empty hop holds exactly
// n_memory triples (sampled with replacement).
struct RippleProfile {
  std::string user_id;
  std::vector<std::vector<Triple>> hops;  // length H; each empty or n_memory
  int truncation_depth = 0;               // number of non-empty hops
  size_t skipped_history = 0;             // history items unknown to the KG

  bool empty() const { return truncation_depth == 0; }

  bool operator==(const RippleProfile&) const = default;
};

struct RippleConfig {
  int n_hop = 5;
  int n_memory = 16;
  uint64_t seed = 0;
  int64_t max_history = -1;  // cap on most recent distinct clicked items; -1 = unlimited
};

// history: distinct clicked item ids, most recent first. Unknown items are
// skipped and counted. Deterministic for a fixed (history, kg, config, seed).
RippleProfile build_ripple_profile(std::span<const std::string> history,
                                   const KnowledgeGraph& kg, const RippleConfig& config,
                                   uint64_t seed);

struct ProfileStore {
  std::vector<RippleProfile> profiles;  // sorted by user_id
  // Train-split click counts, sorted by item id; backs the popularity
  // fallback for users without a usable profile.
  std::vector<std::pair<std::string, int64_t>> item_popularity;

  const RippleProfile* find(const std::string& user_id) const;
  int64_t popularity(const std::string& item_id) const;

  bool operator==(const ProfileStore&) const = default;
};

// One profile per user with at least one click in `train_rows`. History is
// clicked items only; impressions do not seed ripples. The result does not
// depend on input row order (profiles use per-user seeds derived from
// config.seed and the user id).
ProfileStore build_all_profiles(std::span<const InteractionRecord> train_rows,
                                const KnowledgeGraph& kg, const RippleConfig& config);

std::string serialize_profiles(const ProfileStore& store);
ProfileStore deserialize_profiles(std::string_view bytes, std::string_view origin);

}  // namespace ripplerec
