#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ripplerec/coldstart.hpp"
#include "ripplerec/dataset.hpp"
#include "ripplerec/metrics.hpp"
#include "ripplerec/ripple.hpp"

namespace ripplerec {

struct SliceReport {
  std::string slice_name;  // train_minus_1 | train_day | train_plus_1
  int64_t day = 0;         // local day index
  bool absent = false;     // no interactions on this date
  int k = 10;

  double ndcg = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  size_t users_evaluated = 0;
  size_t users_excluded = 0;     // zero positives in their slate
  size_t slate_items = 0;        // items scored through the model path
  size_t coldstart_items = 0;    // of those, resolved via a cold-start bridge
  size_t dropped_unresolved = 0; // known_only drops
  size_t fallback_users = 0;     // ranked by popularity (no usable profile)

  double coldstart_fraction() const {
    return slate_items == 0 ? 0.0
                            : static_cast<double>(coldstart_items) /
                                  static_cast<double>(slate_items);
  }
};

// Per-item score plus bookkeeping flags for one user's slate.
struct SlateScore {
  double score = 0.0;
  bool cold = false;  // required cold-start resolution
  bool drop = false;  // remove from the slate (unresolvable under known_only)
};

// Returns one SlateScore per item id, in order.
using SlateScoreFn = std::function<std::vector<SlateScore>(
    const std::string& user_id, const std::vector<std::string>& items)>;

// Impression-slate protocol: for each user, the candidate slate is the set
// of distinct items with logged impressions that day, labeled clicked if any
// of the user's rows on that item clicked. Users with zero positives are
// excluded. Ranking is by descending score, ties by ascending item id.
SliceReport evaluate_slice_fn(const SlateScoreFn& scorer,
                              std::span<const InteractionRecord> day_rows,
                              const std::string& slice_name, int64_t day, int k);

struct SliceEvalContext {
  const ModelParameters* params = nullptr;
  const ProfileStore* profiles = nullptr;
  const ColdStartResolver* resolver = nullptr;
};

// Model path: scores via the user's training-time ripple profile; users
// without a usable profile are ranked by train-split item popularity.
SliceReport evaluate_slice(const SliceEvalContext& ctx,
                           std::span<const InteractionRecord> day_rows,
                           const std::string& slice_name, int64_t day, int k);

// Ready-made scorers.
SlateScoreFn model_scorer(const SliceEvalContext& ctx, SliceReport* counters);
SlateScoreFn popularity_scorer(const ProfileStore& profiles);
SlateScoreFn random_scorer(uint64_t seed);

// Optional external baseline: TSV rows (user_id, item_id, day, score) with
// day as YYYY-MM-DD. Items absent from the file rank last.
class BaselineScores {
public:
  static BaselineScores load_tsv(const std::filesystem::path& path, const TimezoneRule& tz);
  SlateScoreFn scorer(int64_t day) const;

private:
  std::unordered_map<std::string, double> scores_;  // "user\titem\tday" -> score
};

inline constexpr std::array<const char*, 3> kSliceNames = {"train_minus_1", "train_day",
                                                           "train_plus_1"};

// Evaluates train_date-1, train_date, train_date+1. A missing date yields an
// absent slice; the others are still produced.
std::array<SliceReport, 3> build_slice_report(const SliceEvalContext& ctx,
                                              const DatasetBundle& bundle,
                                              int64_t train_day, const TimezoneRule& tz,
                                              int k);
std::array<SliceReport, 3> build_slice_report_fn(
    const std::function<SlateScoreFn(int64_t day)>& scorer_for_day,
    const DatasetBundle& bundle, int64_t train_day, const TimezoneRule& tz, int k);

struct ModelSliceRow {
  std::string model_name;
  std::array<SliceReport, 3> slices;
};

// Aligned plain-text table, one row per model, metric blocks across slices.
std::string render_comparison_table(std::span<const ModelSliceRow> rows, int k);
std::string comparison_tsv(std::span<const ModelSliceRow> rows, int k);

}  // namespace ripplerec
