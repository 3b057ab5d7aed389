#include "ripplerec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "ripplerec/binio.hpp"
#include "ripplerec/rng.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

SliceReport evaluate_slice_fn(const SlateScoreFn& scorer,
                              std::span<const InteractionRecord> day_rows,
                              const std::string& slice_name, int64_t day, int k) {
  SliceReport report;
  report.slice_name = slice_name;
  report.day = day;
  report.k = k;
  if (day_rows.empty()) {
    report.absent = true;
    return report;
  }

  // user -> item -> clicked (any click on that item that day counts).
  std::map<std::string, std::map<std::string, int>> slates;
  for (const auto& rec : day_rows) {
    auto& label = slates[rec.user_id][rec.item_id];
    label = std::max(label, rec.is_click);
  }

  double ndcg_sum = 0.0, precision_sum = 0.0, recall_sum = 0.0;
  for (const auto& [user_id, slate] : slates) {
    std::vector<std::string> items;
    items.reserve(slate.size());
    for (const auto& [item_id, _] : slate) items.push_back(item_id);

    const std::vector<SlateScore> scores = scorer(user_id, items);

    struct Ranked {
      const std::string* item;
      double score;
      int label;
    };
    std::vector<Ranked> ranked;
    size_t positives = 0;
    for (size_t i = 0; i < items.size(); ++i) {
      if (scores[i].drop) continue;
      const int label = slate.at(items[i]);
      ranked.push_back({&items[i], scores[i].score, label});
      if (label != 0) ++positives;
    }
    if (positives == 0) {
      ++report.users_excluded;
      continue;
    }

    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
      if (a.score != b.score) return a.score > b.score;
      return *a.item < *b.item;
    });
    std::vector<int> labels;
    labels.reserve(ranked.size());
    for (const auto& r : ranked) labels.push_back(r.label);

    ndcg_sum += ndcg_at_k(labels, positives, k);
    const auto [precision, recall] = precision_recall_at_k(labels, positives, k);
    precision_sum += precision;
    recall_sum += recall;
    ++report.users_evaluated;
  }

  if (report.users_evaluated > 0) {
    const double n = static_cast<double>(report.users_evaluated);
    report.ndcg = ndcg_sum / n;
    report.precision = precision_sum / n;
    report.recall = recall_sum / n;
  }
  return report;
}

SlateScoreFn model_scorer(const SliceEvalContext& ctx, SliceReport* counters) {
  return [ctx, counters](const std::string& user_id,
                         const std::vector<std::string>& items) {
    std::vector<SlateScore> scores(items.size());
    const RippleProfile* profile =
        ctx.profiles != nullptr ? ctx.profiles->find(user_id) : nullptr;
    const bool usable = profile != nullptr && !profile->empty();

    if (!usable) {
      // Popularity fallback; deterministic and model-free.
      if (counters != nullptr) ++counters->fallback_users;
      for (size_t i = 0; i < items.size(); ++i) {
        scores[i].score = static_cast<double>(ctx.profiles->popularity(items[i]));
      }
      return scores;
    }

    for (size_t i = 0; i < items.size(); ++i) {
      try {
        const ResolvedEmbedding resolved = ctx.resolver->resolve(items[i]);
        const Prediction pred = score_candidate(*ctx.params, *profile, resolved.vec);
        scores[i].score = pred.score;
        scores[i].cold = resolved.cold;
        if (counters != nullptr) {
          ++counters->slate_items;
          if (resolved.cold) ++counters->coldstart_items;
        }
      } catch (const ColdStartUnresolvedError&) {
        scores[i].drop = true;
        if (counters != nullptr) ++counters->dropped_unresolved;
      }
    }
    return scores;
  };
}

SlateScoreFn popularity_scorer(const ProfileStore& profiles) {
  return [&profiles](const std::string&, const std::vector<std::string>& items) {
    std::vector<SlateScore> scores(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
      scores[i].score = static_cast<double>(profiles.popularity(items[i]));
    }
    return scores;
  };
}

SlateScoreFn random_scorer(uint64_t seed) {
  return [seed](const std::string& user_id, const std::vector<std::string>& items) {
    Rng rng(mix_seed(seed, fnv1a64(user_id)));
    std::vector<SlateScore> scores(items.size());
    for (auto& s : scores) s.score = rng.uniform();
    return scores;
  };
}

SliceReport evaluate_slice(const SliceEvalContext& ctx,
                           std::span<const InteractionRecord> day_rows,
                           const std::string& slice_name, int64_t day, int k) {
  SliceReport counters;
  const SlateScoreFn scorer = model_scorer(ctx, &counters);
  SliceReport report = evaluate_slice_fn(scorer, day_rows, slice_name, day, k);
  report.slate_items = counters.slate_items;
  report.coldstart_items = counters.coldstart_items;
  report.dropped_unresolved = counters.dropped_unresolved;
  report.fallback_users = counters.fallback_users;
  return report;
}

BaselineScores BaselineScores::load_tsv(const std::filesystem::path& path,
                                        const TimezoneRule& tz) {
  (void)tz;
  BaselineScores baseline;
  const std::string data = read_file(path);
  size_t line_no = 0;
  for (const auto& line : split(data, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto parts = split(line, '\t');
    if (parts.size() != 4) {
      throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                        ": expected user_id\\titem_id\\tday\\tscore");
    }
    if (line_no == 1 && parts[3] == "score") continue;  // optional header
    const auto score = parse_double(parts[3]);
    if (!score) {
      throw ValueError(path.string() + ":" + std::to_string(line_no) +
                       ": non-numeric score '" + parts[3] + "'");
    }
    const int64_t day = parse_day(parts[2]);
    baseline.scores_[parts[0] + "\t" + parts[1] + "\t" + std::to_string(day)] = *score;
  }
  return baseline;
}

SlateScoreFn BaselineScores::scorer(int64_t day) const {
  return [this, day](const std::string& user_id, const std::vector<std::string>& items) {
    std::vector<SlateScore> scores(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
      const auto it = scores_.find(user_id + "\t" + items[i] + "\t" + std::to_string(day));
      scores[i].score = it == scores_.end()
                            ? -std::numeric_limits<double>::infinity()
                            : it->second;
    }
    return scores;
  };
}

std::array<SliceReport, 3> build_slice_report_fn(
    const std::function<SlateScoreFn(int64_t day)>& scorer_for_day,
    const DatasetBundle& bundle, int64_t train_day, const TimezoneRule& tz, int k) {
  std::array<SliceReport, 3> out;
  for (int offset = -1; offset <= 1; ++offset) {
    const int64_t day = train_day + offset;
    std::vector<InteractionRecord> rows;
    for (const auto& rec : bundle.interactions) {
      if (rec.event_timestamp_unix > 0 && tz.local_day(rec.event_timestamp_unix) == day) {
        rows.push_back(rec);
      }
    }
    const std::string name = kSliceNames[static_cast<size_t>(offset + 1)];
    out[static_cast<size_t>(offset + 1)] =
        evaluate_slice_fn(scorer_for_day(day), rows, name, day, k);
  }
  return out;
}

std::array<SliceReport, 3> build_slice_report(const SliceEvalContext& ctx,
                                              const DatasetBundle& bundle,
                                              int64_t train_day, const TimezoneRule& tz,
                                              int k) {
  std::array<SliceReport, 3> out;
  for (int offset = -1; offset <= 1; ++offset) {
    const int64_t day = train_day + offset;
    std::vector<InteractionRecord> rows;
    for (const auto& rec : bundle.interactions) {
      if (rec.event_timestamp_unix > 0 && tz.local_day(rec.event_timestamp_unix) == day) {
        rows.push_back(rec);
      }
    }
    const std::string name = kSliceNames[static_cast<size_t>(offset + 1)];
    out[static_cast<size_t>(offset + 1)] = evaluate_slice(ctx, rows, name, day, k);
  }
  return out;
}

namespace {

std::string metric_cell(const SliceReport& slice, double value) {
  if (slice.absent) return "absent";
  if (slice.users_evaluated == 0) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", value);
  return buf;
}

}  // namespace

std::string render_comparison_table(std::span<const ModelSliceRow> rows, int k) {
  const std::array<std::string, 3> metric_names = {
      "NDCG@" + std::to_string(k), "Precision@" + std::to_string(k),
      "Recall@" + std::to_string(k)};
  const std::array<const char*, 3> slice_labels = {"Train-1", "Train", "Train+1"};

  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"Model"};
  for (const auto& metric : metric_names) {
    for (const auto* slice : slice_labels) {
      header.push_back(metric + " " + slice);
    }
  }
  cells.push_back(header);

  for (const auto& row : rows) {
    std::vector<std::string> line = {row.model_name};
    for (int metric = 0; metric < 3; ++metric) {
      for (const auto& slice : row.slices) {
        const double value = metric == 0   ? slice.ndcg
                             : metric == 1 ? slice.precision
                                           : slice.recall;
        line.push_back(metric_cell(slice, value));
      }
    }
    cells.push_back(std::move(line));
  }

  std::vector<size_t> widths(cells[0].size(), 0);
  for (const auto& line : cells) {
    for (size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }

  std::string out;
  for (size_t r = 0; r < cells.size(); ++r) {
    for (size_t c = 0; c < cells[r].size(); ++c) {
      if (c > 0) out += "  ";
      out += cells[r][c];
      out.append(widths[c] - cells[r][c].size(), ' ');
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
    if (r == 0) {
      size_t total = 0;
      for (size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c > 0 ? 2 : 0);
      out.append(total, '-');
      out += '\n';
    }
  }
  return out;
}

std::string comparison_tsv(std::span<const ModelSliceRow> rows, int k) {
  std::string out = "model\tslice\tday\tndcg@" + std::to_string(k) + "\tprecision@" +
                    std::to_string(k) + "\trecall@" + std::to_string(k) +
                    "\tusers\texcluded_users\tcoldstart_fraction\n";
  char buf[160];
  for (const auto& row : rows) {
    for (const auto& slice : row.slices) {
      if (slice.absent) {
        out += row.model_name + "\t" + slice.slice_name + "\t" + format_day(slice.day) +
               "\tabsent\tabsent\tabsent\t0\t0\t0\n";
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%.5f\t%.5f\t%.5f\t%zu\t%zu\t%.5f", slice.ndcg,
                    slice.precision, slice.recall, slice.users_evaluated,
                    slice.users_excluded, slice.coldstart_fraction());
      out += row.model_name + "\t" + slice.slice_name + "\t" + format_day(slice.day) + "\t" +
             buf + "\n";
    }
  }
  return out;
}

}  // namespace ripplerec
