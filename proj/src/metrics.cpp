#include "ripplerec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ripplerec/errors.hpp"

namespace ripplerec {

namespace {

void check_args(size_t total_positives, int k) {
  if (k < 1) throw ValueError("metrics: k must be >= 1, got " + std::to_string(k));
  if (total_positives < 1) {
    throw ValueError("metrics: undefined for zero positives; exclude such users");
  }
}

}  // namespace

double ndcg_at_k(std::span<const int> ranked_labels, size_t total_positives, int k) {
  check_args(total_positives, k);
  const size_t kk = static_cast<size_t>(k);

  double dcg = 0.0;
  for (size_t i = 0; i < ranked_labels.size() && i < kk; ++i) {
    if (ranked_labels[i] != 0) dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  const size_t ideal_hits = std::min(kk, total_positives);
  for (size_t i = 0; i < ideal_hits; ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

std::pair<double, double> precision_recall_at_k(std::span<const int> ranked_labels,
                                                size_t total_positives, int k) {
  check_args(total_positives, k);
  const size_t kk = static_cast<size_t>(k);

  size_t hits = 0;
  for (size_t i = 0; i < ranked_labels.size() && i < kk; ++i) {
    if (ranked_labels[i] != 0) ++hits;
  }
  const double precision = static_cast<double>(hits) / static_cast<double>(k);
  const double recall = static_cast<double>(hits) / static_cast<double>(total_positives);
  return {precision, recall};
}

}  // namespace ripplerec
