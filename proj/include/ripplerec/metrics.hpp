#pragma once

#include <span>
#include <utility>

namespace ripplerec {

// Binary-gain ranking metrics over a slate ranked best-first.
// `ranked_labels` are the relevance labels in ranked order; `total_positives`
// counts positives in the whole slate (it may exceed what is visible in the
// top k). All three require total_positives >= 1 and k >= 1 and throw
// ValueError otherwise; callers exclude zero-positive users.

// DCG = sum_{i<=k} rel_i / log2(i+1), IDCG over min(k, positives) ideal hits.
double ndcg_at_k(std::span<const int> ranked_labels, size_t total_positives, int k);

// precision = hits@k / k (fixed denominator even for short slates),
// recall = hits@k / total_positives.
std::pair<double, double> precision_recall_at_k(std::span<const int> ranked_labels,
                                                size_t total_positives, int k);

}  // namespace ripplerec
