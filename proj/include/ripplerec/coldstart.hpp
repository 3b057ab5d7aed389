#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ripplerec/dataset.hpp"
#include "ripplerec/kg.hpp"
#include "ripplerec/model.hpp"

namespace ripplerec {

// ---------------------------------------------------------------------------
// Approach 1: feedforward encoder from content space to model space.
// ---------------------------------------------------------------------------

struct EncoderConfig {
  int input_dim = 256;
  int hidden1 = 128;
  int hidden2 = 64;
  int output_dim = 16;  // model embedding dimension
  double learning_rate = 0.05;
  int epochs = 30;
  int batch_size = 64;
  double holdout_fraction = 0.10;
  // The cosine objective is scale-invariant in the encoder output, so its
  // gradient grows as 1/|output|; clipping the update keeps SGD stable when
  // the output norm dips. 0 disables.
  double max_grad_norm = 5.0;
  uint64_t seed = 0;

  void validate() const;
};

// Two hidden layers, rectifier activations, identity output.
struct EncoderParams {
  std::vector<int> dims;                    // {in, h1, h2, out}
  std::vector<std::vector<float>> weights;  // per layer, out x in row-major
  std::vector<std::vector<float>> biases;   // per layer, out

  bool operator==(const EncoderParams&) const = default;
};

EncoderParams init_encoder(const EncoderConfig& config);

using EmbeddingPair = std::pair<std::vector<double>, std::vector<double>>;  // (content, target)

// Mean (1 - cos(f(x), y)) over the batch; gradients exact for this forward.
double encoder_batch_loss(const EncoderParams& params, std::span<const EmbeddingPair> batch,
                          std::vector<std::vector<double>>* weight_grads,
                          std::vector<std::vector<double>>* bias_grads);

struct EncoderTrainResult {
  EncoderParams params;
  // Per epoch: (train loss, holdout loss); holdout loss is NaN when the
  // holdout split is empty.
  std::vector<std::pair<double, double>> loss_curve;
  size_t skipped_pairs = 0;  // zero-norm targets
};

// SGD on the cosine objective; deterministic for a fixed seed. Requires at
// least 2 usable pairs.
EncoderTrainResult train_encoder(std::span<const EmbeddingPair> pairs,
                                 const EncoderConfig& config);

std::vector<double> encode_content(const EncoderParams& params,
                                   std::span<const double> content);

// ---------------------------------------------------------------------------
// Approach 2: similarity-based replacement.
// ---------------------------------------------------------------------------

struct SimilarityIndex {
  struct Entry {
    std::string item_id;
    int32_t entity;                     // model entity id
    std::vector<float> unit_embedding;  // unit-normalized content embedding

    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> entries;  // sorted by item_id
  size_t dim = 0;
  size_t excluded_zero_norm = 0;
  size_t excluded_missing_embedding = 0;  // known to the model, no usable embedding

  bool operator==(const SimilarityIndex&) const = default;
};

// "Known" means: present in the trained entity vocabulary with a content
// embedding. Throws on an empty result.
SimilarityIndex build_similarity_index(const Vocab& entities,
                                       std::span<const ItemRecord> items);

// Exact brute-force argmax of cosine similarity; ties go to the
// lexicographically smallest item id. Throws ValueError on a zero-norm query.
std::pair<const SimilarityIndex::Entry*, double> nearest_known_item(
    const SimilarityIndex& index, std::span<const double> query);

// ---------------------------------------------------------------------------
// Resolution.
// ---------------------------------------------------------------------------

enum class ColdStartStrategy { KnownOnly, Similarity, Encoder };

ColdStartStrategy parse_strategy(std::string_view name);
std::string_view strategy_name(ColdStartStrategy strategy);

// Content embeddings are ingested as data; this seam exists so tests can
// substitute a deterministic stub and a future service-backed provider can
// slot in without touching the resolver.
class ContentEmbeddingProvider {
public:
  virtual ~ContentEmbeddingProvider() = default;
  virtual std::optional<std::vector<double>> embedding_for(const std::string& item_id) const = 0;
};

class ItemTableProvider : public ContentEmbeddingProvider {
public:
  explicit ItemTableProvider(std::span<const ItemRecord> items);
  std::optional<std::vector<double>> embedding_for(const std::string& item_id) const override;

private:
  std::unordered_map<std::string, std::vector<double>> embeddings_;
};

// Deterministic pseudo-embedding from a hash of the text. Never zero.
std::vector<double> hash_stub_embedding(std::string_view text, size_t dim);

class HashStubProvider : public ContentEmbeddingProvider {
public:
  explicit HashStubProvider(size_t dim = kContentEmbeddingDim) : dim_(dim) {}
  std::optional<std::vector<double>> embedding_for(const std::string& item_id) const override {
    return hash_stub_embedding(item_id, dim_);
  }

private:
  size_t dim_;
};

struct ResolvedEmbedding {
  std::vector<double> vec;      // model-space, dim = model dim
  std::string provenance;       // "known" | "matched:<id>" | "encoded"
  double matched_cosine = 0.0;  // only meaningful for matched
  bool cold = false;
};

class ColdStartResolver {
public:
  ColdStartResolver(const ModelParameters& params, const Vocab& entities,
                    ColdStartStrategy strategy, const SimilarityIndex* index,
                    const EncoderParams* encoder, const ContentEmbeddingProvider* provider);

  // Known item: its trained embedding row, bit for bit. Unseen item: nearest
  // known item's trained row (similarity) or the encoder output (encoder).
  // KnownOnly throws ColdStartUnresolvedError for unseen items. Under the
  // similarity strategy with a non-empty index this never throws: items
  // without a content embedding fall back to the deterministic hash stub.
  ResolvedEmbedding resolve(const std::string& item_id) const;

  std::optional<int32_t> entity_of(const std::string& item_id) const;
  ColdStartStrategy strategy() const { return strategy_; }

private:
  const ModelParameters* params_;
  const Vocab* entities_;
  ColdStartStrategy strategy_;
  const SimilarityIndex* index_;
  const EncoderParams* encoder_;
  const ContentEmbeddingProvider* provider_;
};

// ---------------------------------------------------------------------------
// Diagnostics.
// ---------------------------------------------------------------------------

struct BridgeReport {
  std::string strategy;
  std::array<int64_t, 50> bins{};  // equal-width over [-1, 1]
  double mean = 0.0;
  double median = 0.0;
  size_t pairs = 0;

  struct Entry {
    std::string item_id;
    std::string matched_id;  // empty for the encoder strategy
    double cosine = 0.0;     // resolved vs true trained embedding
  };
  std::vector<Entry> entries;
};

// Histogram of cos(resolved, true) over evaluation pairs.
BridgeReport similarity_histogram(std::span<const EmbeddingPair> pairs);

// Hold out a fraction of known items, treat them as unseen, resolve them
// with the chosen strategy and compare against their real trained rows.
BridgeReport evaluate_bridge(const ModelParameters& params, const Vocab& entities,
                             std::span<const ItemRecord> items, ColdStartStrategy strategy,
                             double holdout_fraction, uint64_t seed,
                             const EncoderConfig* encoder_config = nullptr);

std::string bridge_report_tsv(const BridgeReport& report);
std::string histogram_csv(const BridgeReport& report);

double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace ripplerec
