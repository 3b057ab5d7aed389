#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ripplerec/ripple.hpp"

namespace ripplerec {

struct ModelConfig {
  int dim = 16;
  int n_hop = 5;
  int n_memory = 16;
  double learning_rate = 0.01;
  int max_epochs = 50;
  int patience = 5;
  double l2_weight = 1e-5;   // lambda_2, on parameters touched by the batch
  double kge_weight = 0.01;  // lambda_1, knowledge-graph embedding term
  int batch_size = 1024;
  uint64_t seed = 0;

  void validate() const;  // throws ConfigError
};

// Entity embedding table E (n_entities x d) plus one d x d transform per
// relation. Stored as float32; all arithmetic runs in double.
struct ModelParameters {
  int dim = 0;
  size_t n_entities = 0;
  size_t n_relations = 0;
  std::vector<float> entity_embeddings;    // row-major n_entities x dim
  std::vector<float> relation_transforms;  // n_relations x dim x dim

  std::span<const float> entity_row(int32_t e) const {
    return {entity_embeddings.data() + static_cast<size_t>(e) * dim,
            static_cast<size_t>(dim)};
  }
  std::span<const float> relation_matrix(int32_t r) const {
    return {relation_transforms.data() + static_cast<size_t>(r) * dim * dim,
            static_cast<size_t>(dim) * dim};
  }
  std::vector<double> entity_row_d(int32_t e) const;

  bool operator==(const ModelParameters&) const = default;
};

// Entries i.i.d. uniform in [-0.08, 0.08], deterministic for a fixed seed.
ModelParameters init_parameters(size_t n_entities, size_t n_relations,
                                const ModelConfig& config);

struct Prediction {
  double score = 0.5;                            // sigmoid(u . v), in (0, 1)
  double logit = 0.0;                            // u . v
  std::vector<double> user_vector;               // u
  std::vector<std::vector<double>> attention;    // per hop; empty hop -> empty
};

// Forward pass: per hop, attention logit a_i = v^T R_{r_i} E[h_i], softmax
// within the hop, hop output o_k = sum_i p_i E[t_i]; u = sum over non-empty
// hops; score = sigmoid(u . v). Empty profile scores exactly 0.5.
Prediction score_candidate(const ModelParameters& params, const RippleProfile& profile,
                           std::span<const double> candidate_vec);

// Known-entity convenience; throws ColdStartUnresolvedError when the id is
// out of range.
Prediction score_candidate(const ModelParameters& params, const RippleProfile& profile,
                           int32_t candidate_entity);

struct TrainingExample {
  const RippleProfile* profile;
  int32_t candidate;  // entity id of the candidate item
  int label;          // 0 or 1
};

struct Gradients {
  std::unordered_map<int32_t, std::vector<double>> entity;    // rows
  std::unordered_map<int32_t, std::vector<double>> relation;  // matrices

  std::vector<double>& entity_grad(int32_t id, size_t dim);
  std::vector<double>& relation_grad(int32_t id, size_t dim_sq);
};

// L = mean BCE(score, label)
//   + kge_weight * mean over batch triples of (sigmoid(E[h]^T R_r E[t]) - 1)^2
//   + l2_weight * squared norm of parameters touched by the batch.
// Gradients (optional) are exact for this forward. Throws NumericError when
// the loss is not finite.
double batch_loss(const ModelParameters& params, std::span<const TrainingExample> batch,
                  const ModelConfig& config, Gradients* grads);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double best_metric = 0.0;
  int best_epoch = 0;
};

struct TrainResult {
  ModelParameters params;  // best-validation checkpoint
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_metric = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

using ValidationFn = std::function<double(const ModelParameters&)>;

// Plain SGD with per-epoch shuffling. After every epoch the validation
// metric is evaluated; the best parameters are kept and training stops at
// max_epochs or after `patience` epochs without improvement. Numeric errors
// abort training with the last good checkpoint retained.
TrainResult train_model(std::span<const TrainingExample> examples, size_t n_entities,
                        size_t n_relations, const ModelConfig& config,
                        const ValidationFn& validate);

}  // namespace ripplerec
