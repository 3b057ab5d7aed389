#include "ripplerec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ripplerec/rng.hpp"

namespace ripplerec {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double clamped_sigmoid(double x) {
  double p = sigmoid(x);
  if (p <= 0.0) return std::numeric_limits<double>::min();
  if (p >= 1.0) return std::nextafter(1.0, 0.0);
  return p;
}

// -(y log p + (1-y) log(1-p)) computed from the logit; exact and stable.
double bce_from_logit(double s, int y) {
  const double softplus_neg = s > 0 ? std::log1p(std::exp(-s)) : -s + std::log1p(std::exp(s));
  return softplus_neg + (1 - y) * s;
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 2) throw ConfigError("model: dim must be >= 2");
  if (n_hop < 1) throw ConfigError("model: n_hop must be >= 1");
  if (n_memory < 1) throw ConfigError("model: n_memory must be >= 1");
  if (learning_rate <= 0.0) throw ConfigError("model: learning_rate must be > 0");
  if (patience < 1) throw ConfigError("model: patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("model: max_epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("model: batch_size must be >= 1");
  if (l2_weight < 0.0 || kge_weight < 0.0) {
    throw ConfigError("model: regularizer weights must be >= 0");
  }
}

std::vector<double> ModelParameters::entity_row_d(int32_t e) const {
  const auto row = entity_row(e);
  return std::vector<double>(row.begin(), row.end());
}

ModelParameters init_parameters(size_t n_entities, size_t n_relations,
                                const ModelConfig& config) {
  config.validate();
  if (n_entities < 1 || n_relations < 1) {
    throw ConfigError("model: vocabulary sizes must be >= 1");
  }
  ModelParameters params;
  params.dim = config.dim;
  params.n_entities = n_entities;
  params.n_relations = n_relations;
  params.entity_embeddings.resize(n_entities * static_cast<size_t>(config.dim));
  params.relation_transforms.resize(n_relations * static_cast<size_t>(config.dim) *
                                    config.dim);
  Rng rng(mix_seed(config.seed, 0x1217));
  for (auto& v : params.entity_embeddings) {
    v = static_cast<float>(rng.uniform(-0.08, 0.08));
  }
  for (auto& v : params.relation_transforms) {
    v = static_cast<float>(rng.uniform(-0.08, 0.08));
  }
  return params;
}

Prediction score_candidate(const ModelParameters& params, const RippleProfile& profile,
                           std::span<const double> candidate_vec) {
  const size_t d = static_cast<size_t>(params.dim);
  if (candidate_vec.size() != d) {
    throw ValueError("score_candidate: candidate vector has " +
                     std::to_string(candidate_vec.size()) + " dims, model has " +
                     std::to_string(d));
  }

  Prediction pred;
  pred.user_vector.assign(d, 0.0);
  pred.attention.reserve(profile.hops.size());

  std::vector<double> logits;
  for (const auto& hop : profile.hops) {
    if (hop.empty()) {
      pred.attention.emplace_back();
      continue;
    }
    logits.assign(hop.size(), 0.0);
    for (size_t i = 0; i < hop.size(); ++i) {
      const auto head = params.entity_row(hop[i].head);
      const auto rel = params.relation_matrix(hop[i].relation);
      double a = 0.0;
      for (size_t p = 0; p < d; ++p) {
        double rh = 0.0;
        for (size_t q = 0; q < d; ++q) rh += double(rel[p * d + q]) * double(head[q]);
        a += candidate_vec[p] * rh;
      }
      logits[i] = a;
    }

    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    std::vector<double> weights(hop.size());
    for (size_t i = 0; i < hop.size(); ++i) {
      weights[i] = std::exp(logits[i] - m);
      sum += weights[i];
    }
    for (auto& w : weights) w /= sum;

    for (size_t i = 0; i < hop.size(); ++i) {
      const auto tail = params.entity_row(hop[i].tail);
      for (size_t q = 0; q < d; ++q) pred.user_vector[q] += weights[i] * double(tail[q]);
    }
    pred.attention.push_back(std::move(weights));
  }

  double s = 0.0;
  for (size_t q = 0; q < d; ++q) s += pred.user_vector[q] * candidate_vec[q];
  pred.logit = s;
  pred.score = clamped_sigmoid(s);
  return pred;
}

Prediction score_candidate(const ModelParameters& params, const RippleProfile& profile,
                           int32_t candidate_entity) {
  if (candidate_entity < 0 ||
      static_cast<size_t>(candidate_entity) >= params.n_entities) {
    throw ColdStartUnresolvedError("candidate entity id " +
                                   std::to_string(candidate_entity) +
                                   " is not in the trained vocabulary");
  }
  const auto v = params.entity_row_d(candidate_entity);
  return score_candidate(params, profile, v);
}

std::vector<double>& Gradients::entity_grad(int32_t id, size_t dim) {
  auto& g = entity[id];
  if (g.empty()) g.assign(dim, 0.0);
  return g;
}

std::vector<double>& Gradients::relation_grad(int32_t id, size_t dim_sq) {
  auto& g = relation[id];
  if (g.empty()) g.assign(dim_sq, 0.0);
  return g;
}

double batch_loss(const ModelParameters& params, std::span<const TrainingExample> batch,
                  const ModelConfig& config, Gradients* grads) {
  if (batch.empty()) throw ValueError("batch_loss: empty batch");
  const size_t d = static_cast<size_t>(params.dim);
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  // Parameters touched by the batch, for the L2 term; ordered sets keep the
  // reduction order fixed.
  std::set<int32_t> touched_entities;
  std::set<int32_t> touched_relations;

  double bce_sum = 0.0;
  size_t n_triples = 0;

  std::vector<double> logits, dweights;
  std::vector<double> u(d), du(d), dv(d);

  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) {
      throw ValueError("batch_loss: label must be 0 or 1");
    }
    const std::vector<double> v = params.entity_row_d(ex.candidate);
    touched_entities.insert(ex.candidate);

    // Forward, keeping what the backward pass needs.
    std::fill(u.begin(), u.end(), 0.0);
    struct HopState {
      const std::vector<Triple>* triples;
      std::vector<double> rh;       // M x d
      std::vector<double> weights;  // M
    };
    std::vector<HopState> hop_states;
    for (const auto& hop : ex.profile->hops) {
      if (hop.empty()) continue;
      const size_t M = hop.size();
      HopState state;
      state.triples = &hop;
      state.rh.assign(M * d, 0.0);
      logits.assign(M, 0.0);
      for (size_t i = 0; i < M; ++i) {
        touched_entities.insert(hop[i].head);
        touched_entities.insert(hop[i].tail);
        touched_relations.insert(hop[i].relation);
        const auto head = params.entity_row(hop[i].head);
        const auto rel = params.relation_matrix(hop[i].relation);
        double a = 0.0;
        for (size_t p = 0; p < d; ++p) {
          double rh = 0.0;
          for (size_t q = 0; q < d; ++q) rh += double(rel[p * d + q]) * double(head[q]);
          state.rh[i * d + p] = rh;
          a += v[p] * rh;
        }
        logits[i] = a;
      }
      const double m = *std::max_element(logits.begin(), logits.end());
      double sum = 0.0;
      state.weights.assign(M, 0.0);
      for (size_t i = 0; i < M; ++i) {
        state.weights[i] = std::exp(logits[i] - m);
        sum += state.weights[i];
      }
      for (auto& w : state.weights) w /= sum;
      for (size_t i = 0; i < M; ++i) {
        const auto tail = params.entity_row(hop[i].tail);
        for (size_t q = 0; q < d; ++q) u[q] += state.weights[i] * double(tail[q]);
      }
      n_triples += M;
      hop_states.push_back(std::move(state));
    }

    double s = 0.0;
    for (size_t q = 0; q < d; ++q) s += u[q] * v[q];
    bce_sum += bce_from_logit(s, ex.label);

    if (grads != nullptr) {
      const double g = (sigmoid(s) - ex.label) * inv_batch;
      for (size_t q = 0; q < d; ++q) {
        du[q] = g * v[q];
        dv[q] = g * u[q];
      }
      for (const auto& state : hop_states) {
        const auto& hop = *state.triples;
        const size_t M = hop.size();
        dweights.assign(M, 0.0);
        for (size_t i = 0; i < M; ++i) {
          const auto tail = params.entity_row(hop[i].tail);
          auto& tg = grads->entity_grad(hop[i].tail, d);
          double dw = 0.0;
          for (size_t q = 0; q < d; ++q) {
            dw += du[q] * double(tail[q]);
            tg[q] += state.weights[i] * du[q];
          }
          dweights[i] = dw;
        }
        double wdot = 0.0;
        for (size_t i = 0; i < M; ++i) wdot += state.weights[i] * dweights[i];
        for (size_t i = 0; i < M; ++i) {
          const double da = state.weights[i] * (dweights[i] - wdot);
          if (da == 0.0) continue;
          const auto head = params.entity_row(hop[i].head);
          const auto rel = params.relation_matrix(hop[i].relation);
          auto& hg = grads->entity_grad(hop[i].head, d);
          auto& rg = grads->relation_grad(hop[i].relation, d * d);
          for (size_t p = 0; p < d; ++p) {
            dv[p] += da * state.rh[i * d + p];
            const double dav = da * v[p];
            for (size_t q = 0; q < d; ++q) {
              hg[q] += dav * double(rel[p * d + q]);
              rg[p * d + q] += dav * double(head[q]);
            }
          }
        }
      }
      auto& cg = grads->entity_grad(ex.candidate, d);
      for (size_t q = 0; q < d; ++q) cg[q] += dv[q];
    }
  }

  double loss = bce_sum * inv_batch;

  // Knowledge-graph embedding term over the batch's sampled triples.
  if (config.kge_weight > 0.0 && n_triples > 0) {
    const double inv_triples = 1.0 / static_cast<double>(n_triples);
    double kge_sum = 0.0;
    std::vector<double> rt(d);
    for (const auto& ex : batch) {
      for (const auto& hop : ex.profile->hops) {
        for (const auto& triple : hop) {
          const auto head = params.entity_row(triple.head);
          const auto rel = params.relation_matrix(triple.relation);
          const auto tail = params.entity_row(triple.tail);
          double x = 0.0;
          for (size_t p = 0; p < d; ++p) {
            double acc = 0.0;
            for (size_t q = 0; q < d; ++q) acc += double(rel[p * d + q]) * double(tail[q]);
            rt[p] = acc;
            x += double(head[p]) * acc;
          }
          const double f = sigmoid(x);
          kge_sum += (f - 1.0) * (f - 1.0);
          if (grads != nullptr) {
            const double dx =
                2.0 * (f - 1.0) * f * (1.0 - f) * config.kge_weight * inv_triples;
            if (dx != 0.0) {
              auto& hg = grads->entity_grad(triple.head, d);
              auto& tg = grads->entity_grad(triple.tail, d);
              auto& rg = grads->relation_grad(triple.relation, d * d);
              for (size_t p = 0; p < d; ++p) {
                hg[p] += dx * rt[p];
                const double dxh = dx * double(head[p]);
                for (size_t q = 0; q < d; ++q) {
                  tg[q] += dxh * double(rel[p * d + q]);
                  rg[p * d + q] += dxh * double(tail[q]);
                }
              }
            }
          }
        }
      }
    }
    loss += config.kge_weight * kge_sum * inv_triples;
  }

  if (config.l2_weight > 0.0) {
    double sq = 0.0;
    for (const int32_t e : touched_entities) {
      const auto row = params.entity_row(e);
      for (size_t q = 0; q < d; ++q) sq += double(row[q]) * double(row[q]);
      if (grads != nullptr) {
        auto& eg = grads->entity_grad(e, d);
        for (size_t q = 0; q < d; ++q) eg[q] += 2.0 * config.l2_weight * double(row[q]);
      }
    }
    for (const int32_t r : touched_relations) {
      const auto mat = params.relation_matrix(r);
      for (size_t q = 0; q < d * d; ++q) sq += double(mat[q]) * double(mat[q]);
      if (grads != nullptr) {
        auto& rg = grads->relation_grad(r, d * d);
        for (size_t q = 0; q < d * d; ++q) rg[q] += 2.0 * config.l2_weight * double(mat[q]);
      }
    }
    loss += config.l2_weight * sq;
  }

  if (!std::isfinite(loss)) {
    throw NumericError("batch_loss: non-finite loss over batch of " +
                       std::to_string(batch.size()) + " examples (first user '" +
                       batch.front().profile->user_id + "', candidate " +
                       std::to_string(batch.front().candidate) + ")");
  }
  return loss;
}

TrainResult train_model(std::span<const TrainingExample> examples, size_t n_entities,
                        size_t n_relations, const ModelConfig& config,
                        const ValidationFn& validate) {
  config.validate();
  if (examples.empty()) throw ValueError("train: no training examples");

  ModelParameters params = init_parameters(n_entities, n_relations, config);

  TrainResult result;
  result.params = params;  // last-good checkpoint before the first epoch
  result.best_metric = -std::numeric_limits<double>::infinity();
  result.best_epoch = 0;

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<TrainingExample> batch;

  const size_t d = static_cast<size_t>(config.dim);
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng shuffle_rng(mix_seed(config.seed, 0xe90c, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.bounded(i)]);
    }

    double loss_sum = 0.0;
    try {
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(config.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(config.batch_size));
        batch.clear();
        for (size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);

        Gradients grads;
        const double loss = batch_loss(params, batch, config, &grads);
        loss_sum += loss * static_cast<double>(batch.size());

        for (const auto& [e, g] : grads.entity) {
          float* row = params.entity_embeddings.data() + static_cast<size_t>(e) * d;
          for (size_t q = 0; q < d; ++q) {
            row[q] = static_cast<float>(double(row[q]) - config.learning_rate * g[q]);
          }
        }
        for (const auto& [r, g] : grads.relation) {
          float* mat = params.relation_transforms.data() + static_cast<size_t>(r) * d * d;
          for (size_t q = 0; q < d * d; ++q) {
            mat[q] = static_cast<float>(double(mat[q]) - config.learning_rate * g[q]);
          }
        }
      }
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = e.what();
      break;
    }

    const double metric = validate(params);
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(examples.size());
    entry.val_metric = metric;
    if (metric > result.best_metric) {
      result.best_metric = metric;
      result.best_epoch = epoch;
      result.params = params;
    }
    entry.best_metric = result.best_metric;
    entry.best_epoch = result.best_epoch;
    result.log.push_back(entry);

    if (epoch - result.best_epoch >= config.patience) break;
  }
  return result;
}

}  // namespace ripplerec
