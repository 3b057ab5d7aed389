#include "ripplerec/coldstart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "ripplerec/rng.hpp"
#include "ripplerec/text.hpp"

namespace ripplerec {

namespace {

constexpr double kNormFloor = 1e-12;

double vector_norm(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  return std::sqrt(sq);
}

}  // namespace

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom < kNormFloor) return 0.0;
  return dot / denom;
}

// ---------------------------------------------------------------------------
// Encoder.
// ---------------------------------------------------------------------------

void EncoderConfig::validate() const {
  if (input_dim < 1 || hidden1 < 1 || hidden2 < 1 || output_dim < 1) {
    throw ConfigError("encoder: layer sizes must be >= 1");
  }
  if (learning_rate <= 0.0) throw ConfigError("encoder: learning_rate must be > 0");
  if (epochs < 1 || batch_size < 1) throw ConfigError("encoder: epochs/batch_size must be >= 1");
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ConfigError("encoder: holdout_fraction must be in [0, 1)");
  }
}

EncoderParams init_encoder(const EncoderConfig& config) {
  config.validate();
  EncoderParams params;
  params.dims = {config.input_dim, config.hidden1, config.hidden2, config.output_dim};
  for (size_t l = 0; l + 1 < params.dims.size(); ++l) {
    const int fan_in = params.dims[l];
    const int fan_out = params.dims[l + 1];
    const bool hidden = l + 2 < params.dims.size();
    // He-style range keeps activations at unit scale through the rectifiers;
    // the cosine objective's gradient carries a 1/|output| factor, so a
    // vanishing output scale would make the first steps explode.
    const double scale = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng(mix_seed(config.seed, 0xec0d, l));
    std::vector<float> w(static_cast<size_t>(fan_out) * fan_in);
    for (auto& x : w) x = static_cast<float>(rng.uniform(-scale, scale));
    params.weights.push_back(std::move(w));
    params.biases.emplace_back(static_cast<size_t>(fan_out), hidden ? 0.01f : 0.0f);
  }
  return params;
}

namespace {

// Forward pass that keeps pre-activations for the backward pass.
struct EncoderTrace {
  std::vector<std::vector<double>> activations;  // x_0 .. x_L
  std::vector<std::vector<double>> pre;          // z_1 .. z_L
};

std::vector<double> encoder_forward(const EncoderParams& params,
                                    std::span<const double> input, EncoderTrace* trace) {
  const size_t n_layers = params.weights.size();
  std::vector<double> x(input.begin(), input.end());
  if (trace != nullptr) trace->activations.push_back(x);
  for (size_t l = 0; l < n_layers; ++l) {
    const size_t in = static_cast<size_t>(params.dims[l]);
    const size_t out = static_cast<size_t>(params.dims[l + 1]);
    std::vector<double> z(out, 0.0);
    const auto& w = params.weights[l];
    for (size_t o = 0; o < out; ++o) {
      double acc = double(params.biases[l][o]);
      for (size_t i = 0; i < in; ++i) acc += double(w[o * in + i]) * x[i];
      z[o] = acc;
    }
    if (trace != nullptr) trace->pre.push_back(z);
    if (l + 1 < n_layers) {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;  // rectifier
    }
    x = std::move(z);
    if (trace != nullptr) trace->activations.push_back(x);
  }
  return x;
}

}  // namespace

std::vector<double> encode_content(const EncoderParams& params,
                                   std::span<const double> content) {
  if (params.dims.empty()) throw ConfigError("encoder: not initialized");
  if (content.size() != static_cast<size_t>(params.dims.front())) {
    throw ValueError("encode_content: input has " + std::to_string(content.size()) +
                     " dims, encoder expects " + std::to_string(params.dims.front()));
  }
  return encoder_forward(params, content, nullptr);
}

double encoder_batch_loss(const EncoderParams& params, std::span<const EmbeddingPair> batch,
                          std::vector<std::vector<double>>* weight_grads,
                          std::vector<std::vector<double>>* bias_grads) {
  if (batch.empty()) throw ValueError("encoder_batch_loss: empty batch");
  const size_t n_layers = params.weights.size();
  const bool want_grads = weight_grads != nullptr;
  if (want_grads) {
    weight_grads->assign(n_layers, {});
    bias_grads->assign(n_layers, {});
    for (size_t l = 0; l < n_layers; ++l) {
      (*weight_grads)[l].assign(params.weights[l].size(), 0.0);
      (*bias_grads)[l].assign(params.biases[l].size(), 0.0);
    }
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& [x, y] : batch) {
    EncoderTrace trace;
    const std::vector<double> a = encoder_forward(params, x, want_grads ? &trace : nullptr);
    if (!want_grads) {
      loss += 1.0 - cosine_similarity(a, y);
      continue;
    }

    double s = 0.0, na2 = 0.0, ny2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      s += a[i] * y[i];
      na2 += a[i] * a[i];
      ny2 += y[i] * y[i];
    }
    const double na = std::max(std::sqrt(na2), kNormFloor);
    const double ny = std::max(std::sqrt(ny2), kNormFloor);
    loss += 1.0 - s / (na * ny);

    // d(1 - cos)/da = -(y/(na ny) - s a/(na^3 ny))
    std::vector<double> dz(a.size());
    for (size_t i = 0; i < a.size(); ++i) {
      dz[i] = -(y[i] / (na * ny) - s * a[i] / (na * na * na * ny)) * inv_batch;
    }

    for (size_t l = n_layers; l-- > 0;) {
      const size_t in = static_cast<size_t>(params.dims[l]);
      const size_t out = static_cast<size_t>(params.dims[l + 1]);
      const auto& x_prev = trace.activations[l];
      auto& wg = (*weight_grads)[l];
      auto& bg = (*bias_grads)[l];
      std::vector<double> dx(in, 0.0);
      const auto& w = params.weights[l];
      for (size_t o = 0; o < out; ++o) {
        bg[o] += dz[o];
        for (size_t i = 0; i < in; ++i) {
          wg[o * in + i] += dz[o] * x_prev[i];
          dx[i] += double(w[o * in + i]) * dz[o];
        }
      }
      if (l > 0) {
        const auto& z_prev = trace.pre[l - 1];
        dz.assign(in, 0.0);
        for (size_t i = 0; i < in; ++i) dz[i] = z_prev[i] > 0.0 ? dx[i] : 0.0;
      }
    }
  }

  loss *= inv_batch;
  if (!std::isfinite(loss)) {
    throw NumericError("encoder_batch_loss: non-finite loss");
  }
  return loss;
}

EncoderTrainResult train_encoder(std::span<const EmbeddingPair> pairs,
                                 const EncoderConfig& config) {
  config.validate();

  EncoderTrainResult result;
  std::vector<const EmbeddingPair*> usable;
  for (const auto& pair : pairs) {
    if (pair.first.size() != static_cast<size_t>(config.input_dim)) {
      throw ValueError("train_encoder: content embedding has " +
                       std::to_string(pair.first.size()) + " dims, expected " +
                       std::to_string(config.input_dim));
    }
    if (vector_norm(pair.second) < kNormFloor) {
      ++result.skipped_pairs;
      continue;
    }
    usable.push_back(&pair);
  }
  if (usable.size() < 2) {
    throw ValueError("train_encoder: need at least 2 usable pairs, have " +
                     std::to_string(usable.size()));
  }

  std::vector<size_t> order(usable.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng split_rng(mix_seed(config.seed, 0xb01d));
  for (size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[split_rng.bounded(i)]);
  }
  size_t n_holdout = static_cast<size_t>(
      std::floor(config.holdout_fraction * static_cast<double>(usable.size())));
  n_holdout = std::min(n_holdout, usable.size() - 1);

  std::vector<EmbeddingPair> holdout, train;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_holdout ? holdout : train).push_back(*usable[order[i]]);
  }

  EncoderParams params = init_encoder(config);
  std::vector<size_t> train_order(train.size());
  std::iota(train_order.begin(), train_order.end(), size_t{0});
  std::vector<EmbeddingPair> batch;
  std::vector<std::vector<double>> wg, bg;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng(mix_seed(config.seed, 0xe40c, static_cast<uint64_t>(epoch)));
    for (size_t i = train_order.size(); i > 1; --i) {
      std::swap(train_order[i - 1], train_order[rng.bounded(i)]);
    }
    double loss_sum = 0.0;
    for (size_t start = 0; start < train_order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(train_order.size(), start + static_cast<size_t>(config.batch_size));
      batch.clear();
      for (size_t i = start; i < end; ++i) batch.push_back(train[train_order[i]]);
      const double loss = encoder_batch_loss(params, batch, &wg, &bg);
      loss_sum += loss * static_cast<double>(batch.size());

      double step_scale = 1.0;
      if (config.max_grad_norm > 0.0) {
        double norm2 = 0.0;
        for (size_t l = 0; l < params.weights.size(); ++l) {
          for (double g : wg[l]) norm2 += g * g;
          for (double g : bg[l]) norm2 += g * g;
        }
        const double norm = std::sqrt(norm2);
        if (norm > config.max_grad_norm) step_scale = config.max_grad_norm / norm;
      }

      for (size_t l = 0; l < params.weights.size(); ++l) {
        for (size_t i = 0; i < params.weights[l].size(); ++i) {
          params.weights[l][i] = static_cast<float>(
              double(params.weights[l][i]) - config.learning_rate * step_scale * wg[l][i]);
        }
        for (size_t i = 0; i < params.biases[l].size(); ++i) {
          params.biases[l][i] = static_cast<float>(
              double(params.biases[l][i]) - config.learning_rate * step_scale * bg[l][i]);
        }
      }
    }
    const double train_loss = loss_sum / static_cast<double>(train.size());
    const double holdout_loss =
        holdout.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : encoder_batch_loss(params, holdout, nullptr, nullptr);
    result.loss_curve.emplace_back(train_loss, holdout_loss);
  }
  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Similarity index.
// ---------------------------------------------------------------------------

SimilarityIndex build_similarity_index(const Vocab& entities,
                                       std::span<const ItemRecord> items) {
  SimilarityIndex index;
  index.dim = kContentEmbeddingDim;

  std::set<std::string> supplied;
  std::map<std::string, const ItemRecord*> by_id;
  for (const auto& item : items) {
    supplied.insert(item.item_id);
    by_id.emplace(item.item_id, &item);
  }

  bool dim_fixed = false;
  for (const auto& [item_id, record] : by_id) {
    const auto entity = entities.lookup(item_entity_name(item_id));
    if (!entity) continue;  // not known to the model
    if (!record->content_embedding) {
      ++index.excluded_missing_embedding;
      continue;
    }
    const auto& emb = *record->content_embedding;
    if (dim_fixed && emb.size() != index.dim) {
      throw ValueError("build_similarity_index: item '" + item_id + "' has " +
                       std::to_string(emb.size()) + "-dim embedding, index has " +
                       std::to_string(index.dim));
    }
    double norm2 = 0.0;
    for (double v : emb) norm2 += v * v;
    if (norm2 < kNormFloor * kNormFloor) {
      ++index.excluded_zero_norm;
      continue;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    SimilarityIndex::Entry entry;
    entry.item_id = item_id;
    entry.entity = *entity;
    entry.unit_embedding.resize(emb.size());
    for (size_t i = 0; i < emb.size(); ++i) {
      entry.unit_embedding[i] = static_cast<float>(emb[i] * inv);
    }
    index.dim = emb.size();
    dim_fixed = true;
    index.entries.push_back(std::move(entry));
  }

  // Known items that never showed up in the supplied records also lack a
  // usable embedding.
  for (const auto& name : entities.names()) {
    const auto item_id = item_id_from_entity(name);
    if (item_id && !supplied.contains(*item_id)) ++index.excluded_missing_embedding;
  }

  if (index.entries.empty()) {
    throw ValueError("build_similarity_index: no known items with usable content embeddings");
  }
  return index;
}

std::pair<const SimilarityIndex::Entry*, double> nearest_known_item(
    const SimilarityIndex& index, std::span<const double> query) {
  if (index.entries.empty()) throw ValueError("nearest_known_item: empty index");
  if (query.size() != index.dim) {
    throw ValueError("nearest_known_item: query has " + std::to_string(query.size()) +
                     " dims, index has " + std::to_string(index.dim));
  }
  const double norm = vector_norm(query);
  if (norm < kNormFloor) throw ValueError("nearest_known_item: zero-norm query");

  std::vector<double> unit(query.size());
  for (size_t i = 0; i < query.size(); ++i) unit[i] = query[i] / norm;

  const SimilarityIndex::Entry* best = nullptr;
  double best_cos = -std::numeric_limits<double>::infinity();
  for (const auto& entry : index.entries) {  // sorted by id; ties keep the first
    double dot = 0.0;
    for (size_t i = 0; i < unit.size(); ++i) dot += double(entry.unit_embedding[i]) * unit[i];
    if (dot > best_cos) {
      best_cos = dot;
      best = &entry;
    }
  }
  return {best, std::clamp(best_cos, -1.0, 1.0)};
}

// ---------------------------------------------------------------------------
// Resolution.
// ---------------------------------------------------------------------------

ColdStartStrategy parse_strategy(std::string_view name) {
  if (name == "known_only") return ColdStartStrategy::KnownOnly;
  if (name == "similarity") return ColdStartStrategy::Similarity;
  if (name == "encoder") return ColdStartStrategy::Encoder;
  throw ConfigError("unknown cold-start strategy '" + std::string(name) +
                    "' (known_only | similarity | encoder)");
}

std::string_view strategy_name(ColdStartStrategy strategy) {
  switch (strategy) {
    case ColdStartStrategy::KnownOnly: return "known_only";
    case ColdStartStrategy::Similarity: return "similarity";
    case ColdStartStrategy::Encoder: return "encoder";
  }
  return "?";
}

ItemTableProvider::ItemTableProvider(std::span<const ItemRecord> items) {
  for (const auto& item : items) {
    if (item.content_embedding) {
      embeddings_.emplace(item.item_id, *item.content_embedding);
    }
  }
}

std::optional<std::vector<double>> ItemTableProvider::embedding_for(
    const std::string& item_id) const {
  const auto it = embeddings_.find(item_id);
  if (it == embeddings_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> hash_stub_embedding(std::string_view text, size_t dim) {
  Rng rng(mix_seed(0x57ab, fnv1a64(text)));
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    norm2 += x * x;
  }
  if (norm2 < kNormFloor) {
    v[0] = 1.0;
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

ColdStartResolver::ColdStartResolver(const ModelParameters& params, const Vocab& entities,
                                     ColdStartStrategy strategy, const SimilarityIndex* index,
                                     const EncoderParams* encoder,
                                     const ContentEmbeddingProvider* provider)
    : params_(&params),
      entities_(&entities),
      strategy_(strategy),
      index_(index),
      encoder_(encoder),
      provider_(provider) {
  if (strategy_ == ColdStartStrategy::Similarity &&
      (index_ == nullptr || index_->entries.empty())) {
    throw ConfigError("similarity strategy requires a non-empty similarity index");
  }
  if (strategy_ == ColdStartStrategy::Encoder && encoder_ == nullptr) {
    throw ConfigError("encoder strategy requires a trained encoder");
  }
}

std::optional<int32_t> ColdStartResolver::entity_of(const std::string& item_id) const {
  return entities_->lookup(item_entity_name(item_id));
}

ResolvedEmbedding ColdStartResolver::resolve(const std::string& item_id) const {
  ResolvedEmbedding resolved;
  if (const auto entity = entity_of(item_id)) {
    resolved.vec = params_->entity_row_d(*entity);
    resolved.provenance = "known";
    return resolved;
  }

  resolved.cold = true;
  if (strategy_ == ColdStartStrategy::KnownOnly) {
    throw ColdStartUnresolvedError("item '" + item_id +
                                   "' is not in the trained vocabulary (strategy known_only)");
  }

  const size_t content_dim =
      strategy_ == ColdStartStrategy::Similarity
          ? index_->dim
          : static_cast<size_t>(encoder_->dims.front());
  std::optional<std::vector<double>> content =
      provider_ != nullptr ? provider_->embedding_for(item_id) : std::nullopt;
  if (!content || content->size() != content_dim || vector_norm(*content) < kNormFloor) {
    content = hash_stub_embedding(item_id, content_dim);
  }

  if (strategy_ == ColdStartStrategy::Similarity) {
    const auto [entry, cos] = nearest_known_item(*index_, *content);
    resolved.vec = params_->entity_row_d(entry->entity);
    resolved.provenance = "matched:" + entry->item_id;
    resolved.matched_cosine = cos;
  } else {
    resolved.vec = encode_content(*encoder_, *content);
    resolved.provenance = "encoded";
  }
  return resolved;
}

// ---------------------------------------------------------------------------
// Diagnostics.
// ---------------------------------------------------------------------------

BridgeReport similarity_histogram(std::span<const EmbeddingPair> pairs) {
  if (pairs.empty()) throw ValueError("similarity_histogram: no pairs");
  BridgeReport report;
  report.pairs = pairs.size();

  std::vector<double> cosines;
  cosines.reserve(pairs.size());
  double sum = 0.0;
  for (const auto& [resolved, truth] : pairs) {
    if (resolved.size() != truth.size()) {
      throw ValueError("similarity_histogram: dimension mismatch");
    }
    const double c = std::clamp(cosine_similarity(resolved, truth), -1.0, 1.0);
    cosines.push_back(c);
    sum += c;
    const int bin = std::clamp(static_cast<int>((c + 1.0) / 2.0 * 50.0), 0, 49);
    ++report.bins[static_cast<size_t>(bin)];
  }
  report.mean = sum / static_cast<double>(cosines.size());

  std::vector<double> sorted = cosines;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();
  report.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return report;
}

BridgeReport evaluate_bridge(const ModelParameters& params, const Vocab& entities,
                             std::span<const ItemRecord> items, ColdStartStrategy strategy,
                             double holdout_fraction, uint64_t seed,
                             const EncoderConfig* encoder_config) {
  if (strategy == ColdStartStrategy::KnownOnly) {
    throw ConfigError("evaluate_bridge: strategy must be similarity or encoder");
  }
  if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0) {
    throw ConfigError("evaluate_bridge: holdout_fraction must be in (0, 1)");
  }

  std::map<std::string, const ItemRecord*> known;
  for (const auto& item : items) {
    if (!item.content_embedding) continue;
    if (vector_norm(*item.content_embedding) < kNormFloor) continue;
    if (entities.lookup(item_entity_name(item.item_id))) known.emplace(item.item_id, &item);
  }
  if (known.size() < 2) {
    throw ValueError("evaluate_bridge: need at least 2 known items with embeddings");
  }

  std::vector<const ItemRecord*> ordered;
  ordered.reserve(known.size());
  for (const auto& [_, rec] : known) ordered.push_back(rec);
  Rng rng(mix_seed(seed, 0xb71d));
  for (size_t i = ordered.size(); i > 1; --i) {
    std::swap(ordered[i - 1], ordered[rng.bounded(i)]);
  }
  size_t n_holdout = static_cast<size_t>(
      std::floor(holdout_fraction * static_cast<double>(ordered.size())));
  n_holdout = std::clamp<size_t>(n_holdout, 1, ordered.size() - 1);

  std::vector<ItemRecord> kept;
  std::vector<const ItemRecord*> held;
  for (size_t i = 0; i < ordered.size(); ++i) {
    if (i < n_holdout) {
      held.push_back(ordered[i]);
    } else {
      kept.push_back(*ordered[i]);
    }
  }

  SimilarityIndex index;
  EncoderParams encoder;
  if (strategy == ColdStartStrategy::Similarity) {
    index = build_similarity_index(entities, kept);
  } else {
    EncoderConfig config = encoder_config != nullptr ? *encoder_config : EncoderConfig{};
    config.output_dim = params.dim;
    config.seed = seed;
    std::vector<EmbeddingPair> pairs;
    pairs.reserve(kept.size());
    for (const auto& rec : kept) {
      const auto entity = entities.lookup(item_entity_name(rec.item_id));
      pairs.emplace_back(*rec.content_embedding, params.entity_row_d(*entity));
    }
    encoder = train_encoder(pairs, config).params;
  }

  std::vector<EmbeddingPair> eval_pairs;
  std::vector<BridgeReport::Entry> entries;
  for (const ItemRecord* rec : held) {
    const auto entity = entities.lookup(item_entity_name(rec->item_id));
    const std::vector<double> truth = params.entity_row_d(*entity);
    BridgeReport::Entry entry;
    entry.item_id = rec->item_id;
    std::vector<double> resolved;
    if (strategy == ColdStartStrategy::Similarity) {
      const auto [match, cos] = nearest_known_item(index, *rec->content_embedding);
      (void)cos;
      resolved = params.entity_row_d(match->entity);
      entry.matched_id = match->item_id;
    } else {
      resolved = encode_content(encoder, *rec->content_embedding);
    }
    entry.cosine = std::clamp(cosine_similarity(resolved, truth), -1.0, 1.0);
    entries.push_back(std::move(entry));
    eval_pairs.emplace_back(std::move(resolved), truth);
  }

  BridgeReport report = similarity_histogram(eval_pairs);
  report.strategy = std::string(strategy_name(strategy));
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
  report.entries = std::move(entries);
  return report;
}

std::string bridge_report_tsv(const BridgeReport& report) {
  std::string out = "item_id\tstrategy\tmatched_id\tcosine\n";
  char buf[64];
  for (const auto& entry : report.entries) {
    std::snprintf(buf, sizeof(buf), "%.6f", entry.cosine);
    out += entry.item_id;
    out += '\t';
    out += report.strategy;
    out += '\t';
    out += entry.matched_id;
    out += '\t';
    out += buf;
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const BridgeReport& report) {
  std::string out = "bin_low,bin_high,count\n";
  for (size_t b = 0; b < report.bins.size(); ++b) {
    const double low = -1.0 + 2.0 * static_cast<double>(b) / 50.0;
    const double high = -1.0 + 2.0 * static_cast<double>(b + 1) / 50.0;
    out += format_double(low);
    out += ',';
    out += format_double(high);
    out += ',';
    out += std::to_string(report.bins[b]);
    out += '\n';
  }
  return out;
}

}  // namespace ripplerec
