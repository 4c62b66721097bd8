#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pcmp/layers.hpp"
#include "pcmp/matrix.hpp"
#include "pcmp/relgraph.hpp"

namespace pcmp {

class ItemTable;

struct ModelConfig {
  std::size_t input_dim = 9;
  std::size_t hidden = 60;
  std::size_t embed_dim = 20;
  std::size_t n_classes = 5;  // C + 1; class 0 is the incompatible cluster
  std::size_t sage_layers = 3;
  GraphKind graph_kind = GraphKind::Relation;

  bool operator==(const ModelConfig&) const = default;
};

/// Item-feature standardisation followed by the embedding layer Z, the
/// GraphSage stack, a linear 20-D projection, global max pooling and the
/// classifier head.
struct ModelParams {
  ModelConfig config;
  std::vector<double> feature_shift;  // fixed, not trained
  std::vector<double> feature_scale;  // fixed, not trained
  DenseLayer embed;
  std::vector<DenseLayer> sage;
  DenseLayer proj;
  DenseLayer head;
};

/// Uniformly initialised parameters with identity standardisation.
ModelParams make_model(const ModelConfig& config, std::uint64_t seed);
ModelParams make_model(const ModelConfig& config, std::mt19937_64& rng);
/// Same shapes, every tensor zero (also used for gradients and Adam moments).
ModelParams zeros_like(const ModelParams& params);

/// Sets feature_shift/scale to the per-dimension mean and standard deviation
/// of the table's features (scale 1 for constant dimensions).
void fit_standardization(ModelParams& params, const ItemTable& items);

/// Visits every tensor in checkpoint order: feature_shift, feature_scale,
/// embed.W, embed.b, sage{k}.W, sage{k}.b, proj.W, proj.b, head.W, head.b.
/// `trainable` is false for the standardisation vectors.
struct TensorRef {
  std::string name;
  std::span<double> values;
  std::vector<std::size_t> dims;
  bool trainable;
};
std::vector<TensorRef> tensors(ModelParams& params);
std::vector<TensorRef> tensors(const ModelParams& params);  // values alias const data

void check_same_shape(const ModelParams& a, const ModelParams& b);

std::vector<double> softmax(std::span<const double> logits);

/// Sum of the positive-class probabilities.
double compat_probability(std::span<const double> softmax_scores);

/// Node features for an outfit (rows of raw item features) under the
/// configured graph kind.
RelationGraph build_graph(const ModelParams& params, const Matrix& item_features);

/// Max-pooled 20-D embedding of a graph whose node features are already set.
std::vector<double> graph_embed(const RelationGraph& graph, const ModelParams& params);
/// Softmax over C + 1 classes.
std::vector<double> predict(const RelationGraph& graph, const ModelParams& params);

/// Everything the backward pass needs from one outfit forward pass.
struct OutfitForward {
  std::shared_ptr<const GraphStructure> graph;
  std::vector<std::size_t> order;  // canonical item order applied before building the graph
  Matrix x;                        // standardised features, canonical order
  Matrix z;                        // Z(x)
  Matrix h0;                       // node features
  std::vector<SageCache> sage;
  std::vector<Matrix> hidden;      // output of each sage layer
  Matrix projected;                // per-node 20-D
  std::vector<std::size_t> argmax; // node achieving the max per dimension
  std::vector<double> embedding;
  std::vector<double> logits;
  std::vector<double> probs;
};

/// Items are reordered lexicographically by feature first, so the result
/// does not depend on the order the outfit lists them in.
OutfitForward forward_outfit(const ModelParams& params, const Matrix& item_features);

/// Accumulates dL/dparams given dL/dlogits.
void backward_outfit(const ModelParams& params, const OutfitForward& fwd,
                     std::span<const double> dlogits, ModelParams& grads);

}  // namespace pcmp
