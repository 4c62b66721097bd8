#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pcmp/clusterer.hpp"
#include "pcmp/model.hpp"
#include "pcmp/outfit_data.hpp"

namespace pcmp {

enum class LossKind {
  Joint,   // pseudo-label cross-entropy plus lambda-weighted local loss
  Binary,  // two-class head, plain binary cross-entropy, no clustering
};

struct TrainConfig {
  std::size_t C = 4;
  double lambda = 0.5;
  int recluster_period = 25;
  /// Epochs of plain compatibility training before the first clustering
  /// round; rounds then fall at warmup + k * recluster_period. 0 clusters the
  /// untrained model.
  int warmup_epochs = 25;
  int epochs = 100;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  GraphKind graph_kind = GraphKind::Relation;
  LossKind loss = LossKind::Joint;
  double replace_fraction = kDefaultReplaceFraction;

  std::size_t hidden = 60;
  std::size_t embed_dim = 20;
  std::size_t sage_layers = 3;

  int eval_every = 0;          // validation cadence in epochs; 0 = recluster_period
  bool zero_init_head = false; // uniform initial predictions
};

void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);

struct BatchLog {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;  // l1 + lambda * l2, means over the batch's pairs
  std::size_t pairs = 0;
};

struct EpochLog {
  int epoch = 0;
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  std::size_t local_pairs = 0;
  std::size_t skipped_local = 0;
  std::optional<double> val_auc;
  std::optional<double> val_fitb;
};

struct RoundLog {
  int epoch = 0;
  std::vector<int> z;
  std::vector<std::size_t> m_pos;
  std::vector<std::size_t> m_neg;
  std::size_t negative_clusters = 0;
  bool consistent = false;  // every pseudo label satisfies z[label] == y
};

struct TrainReport {
  std::vector<EpochLog> epochs;
  std::vector<BatchLog> batches;
  std::vector<RoundLog> rounds;
  std::size_t skipped_local = 0;
};

nlohmann::json to_json(const TrainReport& report);

struct TrainResult {
  ModelParams params;
  TrainReport report;
  /// Outfits clustered each round: the training outfits, plus one sampled
  /// negative per positive when the dataset has no negatives of its own.
  std::vector<Outfit> clustering_set;
  /// Last pseudo-label round (empty state for the binary baseline).
  PseudoLabelRound final_round;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Joint training: pseudo labels regenerated at epoch warmup_epochs and every
/// recluster_period epochs after; each epoch pairs every positive with a
/// fresh sampled negative. Deterministic given the seed.
TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* validation = nullptr,
                  const EpochCallback& on_epoch = {});

/// Two-class binary cross-entropy baseline honouring config.graph_kind.
TrainResult train_binary_baseline(const Dataset& data, TrainConfig config, const Dataset* validation = nullptr,
                                  const EpochCallback& on_epoch = {});

}  // namespace pcmp
