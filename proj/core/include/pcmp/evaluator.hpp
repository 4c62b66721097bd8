#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pcmp/clusterer.hpp"
#include "pcmp/model.hpp"
#include "pcmp/outfit_data.hpp"

namespace pcmp {

/// Mann-Whitney AUC: share of (pos, neg) pairs ranked correctly, ties 0.5.
/// Throws EmptySide when either list is empty.
double auc(std::span<const double> scores_pos, std::span<const double> scores_neg);

std::vector<double> outfit_softmax(const ModelParams& params, const ItemTable& items,
                                   std::span<const std::size_t> members);
double outfit_score(const ModelParams& params, const ItemTable& items, std::span<const std::size_t> members);

/// Argmax over all classes, lowest index on ties.
int predicted_class(std::span<const double> probs);
/// Argmax over the positive classes 1..C, lowest index on ties.
int predicted_positive_cluster(std::span<const double> probs);

double eval_cp(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits);

/// Candidate index chosen per query (highest compatibility, lowest index on ties).
std::vector<int> fitb_picks(const ModelParams& params, const ItemTable& items, std::span<const FitbQuery> queries);
double eval_fitb(const ModelParams& params, const ItemTable& items, std::span<const FitbQuery> queries);

/// Adjusted Rand index between two labelings of the same samples.
double cluster_agreement(std::span<const int> a, std::span<const int> b);

struct EvalReport {
  std::optional<double> cp_auc;
  std::optional<double> fitb_accuracy;
  std::size_t n_outfits = 0;
  std::size_t n_queries = 0;
  std::optional<double> ari;  // vs. synthetic template ids, when present
};

/// CP AUC over the labelled outfits, FITB accuracy over the queries and,
/// when positives carry template ids, ARI of their predicted positive cluster.
EvalReport evaluate(const ModelParams& params, const Dataset& data);
nlohmann::json to_json(const EvalReport& report);

/// CSV: outfit_id, e0..e{k-1}, y, predicted_class, pseudo_label (blank
/// without a cluster state). Throws SizeMismatch if the state's cluster count
/// differs from the model's classes and IoError on write failure.
void export_embeddings(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits,
                       const ClusterState* state, const std::filesystem::path& path);

}  // namespace pcmp
