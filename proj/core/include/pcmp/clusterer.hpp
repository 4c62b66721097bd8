#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pcmp/matrix.hpp"
#include "pcmp/model.hpp"
#include "pcmp/outfit_data.hpp"

namespace pcmp {

/// Rows scaled to unit L2 norm; zero rows stay zero.
Matrix normalize_rows(const Matrix& m);

/// 1 - cos(a, b) for unit vectors.
double cosine_distance(std::span<const double> a, std::span<const double> b);

struct KMeansCosineResult {
  Matrix centroids;                     // k unit rows
  std::vector<std::size_t> assignment;  // per point
  std::vector<double> objective_trace;  // sum of (1 - cos) after each assignment step
  int iterations = 0;
};

/// Spherical K-means. `init` (k rows) seeds the centroids and keeps cluster
/// identity across calls; otherwise k-means++ seeded by `seed`. An emptied
/// cluster steals the point farthest from its own centroid.
KMeansCosineResult kmeans_cosine(const Matrix& embeddings, std::size_t k, std::uint64_t seed,
                                 const Matrix* init = nullptr, int max_iterations = 100);

/// Clusters, their compatible ratios and labels. Exactly one cluster has z = 0.
struct ClusterState {
  Matrix centroids;
  std::vector<std::size_t> m_pos;
  std::vector<std::size_t> m_neg;
  std::vector<double> ratios;  // m_pos / m_neg, +inf when m_neg == 0 < m_pos
  std::vector<int> z;

  std::size_t n_clusters() const noexcept { return z.size(); }
  std::size_t negative_cluster() const;
};

struct ClusterLabels {
  std::vector<double> ratios;
  std::vector<int> z;
  std::vector<std::size_t> ranking;  // cluster indices, best ratio first
};

/// Ranks clusters by ratio (ties: more positives, then lower index); the top
/// C get z = 1 and the last one z = 0.
ClusterLabels assign_cluster_labels(std::span<const std::size_t> m_pos,
                                    std::span<const std::size_t> m_neg, std::size_t C);

struct PseudoLabels {
  std::vector<int> labels;         // in 0..C
  std::vector<double> distances;   // cosine distance to the chosen centroid
};

/// Nearest centroid among the clusters whose z matches the sample's label.
PseudoLabels assign_pseudo_labels(const Matrix& embeddings, std::span<const int> y,
                                  const ClusterState& state);

bool pseudo_labels_consistent(const PseudoLabels& pseudo, std::span<const int> y,
                              const ClusterState& state);

/// Max-pooled embeddings of the given outfits, one row each.
Matrix embed_outfits(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits);

struct PseudoLabelRound {
  ClusterState state;
  PseudoLabels pseudo;
  std::vector<std::size_t> assignment;  // raw K-means assignment
};

/// Embed every outfit, cluster into C + 1 groups (seeded by `prev` when
/// given), label the clusters, then assign pseudo labels. Clusters are
/// reordered so the negative one is index 0 and index equals head class.
PseudoLabelRound generate_pseudo_labels(const ModelParams& params, const ItemTable& items,
                                        std::span<const Outfit> outfits, std::size_t C,
                                        std::uint64_t seed, const ClusterState* prev = nullptr);

/// Report with per-cluster size, counts, ratio, z and centroid, plus
/// per-sample outfit id, label, cluster, pseudo label and distance.
nlohmann::json cluster_report(const PseudoLabelRound& round, std::span<const Outfit> outfits);
nlohmann::json cluster_state_to_json(const ClusterState& state);
ClusterState cluster_state_from_json(const nlohmann::json& report);

}  // namespace pcmp
