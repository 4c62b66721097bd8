#include "pcmp/clusterer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pcmp/errors.hpp"
#include "pcmp/layers.hpp"

namespace pcmp {

using nlohmann::json;

Matrix normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double norm = std::sqrt(dot(row, row));
    if (norm > 0.0) {
      for (double& v : row) v /= norm;
    }
  }
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) { return 1.0 - dot(a, b); }

namespace {

std::size_t nearest(std::span<const double> x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = cosine_distance(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

Matrix kmeanspp(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(k, x.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += d2[i];
      if (total > 0.0) {
        pick = std::discrete_distribution<std::size_t>(d2.begin(), d2.end())(rng);
      } else {
        pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      }
    }
    std::copy(x.row(pick).begin(), x.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      // Squared chord length on the unit sphere.
      d2[i] = std::min(d2[i], std::max(0.0, 2.0 * cosine_distance(x.row(i), centroids.row(c))));
    }
  }
  return centroids;
}

}  // namespace

KMeansCosineResult kmeans_cosine(const Matrix& embeddings, std::size_t k, std::uint64_t seed,
                                 const Matrix* init, int max_iterations) {
  const std::size_t n = embeddings.rows();
  if (k == 0 || n < k) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(n) + " points cannot form " + std::to_string(k) + " clusters");
  }
  const Matrix x = normalize_rows(embeddings);
  KMeansCosineResult res;
  if (init) {
    if (init->rows() != k || init->cols() != x.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "initial centroids do not match k x dim");
    }
    res.centroids = normalize_rows(*init);
  } else {
    std::mt19937_64 rng(seed);
    res.centroids = kmeanspp(x, k, rng);
  }

  std::vector<std::size_t> previous;
  res.assignment.assign(n, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = nearest(x.row(i), res.centroids);

    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : res.assignment) ++sizes[a];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[res.assignment[i]] < 2) continue;
        const double d = cosine_distance(x.row(i), res.centroids.row(res.assignment[i]));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --sizes[res.assignment[far]];
      res.assignment[far] = c;
      sizes[c] = 1;
      std::copy(x.row(far).begin(), x.row(far).end(), res.centroids.row(c).begin());
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) objective += cosine_distance(x.row(i), res.centroids.row(res.assignment[i]));
    res.objective_trace.push_back(objective);
    res.iterations = iter + 1;
    if (res.assignment == previous) break;
    previous = res.assignment;

    Matrix sums(k, x.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto s = sums.row(res.assignment[i]);
      const auto xi = x.row(i);
      for (std::size_t c = 0; c < xi.size(); ++c) s[c] += xi[c];
    }
    const Matrix normed = normalize_rows(sums);
    for (std::size_t c = 0; c < k; ++c) {
      const auto row = normed.row(c);
      if (dot(row, row) > 0.0) std::copy(row.begin(), row.end(), res.centroids.row(c).begin());
    }
  }
  return res;
}

std::size_t ClusterState::negative_cluster() const {
  const auto it = std::find(z.begin(), z.end(), 0);
  if (it == z.end()) throw Error(ErrorCode::NoEligibleCluster, "cluster state has no negative cluster");
  return static_cast<std::size_t>(it - z.begin());
}

ClusterLabels assign_cluster_labels(std::span<const std::size_t> m_pos, std::span<const std::size_t> m_neg,
                                    std::size_t C) {
  const std::size_t k = m_pos.size();
  if (m_neg.size() != k) throw Error(ErrorCode::SizeMismatch, "m_pos and m_neg differ in length");
  if (k != C + 1) throw Error(ErrorCode::SizeMismatch, "expected C + 1 = " + std::to_string(C + 1) + " clusters");
  ClusterLabels out;
  out.ratios.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (m_neg[c] == 0) {
      out.ratios[c] = m_pos[c] > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
      out.ratios[c] = static_cast<double>(m_pos[c]) / static_cast<double>(m_neg[c]);
    }
  }
  out.ranking.resize(k);
  std::iota(out.ranking.begin(), out.ranking.end(), 0);
  std::sort(out.ranking.begin(), out.ranking.end(), [&](std::size_t a, std::size_t b) {
    if (out.ratios[a] != out.ratios[b]) return out.ratios[a] > out.ratios[b];
    if (m_pos[a] != m_pos[b]) return m_pos[a] > m_pos[b];
    return a < b;
  });
  out.z.assign(k, 1);
  out.z[out.ranking.back()] = 0;
  return out;
}

PseudoLabels assign_pseudo_labels(const Matrix& embeddings, std::span<const int> y, const ClusterState& state) {
  if (embeddings.rows() != y.size()) throw Error(ErrorCode::SizeMismatch, "embeddings and labels differ in count");
  const Matrix x = normalize_rows(embeddings);
  PseudoLabels out;
  out.labels.resize(y.size());
  out.distances.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < state.n_clusters(); ++c) {
      if (state.z[c] != y[i]) continue;
      const double d = cosine_distance(x.row(i), state.centroids.row(c));
      if (best < 0 || d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (best < 0) throw Error(ErrorCode::NoEligibleCluster, "no cluster carries label " + std::to_string(y[i]));
    out.labels[i] = best;
    out.distances[i] = best_d;
  }
  return out;
}

bool pseudo_labels_consistent(const PseudoLabels& pseudo, std::span<const int> y, const ClusterState& state) {
  if (std::count(state.z.begin(), state.z.end(), 0) != 1) return false;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const int c = pseudo.labels[i];
    if (c < 0 || static_cast<std::size_t>(c) >= state.n_clusters() || state.z[c] != y[i]) return false;
  }
  return true;
}

Matrix embed_outfits(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits) {
  Matrix out(outfits.size(), params.config.embed_dim);
  for (std::size_t i = 0; i < outfits.size(); ++i) {
    const auto f = forward_outfit(params, items.features(outfits[i].items));
    std::copy(f.embedding.begin(), f.embedding.end(), out.row(i).begin());
  }
  return out;
}

PseudoLabelRound generate_pseudo_labels(const ModelParams& params, const ItemTable& items,
                                        std::span<const Outfit> outfits, std::size_t C, std::uint64_t seed,
                                        const ClusterState* prev) {
  if (C < 1) throw Error(ErrorCode::InvalidArgument, "C must be >= 1");
  const Matrix emb = embed_outfits(params, items, outfits);
  const Matrix* init = prev && prev->centroids.rows() == C + 1 ? &prev->centroids : nullptr;
  auto km = kmeans_cosine(emb, C + 1, seed, init);

  PseudoLabelRound round;
  round.assignment = std::move(km.assignment);
  round.state.centroids = std::move(km.centroids);
  round.state.m_pos.assign(C + 1, 0);
  round.state.m_neg.assign(C + 1, 0);
  std::vector<int> y(outfits.size());
  for (std::size_t i = 0; i < outfits.size(); ++i) {
    y[i] = outfits[i].label;
    (y[i] == 1 ? round.state.m_pos : round.state.m_neg)[round.assignment[i]] += 1;
  }
  auto labels = assign_cluster_labels(round.state.m_pos, round.state.m_neg, C);
  round.state.ratios = std::move(labels.ratios);
  round.state.z = std::move(labels.z);
  // Cluster index doubles as the head's class, and class 0 is "incompatible":
  // rotate the negative cluster to the front, positives keep their order.
  const std::size_t neg = round.state.negative_cluster();
  if (neg != 0) {
    std::vector<std::size_t> order{neg};
    for (std::size_t c = 0; c <= C; ++c) {
      if (c != neg) order.push_back(c);
    }
    std::vector<std::size_t> rank(C + 1);
    for (std::size_t c = 0; c <= C; ++c) rank[order[c]] = c;
    ClusterState s;
    s.centroids = Matrix(C + 1, round.state.centroids.cols());
    for (std::size_t c = 0; c <= C; ++c) {
      const auto src = round.state.centroids.row(order[c]);
      std::copy(src.begin(), src.end(), s.centroids.row(c).begin());
      s.m_pos.push_back(round.state.m_pos[order[c]]);
      s.m_neg.push_back(round.state.m_neg[order[c]]);
      s.ratios.push_back(round.state.ratios[order[c]]);
      s.z.push_back(round.state.z[order[c]]);
    }
    for (auto& a : round.assignment) a = rank[a];
    round.state = std::move(s);
  }
  round.pseudo = assign_pseudo_labels(emb, y, round.state);
  return round;
}

namespace {

json ratio_json(double r) { return std::isinf(r) ? json("inf") : json(r); }

double ratio_from(const json& j) {
  return j.is_string() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

}  // namespace

json cluster_state_to_json(const ClusterState& state) {
  json clusters = json::array();
  for (std::size_t c = 0; c < state.n_clusters(); ++c) {
    const auto row = state.centroids.row(c);
    clusters.push_back({
        {"index", c},
        {"size", state.m_pos[c] + state.m_neg[c]},
        {"m_pos", state.m_pos[c]},
        {"m_neg", state.m_neg[c]},
        {"ratio", ratio_json(state.ratios[c])},
        {"z", state.z[c]},
        {"centroid", std::vector<double>(row.begin(), row.end())},
    });
  }
  return {{"clusters", clusters}};
}

json cluster_report(const PseudoLabelRound& round, std::span<const Outfit> outfits) {
  json report = cluster_state_to_json(round.state);
  json samples = json::array();
  for (std::size_t i = 0; i < outfits.size(); ++i) {
    samples.push_back({
        {"outfit_id", outfits[i].id},
        {"label", outfits[i].label},
        {"cluster", round.assignment[i]},
        {"pseudo_label", round.pseudo.labels[i]},
        {"distance", round.pseudo.distances[i]},
    });
  }
  report["samples"] = std::move(samples);
  return report;
}

ClusterState cluster_state_from_json(const json& report) {
  try {
    ClusterState s;
    const auto& clusters = report.at("clusters");
    const std::size_t k = clusters.size();
    if (k == 0) throw Error(ErrorCode::SchemaError, "cluster report has no clusters");
    const std::size_t dim = clusters.at(0).at("centroid").size();
    s.centroids = Matrix(k, dim);
    for (std::size_t c = 0; c < k; ++c) {
      const auto& j = clusters.at(c);
      const auto centroid = j.at("centroid").get<std::vector<double>>();
      if (centroid.size() != dim) throw Error(ErrorCode::SchemaError, "ragged centroids");
      std::copy(centroid.begin(), centroid.end(), s.centroids.row(c).begin());
      s.m_pos.push_back(j.at("m_pos").get<std::size_t>());
      s.m_neg.push_back(j.at("m_neg").get<std::size_t>());
      s.ratios.push_back(ratio_from(j.at("ratio")));
      s.z.push_back(j.at("z").get<int>());
    }
    if (std::count(s.z.begin(), s.z.end(), 0) != 1) {
      throw Error(ErrorCode::SchemaError, "cluster report must have exactly one z = 0 cluster");
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("cluster report: ") + e.what());
  }
}

}  // namespace pcmp
