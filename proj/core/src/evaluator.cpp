#include "pcmp/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>

#include "pcmp/errors.hpp"

namespace pcmp {

using nlohmann::json;

double auc(std::span<const double> scores_pos, std::span<const double> scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) {
    throw Error(ErrorCode::EmptySide, "AUC needs at least one positive and one negative score");
  }
  // Sort negatives once; each positive counts negatives strictly below it
  // plus half of the ties.
  std::vector<double> neg(scores_neg.begin(), scores_neg.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double s : scores_pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
    const auto hi = std::upper_bound(lo, neg.end(), s);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(scores_pos.size()) * static_cast<double>(neg.size()));
}

std::vector<double> outfit_softmax(const ModelParams& params, const ItemTable& items,
                                   std::span<const std::size_t> members) {
  return forward_outfit(params, items.features(members)).probs;
}

double outfit_score(const ModelParams& params, const ItemTable& items, std::span<const std::size_t> members) {
  return compat_probability(outfit_softmax(params, items, members));
}

int predicted_class(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

int predicted_positive_cluster(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin() + 1, probs.end()) - probs.begin());
}

double eval_cp(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits) {
  std::vector<double> pos, neg;
  for (const auto& o : outfits) (o.label == 1 ? pos : neg).push_back(outfit_score(params, items, o.items));
  return auc(pos, neg);
}

std::vector<int> fitb_picks(const ModelParams& params, const ItemTable& items, std::span<const FitbQuery> queries) {
  std::vector<int> picks;
  picks.reserve(queries.size());
  for (const auto& q : queries) {
    int best = 0;
    double best_score = -1.0;
    std::vector<std::size_t> completed = q.partial;
    completed.push_back(0);
    for (int c = 0; c < 4; ++c) {
      completed.back() = q.candidates[c];
      const double s = outfit_score(params, items, completed);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    picks.push_back(best);
  }
  return picks;
}

double eval_fitb(const ModelParams& params, const ItemTable& items, std::span<const FitbQuery> queries) {
  if (queries.empty()) return 0.0;
  const auto picks = fitb_picks(params, items, queries);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) correct += picks[i] == queries[i].answer;
  return static_cast<double>(correct) / static_cast<double>(queries.size());
}

double cluster_agreement(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::SizeMismatch, "labelings differ in length");
  auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, n] : table) index += pairs(n);
  for (const auto& [_, n] : rows) sum_rows += pairs(n);
  for (const auto& [_, n] : cols) sum_cols += pairs(n);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial in the same way
  return (index - expected) / (max_index - expected);
}

EvalReport evaluate(const ModelParams& params, const Dataset& data) {
  EvalReport r;
  r.n_outfits = data.outfits.size();
  r.n_queries = data.fitb.size();
  std::vector<double> pos, neg;
  std::vector<int> truth, predicted;
  for (const auto& o : data.outfits) {
    const auto probs = outfit_softmax(params, data.items, o.items);
    const double s = compat_probability(probs);
    (o.label == 1 ? pos : neg).push_back(s);
    if (o.label == 1 && o.template_id != kNoTemplate) {
      truth.push_back(o.template_id);
      predicted.push_back(predicted_positive_cluster(probs));
    }
  }
  if (!pos.empty() && !neg.empty()) r.cp_auc = auc(pos, neg);
  if (!data.fitb.empty()) r.fitb_accuracy = eval_fitb(params, data.items, data.fitb);
  if (!truth.empty()) r.ari = cluster_agreement(predicted, truth);
  return r;
}

json to_json(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {
      {"cp_auc", opt(report.cp_auc)},
      {"fitb_accuracy", opt(report.fitb_accuracy)},
      {"n_outfits", report.n_outfits},
      {"n_queries", report.n_queries},
  };
  if (report.ari) j["ari"] = *report.ari;
  return j;
}

void export_embeddings(const ModelParams& params, const ItemTable& items, std::span<const Outfit> outfits,
                       const ClusterState* state, const std::filesystem::path& path) {
  if (state && state->n_clusters() != params.config.n_classes) {
    throw Error(ErrorCode::SizeMismatch, "cluster state has " + std::to_string(state->n_clusters()) +
                                             " clusters, model has " + std::to_string(params.config.n_classes) +
                                             " classes");
  }
  Matrix emb(outfits.size(), params.config.embed_dim);
  std::vector<int> predicted(outfits.size()), y(outfits.size());
  for (std::size_t i = 0; i < outfits.size(); ++i) {
    const auto f = forward_outfit(params, items.features(outfits[i].items));
    std::copy(f.embedding.begin(), f.embedding.end(), emb.row(i).begin());
    predicted[i] = predicted_class(f.probs);
    y[i] = outfits[i].label;
  }
  std::optional<PseudoLabels> pseudo;
  if (state) pseudo = assign_pseudo_labels(emb, y, *state);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "outfit_id";
  for (std::size_t c = 0; c < emb.cols(); ++c) out << ",e" << c;
  out << ",y,predicted_class,pseudo_label\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < outfits.size(); ++i) {
    out << outfits[i].id;
    for (double v : emb.row(i)) out << ',' << v;
    out << ',' << y[i] << ',' << predicted[i] << ',';
    if (pseudo) out << pseudo->labels[i];
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

}  // namespace pcmp
