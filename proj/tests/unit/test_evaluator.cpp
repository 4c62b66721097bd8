#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "fixtures.hpp"
#include "pcmp/clusterer.hpp"
#include "pcmp/errors.hpp"
#include "pcmp/evaluator.hpp"
#include "pcmp/synthetic.hpp"

using namespace pcmp;

namespace {

const Dataset& eval_data() {
  static const Dataset d = [] {
    SyntheticConfig s;
    s.n_outfits = 80;
    s.seed = 9;
    return generate_synthetic(s);
  }();
  return d;
}

ModelParams constant_model() {
  auto p = make_model(ModelConfig{}, 1);
  p.head.W.fill(0.0);
  p.head.b = {0.3, -0.1, 0.2, 0.0, 0.1};
  return p;
}

// Random weights on standardised inputs, so scores stay off the 0/1 clamp.
ModelParams fitted_model(std::uint64_t seed) {
  auto p = make_model(ModelConfig{}, seed);
  fit_standardization(p, eval_data().items);
  return p;
}

// Pair-counting form of the adjusted Rand index.
double ari_by_pairs(const std::vector<int>& a, const std::vector<int>& b) {
  double same_both = 0, same_a = 0, same_b = 0, diff_both = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) ++same_both;
      else if (sa) ++same_a;
      else if (sb) ++same_b;
      else ++diff_both;
    }
  }
  const double num = 2.0 * (same_both * diff_both - same_a * same_b);
  const double den = (same_both + same_a) * (same_a + diff_both) + (same_both + same_b) * (same_b + diff_both);
  return num / den;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Auc, Examples) {
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.7, 0.1}), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.6, 0.8}, std::vector<double>{0.7}), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5}, std::vector<double>{0.5}), 0.5);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1}, std::vector<double>{0.5, 0.6}), 0.0);
}

TEST(Auc, EmptySide) {
  try {
    auc(std::vector<double>{}, std::vector<double>{0.5});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySide);
  }
  EXPECT_THROW(auc(std::vector<double>{0.5}, std::vector<double>{}), Error);
}

TEST(Auc, MatchesPairEnumeration) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 20);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> p(1 + t % 13), n(1 + t % 7);
    for (double& v : p) v = u(rng) / 20.0;
    for (double& v : n) v = u(rng) / 20.0;
    double s = 0;
    for (double a : p)
      for (double b : n) s += a > b ? 1.0 : a == b ? 0.5 : 0.0;
    EXPECT_NEAR(auc(p, n), s / static_cast<double>(p.size() * n.size()), 1e-12);
    // flipped labels
    EXPECT_NEAR(auc(n, p), 1.0 - auc(p, n), 1e-12);
    // strictly monotone transform leaves it unchanged
    auto q = p, m = n;
    for (double& v : q) v = std::exp(3 * v);
    for (double& v : m) v = std::exp(3 * v);
    EXPECT_DOUBLE_EQ(auc(q, m), auc(p, n));
  }
}

TEST(EvalCp, ConstantModelIsHalf) {
  const auto p = constant_model();
  EXPECT_DOUBLE_EQ(eval_cp(p, eval_data().items, eval_data().outfits), 0.5);
}

TEST(EvalCp, FlippedLabels) {
  const auto p = fitted_model(2);
  auto flipped = eval_data().outfits;
  for (auto& o : flipped) o.label = 1 - o.label;
  const double a = eval_cp(p, eval_data().items, eval_data().outfits);
  EXPECT_NEAR(eval_cp(p, eval_data().items, flipped), 1.0 - a, 1e-12);
}

TEST(EvalFitb, ConstantModelPicksFirst) {
  const auto& d = eval_data();
  const auto picks = fitb_picks(constant_model(), d.items, d.fitb);
  double at_zero = 0;
  for (std::size_t i = 0; i < picks.size(); ++i) {
    EXPECT_EQ(picks[i], 0);
    at_zero += d.fitb[i].answer == 0;
  }
  EXPECT_DOUBLE_EQ(eval_fitb(constant_model(), d.items, d.fitb), at_zero / static_cast<double>(d.fitb.size()));
}

TEST(EvalFitb, MatchesBruteForceScorer) {
  const auto& d = eval_data();
  const auto p = fitted_model(3);
  const auto picks = fitb_picks(p, d.items, d.fitb);
  std::size_t correct = 0;
  for (std::size_t q = 0; q < d.fitb.size(); ++q) {
    int best = 0;
    double best_s = -1;
    for (int c = 0; c < 4; ++c) {
      auto members = d.fitb[q].partial;
      members.push_back(d.fitb[q].candidates[c]);
      const auto f = forward_outfit(p, d.items.features(members));
      double s = 0;
      for (std::size_t k = 1; k < f.probs.size(); ++k) s += f.probs[k];
      if (s > best_s) best_s = s, best = c;
    }
    EXPECT_EQ(picks[q], best);
    correct += best == d.fitb[q].answer;
  }
  EXPECT_DOUBLE_EQ(eval_fitb(p, d.items, d.fitb), static_cast<double>(correct) / static_cast<double>(d.fitb.size()));
}

TEST(EvalFitb, SingleQueryCorrect) {
  const auto& d = eval_data();
  const auto p = fitted_model(5);
  FitbQuery q = d.fitb[0];
  const int pick = fitb_picks(p, d.items, std::span(&q, 1))[0];
  q.answer = pick;
  EXPECT_DOUBLE_EQ(eval_fitb(p, d.items, std::span(&q, 1)), 1.0);
}

TEST(PredictedClass, TieRules) {
  EXPECT_EQ(predicted_class(std::vector<double>{.2, .2, .2, .2, .2}), 0);
  EXPECT_EQ(predicted_positive_cluster(std::vector<double>{.6, .1, .1, .1, .1}), 1);
  EXPECT_EQ(predicted_positive_cluster(std::vector<double>{.2, .1, .3, .1, .3}), 2);
}

TEST(Ari, Examples) {
  const std::vector<int> a{0, 0, 1, 1, 2, 2, 3, 3};
  const std::vector<int> relabelled{5, 5, 9, 9, 1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(cluster_agreement(a, a), 1.0);
  EXPECT_DOUBLE_EQ(cluster_agreement(a, relabelled), 1.0);
  EXPECT_DOUBLE_EQ(cluster_agreement(std::vector<int>(8, 1), a), 0.0);
  EXPECT_THROW(cluster_agreement(a, std::vector<int>{1}), Error);
}

TEST(Ari, MatchesPairCountingOracle) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> a(60), b(60);
    for (auto& v : a) v = static_cast<int>(rng() % 4);
    for (std::size_t i = 0; i < 60; ++i) b[i] = rng() % 3 == 0 ? static_cast<int>(rng() % 5) : a[i];
    EXPECT_NEAR(cluster_agreement(a, b), ari_by_pairs(a, b), 1e-12);
    EXPECT_NEAR(cluster_agreement(a, b), cluster_agreement(b, a), 1e-12);
  }
}

TEST(Evaluate, ReportFields) {
  const auto r = evaluate(fitted_model(6), eval_data());
  EXPECT_EQ(r.n_outfits, 80u);
  EXPECT_EQ(r.n_queries, 40u);
  ASSERT_TRUE(r.cp_auc && r.fitb_accuracy && r.ari);
  const auto j = to_json(r);
  EXPECT_TRUE(j.contains("cp_auc"));
  EXPECT_TRUE(j.contains("ari"));
}

TEST(ExportEmbeddings, RowsAndDeterminism) {
  const auto& d = eval_data();
  const auto p = fitted_model(7);
  const auto round = generate_pseudo_labels(p, d.items, d.outfits, 4, 1);
  const auto dir = fixtures::scratch_dir("export");
  export_embeddings(p, d.items, d.outfits, &round.state, dir / "a.csv");
  export_embeddings(p, d.items, d.outfits, &round.state, dir / "b.csv");
  const auto text = slurp(dir / "a.csv");
  EXPECT_EQ(text, slurp(dir / "b.csv"));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("outfit_id,e0,", 0), 0u);
  EXPECT_NE(line.find(",e19,y,predicted_class,pseudo_label"), std::string::npos);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 23);  // id, 20 dims, y, class, pseudo
    EXPECT_NE(line.back(), ',');
  }
  EXPECT_EQ(rows, d.outfits.size());

  export_embeddings(p, d.items, d.outfits, nullptr, dir / "c.csv");
  std::istringstream c(slurp(dir / "c.csv"));
  std::getline(c, line);
  std::getline(c, line);
  EXPECT_EQ(line.back(), ',');

  ClusterState wrong = round.state;
  wrong.z.push_back(1);
  EXPECT_THROW(export_embeddings(p, d.items, d.outfits, &wrong, dir / "d.csv"), Error);
}
