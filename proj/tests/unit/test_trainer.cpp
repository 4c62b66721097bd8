#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "fixtures.hpp"
#include "pcmp/checkpoint.hpp"
#include "pcmp/errors.hpp"
#include "pcmp/synthetic.hpp"
#include "pcmp/trainer.hpp"

using namespace pcmp;

namespace {

const Dataset& small_data() {
  static const Dataset d = [] {
    SyntheticConfig s;
    s.n_outfits = 120;
    s.seed = 4;
    return generate_synthetic(s);
  }();
  return d;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.epochs = 6;
  c.warmup_epochs = 2;
  c.recluster_period = 2;
  c.batch_size = 16;
  c.hidden = 16;
  c.embed_dim = 8;
  c.seed = 3;
  return c;
}

}  // namespace

TEST(Trainer, TotalIsL1PlusLambdaL2) {
  const auto r = train(small_data(), quick_config());
  ASSERT_FALSE(r.report.batches.empty());
  for (const auto& b : r.report.batches) {
    EXPECT_NEAR(b.total, b.l1 + 0.5 * b.l2, 1e-12);
    EXPECT_GE(b.l2, 0.0);
  }
  EXPECT_GT(r.report.epochs.back().local_pairs, 0u);
}

TEST(Trainer, LambdaZeroGivesL1) {
  auto cfg = quick_config();
  cfg.lambda = 0.0;
  const auto r = train(small_data(), cfg);
  for (const auto& b : r.report.batches) EXPECT_EQ(b.total, b.l1);
}

TEST(Trainer, LocalLossSkippedWhenSubsetsTooSmall) {
  // Two-item outfits: one item is replaced, one shared, leaving 1-item subsets.
  Dataset d = fixtures::tiny_dataset(30, 9, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    Outfit o;
    o.id = "o" + std::to_string(i);
    o.items = {i, i + 10};
    o.label = 1;
    d.outfits.push_back(o);
  }
  auto cfg = quick_config();
  const auto r = train(d, cfg);
  std::size_t pairs = 0;
  for (const auto& e : r.report.epochs) {
    EXPECT_EQ(e.local_pairs, 0u);
    EXPECT_EQ(e.skipped_local, e.pairs);
    EXPECT_EQ(e.l2, 0.0);
    pairs += e.pairs;
  }
  EXPECT_EQ(r.report.skipped_local, pairs);
  EXPECT_EQ(pairs, 20u * 6u);
}

TEST(Trainer, RoundsAfterWarmup) {
  auto cfg = quick_config();
  cfg.epochs = 9;
  cfg.warmup_epochs = 2;
  cfg.recluster_period = 3;
  const auto r = train(small_data(), cfg);
  ASSERT_EQ(r.report.rounds.size(), 3u);
  EXPECT_EQ(r.report.rounds[0].epoch, 2);
  EXPECT_EQ(r.report.rounds[1].epoch, 5);
  EXPECT_EQ(r.report.rounds[2].epoch, 8);
  for (const auto& rd : r.report.rounds) {
    EXPECT_TRUE(rd.consistent);
    EXPECT_EQ(rd.negative_clusters, 1u);
    EXPECT_EQ(rd.z, (std::vector<int>{0, 1, 1, 1, 1}));
  }
  cfg.warmup_epochs = 0;
  EXPECT_EQ(train(small_data(), cfg).report.rounds.front().epoch, 0);
}

TEST(Trainer, ClusteringSetGainsNegativesWhenDataHasNone) {
  Dataset d = small_data();
  std::erase_if(d.outfits, [](const Outfit& o) { return o.label == 0; });
  const std::size_t n_pos = d.outfits.size();
  const auto r = train(d, quick_config());
  EXPECT_EQ(r.clustering_set.size(), 2 * n_pos);
  EXPECT_EQ(r.final_round.pseudo.labels.size(), 2 * n_pos);
}

TEST(Trainer, UniformHeadGivesClosedFormFirstLoss) {
  auto cfg = quick_config();
  cfg.zero_init_head = true;
  cfg.warmup_epochs = 0;
  // Uniform softmax over 5 classes, cross-entropy on both outfits.
  EXPECT_NEAR(train(small_data(), cfg).report.batches.front().l1, 2 * std::log(5.0), 1e-12);
  cfg.warmup_epochs = 2;
  // Warm-up: compatibility 0.8 for both outfits.
  EXPECT_NEAR(train(small_data(), cfg).report.batches.front().l1, -std::log(0.8) - std::log(0.2), 1e-12);
  EXPECT_NEAR(train_binary_baseline(small_data(), cfg).report.batches.front().l1, 2 * std::log(2.0), 1e-12);
}

TEST(Trainer, RunsAreDeterministic) {
  const auto a = train(small_data(), quick_config());
  const auto b = train(small_data(), quick_config());
  EXPECT_EQ(to_json(a.report).dump(), to_json(b.report).dump());
  const auto dir = fixtures::scratch_dir("trainer_det");
  save_checkpoint(dir / "a.pcmp", a.params);
  save_checkpoint(dir / "b.pcmp", b.params);
  std::ifstream fa(dir / "a.pcmp", std::ios::binary), fb(dir / "b.pcmp", std::ios::binary);
  EXPECT_EQ(std::string(std::istreambuf_iterator<char>(fa), {}), std::string(std::istreambuf_iterator<char>(fb), {}));
  auto cfg = quick_config();
  cfg.seed = 4;
  EXPECT_NE(to_json(train(small_data(), cfg).report).dump(), to_json(a.report).dump());
}

TEST(Trainer, BinaryBaselineLossFalls) {
  auto cfg = quick_config();
  cfg.epochs = 20;
  cfg.lr = 3e-3;
  const auto r = train_binary_baseline(small_data(), cfg);
  EXPECT_EQ(r.params.config.n_classes, 2u);
  EXPECT_TRUE(r.report.rounds.empty());
  // Per-epoch losses are noisy (fresh negatives every epoch); compare the
  // first and last five-epoch means.
  double head = 0, tail = 0;
  for (int e = 0; e < 5; ++e) {
    head += r.report.epochs[e].total;
    tail += r.report.epochs[r.report.epochs.size() - 1 - e].total;
  }
  EXPECT_LT(tail, head);
  for (const auto& b : r.report.batches) EXPECT_EQ(b.l2, 0.0);
}

TEST(Trainer, ValidationCadence) {
  auto cfg = quick_config();
  cfg.eval_every = 3;
  std::vector<int> seen;
  const auto r = train(small_data(), cfg, &small_data(), [&](const EpochLog& e) { seen.push_back(e.epoch); });
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3, 4, 5}));
  for (const auto& e : r.report.epochs) {
    EXPECT_EQ(e.val_auc.has_value(), e.epoch == 2 || e.epoch == 5) << e.epoch;
  }
}

TEST(Trainer, ConfigValidation) {
  auto bad = [](auto mutate) {
    auto c = quick_config();
    mutate(c);
    EXPECT_THROW(validate(c), Error);
  };
  bad([](TrainConfig& c) { c.C = 0; });
  bad([](TrainConfig& c) { c.lambda = -1; });
  bad([](TrainConfig& c) { c.recluster_period = 0; });
  bad([](TrainConfig& c) { c.warmup_epochs = -1; });
  bad([](TrainConfig& c) { c.batch_size = 0; });
  bad([](TrainConfig& c) { c.replace_fraction = 0.0; });
  EXPECT_NO_THROW(validate(quick_config()));
  const auto j = to_json(quick_config());
  EXPECT_EQ(j.at("C"), 4);
  EXPECT_EQ(j.at("warmup_epochs"), 2);
}
