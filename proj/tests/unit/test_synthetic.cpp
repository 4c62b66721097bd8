#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "pcmp/errors.hpp"
#include "pcmp/synthetic.hpp"

using namespace pcmp;

namespace {

double hue_of(double a, double b) {
  double h = std::atan2(b, a) * 180.0 / std::numbers::pi;
  return h < 0 ? h + 360.0 : h;
}

double circ_diff(double x, double y) {
  const double d = std::fabs(x - y);
  return std::min(d, 360.0 - d);
}

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n_outfits = 1000;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST(Synthetic, NeutralTemplateLowChroma) {
  const Dataset d = generate_synthetic(small_config(3));
  std::size_t seen = 0;
  for (const auto& o : d.outfits) {
    if (o.template_id != static_cast<int>(Template::Neutral)) continue;
    ++seen;
    for (auto m : o.items) {
      const auto& f = d.items[m].feature;
      for (std::size_t c = 0; c < 3; ++c) EXPECT_LT(std::hypot(f[3 * c + 1], f[3 * c + 2]), 10.0);
    }
  }
  EXPECT_GT(seen, 100u);
}

TEST(Synthetic, AnalogousHueSpanWithin30) {
  const Dataset d = generate_synthetic(small_config(4));
  std::size_t seen = 0;
  for (const auto& o : d.outfits) {
    if (o.template_id != static_cast<int>(Template::Analogous)) continue;
    ++seen;
    std::vector<double> hues;
    for (auto m : o.items) {
      const auto& f = d.items[m].feature;
      for (std::size_t c = 0; c < 3; ++c) hues.push_back(hue_of(f[3 * c + 1], f[3 * c + 2]));
    }
    double span = 0;
    for (double x : hues)
      for (double y : hues) span = std::max(span, circ_diff(x, y));
    EXPECT_LE(span, 30.0) << o.id;
  }
  EXPECT_GT(seen, 100u);
}

TEST(Synthetic, PositivesFitTheirTemplate) {
  const Dataset d = generate_synthetic(small_config(5));
  for (const auto& o : d.outfits) {
    if (o.label != 1) continue;
    std::vector<ItemHue> hues;
    for (auto m : o.items) hues.push_back(summarize_palette_feature(d.items[m].feature));
    EXPECT_TRUE(fits_template(static_cast<Template>(o.template_id), hues)) << o.id;
  }
}

TEST(Synthetic, NegativesOffTemplateByDefault) {
  SyntheticConfig cfg = small_config(6);
  const Dataset d = generate_synthetic(cfg);
  std::size_t off = 0, neg = 0;
  for (const auto& o : d.outfits) {
    if (o.label != 0) continue;
    ++neg;
    EXPECT_EQ(o.template_id, kNoTemplate);
    std::vector<ItemHue> hues;
    for (auto m : o.items) hues.push_back(summarize_palette_feature(d.items[m].feature));
    off += !matching_template(hues, cfg.negative_slack).has_value();
  }
  EXPECT_EQ(off, neg);
}

TEST(Synthetic, BalancedLabelsAndSizes) {
  for (std::size_t n : {1u, 2u, 7u, 1000u}) {
    SyntheticConfig cfg = small_config(1);
    cfg.n_outfits = n;
    cfg.make_fitb = n > 2;
    const Dataset d = generate_synthetic(cfg);
    ASSERT_EQ(d.outfits.size(), n);
    std::size_t pos = 0;
    for (const auto& o : d.outfits) {
      pos += o.label;
      EXPECT_GE(o.items.size(), cfg.min_items);
      EXPECT_LE(o.items.size(), cfg.max_items);
      std::set<std::size_t> u(o.items.begin(), o.items.end());
      EXPECT_EQ(u.size(), o.items.size());
    }
    EXPECT_EQ(pos, (n + 1) / 2);
  }
}

TEST(Synthetic, FitbAnswersComeFromPositives) {
  const Dataset d = generate_synthetic(small_config(8));
  ASSERT_EQ(d.fitb.size(), 500u);
  std::array<int, 4> answers{};
  for (const auto& q : d.fitb) {
    ++answers[q.answer];
    std::set<std::size_t> c(q.candidates.begin(), q.candidates.end());
    EXPECT_EQ(c.size(), 4u);
    for (auto p : q.partial) EXPECT_FALSE(c.contains(p));
  }
  for (int a : answers) EXPECT_GT(a, 75);
}

TEST(Synthetic, RerunIsByteIdentical) {
  const auto a = dataset_to_json(generate_synthetic(small_config(42))).dump();
  const auto b = dataset_to_json(generate_synthetic(small_config(42))).dump();
  EXPECT_EQ(a, b);
  const auto c = dataset_to_json(generate_synthetic(small_config(43))).dump();
  EXPECT_NE(a, c);
}

TEST(Synthetic, RejectsBadRange) {
  SyntheticConfig cfg;
  cfg.min_items = 1;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg.min_items = 4;
  cfg.max_items = 3;
  EXPECT_THROW(generate_synthetic(cfg), Error);
}

TEST(TemplateCheck, HandExamples) {
  auto h = [](double deg, double chroma = 40.0) { return ItemHue{deg, chroma, chroma < kNeutralChroma}; };
  std::vector<ItemHue> analog{h(350), h(5), h(15)};
  EXPECT_TRUE(fits_template(Template::Analogous, analog));
  std::vector<ItemHue> wide{h(0), h(40)};
  EXPECT_FALSE(fits_template(Template::Analogous, wide));
  std::vector<ItemHue> neutral{h(0, 3), h(200, 5)};
  EXPECT_TRUE(fits_template(Template::Neutral, neutral));
  std::vector<ItemHue> triad{h(0), h(120), h(240)};
  EXPECT_TRUE(fits_template(Template::Triadic, triad));
}
