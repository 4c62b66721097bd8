#include "pcmp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "pcmp/errors.hpp"

namespace pcmp {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap360(double h) {
  h = std::fmod(h, 360.0);
  return h < 0.0 ? h + 360.0 : h;
}

double hue_distance(double x, double y) {
  const double d = std::fabs(wrap360(x) - wrap360(y));
  return std::min(d, 360.0 - d);
}

struct HueGroup {
  double center;
  double span;
};

// Splits hues on the circle into arcs separated by gaps wider than
// `gap_threshold` degrees.
std::vector<HueGroup> group_hues(std::vector<double> hues, double gap_threshold) {
  std::vector<HueGroup> groups;
  if (hues.empty()) return groups;
  for (double& h : hues) h = wrap360(h);
  std::sort(hues.begin(), hues.end());
  const std::size_t n = hues.size();
  // Start right after the widest gap so no arc wraps around the start.
  std::size_t start = 0;
  double widest = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double next = i + 1 < n ? hues[i + 1] : hues[0] + 360.0;
    const double gap = next - hues[i];
    if (gap > widest) {
      widest = gap;
      start = (i + 1) % n;
    }
  }
  std::vector<double> unrolled;
  for (std::size_t i = 0; i < n; ++i) {
    double h = hues[(start + i) % n];
    if (!unrolled.empty() && h < unrolled.back()) h += 360.0;
    unrolled.push_back(h);
  }
  double first = unrolled[0], last = unrolled[0];
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || unrolled[i] - unrolled[i - 1] > gap_threshold) {
      groups.push_back({wrap360((first + last) / 2.0), last - first});
      if (i < n) first = last = unrolled[i];
    } else {
      last = unrolled[i];
    }
  }
  return groups;
}

class Generator {
 public:
  explicit Generator(const SyntheticConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& rng() { return rng_; }

  std::vector<double> chromatic_item(double hue) {
    const double chroma = uniform(cfg_.min_chroma, cfg_.max_chroma);
    const double base_l = uniform(35.0, 75.0);
    std::vector<double> f;
    for (int k = 0; k < 3; ++k) {
      const double h = hue + uniform(-cfg_.palette_hue_jitter, cfg_.palette_hue_jitter);
      const double c = chroma * uniform(0.85, 1.15);
      const double l = std::clamp(base_l + uniform(-15.0, 15.0), 20.0, 90.0);
      f.push_back(l);
      f.push_back(c * std::cos(h * kDeg));
      f.push_back(c * std::sin(h * kDeg));
    }
    return f;
  }

  std::vector<double> neutral_item() {
    const double base_l = uniform(10.0, 95.0);
    std::vector<double> f;
    for (int k = 0; k < 3; ++k) {
      const double h = uniform(0.0, 360.0);
      const double c = uniform(0.0, cfg_.max_neutral_chroma);
      f.push_back(std::clamp(base_l + uniform(-10.0, 10.0), 0.0, 100.0));
      f.push_back(c * std::cos(h * kDeg));
      f.push_back(c * std::sin(h * kDeg));
    }
    return f;
  }

  std::vector<std::vector<double>> outfit_features(Template t, std::size_t n) {
    std::vector<std::vector<double>> items;
    const double base = uniform(0.0, 360.0);
    switch (t) {
      case Template::Analogous:
        for (std::size_t i = 0; i < n; ++i) {
          items.push_back(chromatic_item(base + uniform(-cfg_.analogous_spread, cfg_.analogous_spread)));
        }
        break;
      case Template::TwoHue: {
        const double second = base + uniform(cfg_.two_hue_min_gap, cfg_.two_hue_max_gap);
        const bool with_neutral = n >= 3 && coin(cfg_.neutral_probability);
        const std::size_t chromatic = with_neutral ? n - 1 : n;
        for (std::size_t i = 0; i < chromatic; ++i) {
          const double h = i == 0 ? base : i == 1 ? second : (coin(0.5) ? base : second);
          items.push_back(chromatic_item(h + uniform(-cfg_.two_hue_jitter, cfg_.two_hue_jitter)));
        }
        if (with_neutral) items.push_back(neutral_item());
        break;
      }
      case Template::Triadic:
        for (std::size_t i = 0; i < n; ++i) {
          const double slot = i < 3 ? static_cast<double>(i) : static_cast<double>(index(3));
          items.push_back(chromatic_item(base + 120.0 * slot + uniform(-cfg_.triadic_jitter, cfg_.triadic_jitter)));
        }
        break;
      case Template::Neutral:
        for (std::size_t i = 0; i < n; ++i) items.push_back(neutral_item());
        break;
    }
    std::shuffle(items.begin(), items.end(), rng_);
    return items;
  }

 private:
  const SyntheticConfig& cfg_;
  std::mt19937_64 rng_;
};

std::vector<ItemHue> hues_of(const ItemTable& table, std::span<const std::size_t> members) {
  std::vector<ItemHue> out;
  for (std::size_t m : members) out.push_back(summarize_palette_feature(table[m].feature));
  return out;
}

}  // namespace

ItemHue summarize_palette_feature(std::span<const double> feature) {
  if (feature.size() < 3 || feature.size() % 3 != 0) {
    throw Error(ErrorCode::ShapeMismatch, "palette feature length must be a multiple of 3");
  }
  double a = 0.0, b = 0.0;
  const std::size_t k = feature.size() / 3;
  for (std::size_t i = 0; i < k; ++i) {
    a += feature[3 * i + 1];
    b += feature[3 * i + 2];
  }
  a /= static_cast<double>(k);
  b /= static_cast<double>(k);
  ItemHue out;
  out.chroma = std::hypot(a, b);
  out.hue_deg = wrap360(std::atan2(b, a) / kDeg);
  out.neutral = out.chroma < kNeutralChroma;
  return out;
}

bool fits_template(Template t, std::span<const ItemHue> items, double slack) {
  std::vector<double> hues;
  std::size_t neutrals = 0;
  for (const auto& it : items) {
    if (it.neutral) {
      ++neutrals;
    } else {
      hues.push_back(it.hue_deg);
    }
  }
  constexpr double kGroupGap = 30.0;
  constexpr double kGroupSpan = 24.0;
  switch (t) {
    case Template::Neutral:
      return hues.empty();
    case Template::Analogous: {
      if (neutrals > 0 || hues.empty()) return false;
      const auto groups = group_hues(hues, 360.0);
      return groups.size() == 1 && groups[0].span <= 30.0 + slack;
    }
    case Template::TwoHue: {
      if (neutrals > 1 || hues.size() < 2) return false;
      const auto groups = group_hues(hues, kGroupGap - slack / 2.0);
      if (groups.size() != 2) return false;
      return groups[0].span <= kGroupSpan + slack && groups[1].span <= kGroupSpan + slack &&
             hue_distance(groups[0].center, groups[1].center) >= 120.0 - slack;
    }
    case Template::Triadic: {
      if (neutrals > 0 || hues.size() < 3) return false;
      const auto groups = group_hues(hues, kGroupGap - slack / 2.0);
      if (groups.size() != 3) return false;
      for (std::size_t i = 0; i < 3; ++i) {
        if (groups[i].span > kGroupSpan + slack) return false;
        const double gap = hue_distance(groups[i].center, groups[(i + 1) % 3].center);
        if (std::fabs(gap - 120.0) > 20.0 + slack) return false;
      }
      return true;
    }
  }
  return false;
}

std::optional<Template> matching_template(std::span<const ItemHue> items, double slack) {
  for (int t = 0; t < kTemplateCount; ++t) {
    if (fits_template(static_cast<Template>(t), items, slack)) return static_cast<Template>(t);
  }
  return std::nullopt;
}

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_outfits < 1) throw Error(ErrorCode::InvalidArgument, "n_outfits must be >= 1");
  if (cfg.min_items < 2 || cfg.max_items < cfg.min_items) {
    throw Error(ErrorCode::InvalidArgument, "items per outfit range must satisfy 2 <= min <= max");
  }
  Generator gen(cfg);
  Dataset data;
  const std::size_t n_pos = (cfg.n_outfits + 1) / 2;
  const std::size_t n_neg = cfg.n_outfits / 2;
  auto outfit_size = [&] {
    return cfg.min_items + gen.index(cfg.max_items - cfg.min_items + 1);
  };

  std::vector<Outfit> positives;
  for (std::size_t o = 0; o < n_pos; ++o) {
    const auto t = static_cast<Template>(o % kTemplateCount);
    std::size_t n = outfit_size();
    if (t == Template::Triadic) n = std::max<std::size_t>(n, 3);
    Outfit outfit;
    outfit.id = "p" + std::to_string(o);
    outfit.label = 1;
    outfit.template_id = static_cast<int>(t);
    for (auto& f : gen.outfit_features(t, n)) {
      outfit.items.push_back(data.items.add({"i" + std::to_string(data.items.size()), std::move(f)}));
    }
    positives.push_back(std::move(outfit));
  }

  std::vector<ItemHue> all_hues = hues_of(data.items, [&] {
    std::vector<std::size_t> all(data.items.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }());
  auto hues_for = [&](std::span<const std::size_t> members) {
    std::vector<ItemHue> out;
    for (std::size_t m : members) out.push_back(all_hues[m]);
    return out;
  };

  std::vector<Outfit> negatives;
  const std::size_t pool = data.items.size();
  for (std::size_t o = 0; o < n_neg; ++o) {
    Outfit outfit;
    outfit.id = "n" + std::to_string(o);
    outfit.label = 0;
    const std::size_t n = std::min(outfit_size(), pool);
    // Tiny pools may hold nothing but on-template mixes; give up after a bound.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      std::set<std::size_t> chosen;
      while (chosen.size() < n) chosen.insert(gen.index(pool));
      outfit.items.assign(chosen.begin(), chosen.end());
      std::shuffle(outfit.items.begin(), outfit.items.end(), gen.rng());
      if (cfg.negative_slack < 0.0 || !matching_template(hues_for(outfit.items), cfg.negative_slack)) break;
    }
    negatives.push_back(std::move(outfit));
  }

  // Interleave so any prefix stays roughly balanced.
  for (std::size_t i = 0; i < std::max(n_pos, n_neg); ++i) {
    if (i < n_pos) data.outfits.push_back(positives[i]);
    if (i < n_neg) data.outfits.push_back(negatives[i]);
  }

  if (cfg.make_fitb && pool > 4) {
    constexpr int kMaxTries = 200;
    for (const auto& pos : positives) {
      FitbQuery q;
      const std::size_t blank = gen.index(pos.items.size());
      for (std::size_t i = 0; i < pos.items.size(); ++i) {
        if (i != blank) q.partial.push_back(pos.items[i]);
      }
      q.answer = static_cast<int>(gen.index(4));
      std::set<std::size_t> used(pos.items.begin(), pos.items.end());
      for (int c = 0; c < 4; ++c) {
        if (c == q.answer) {
          q.candidates[c] = pos.items[blank];
          continue;
        }
        std::size_t pick = 0;
        for (int attempt = 0; attempt < kMaxTries; ++attempt) {
          pick = gen.index(pool);
          if (used.contains(pick)) continue;
          auto completed = q.partial;
          completed.push_back(pick);
          if (cfg.negative_slack < 0.0 || !matching_template(hues_for(completed), cfg.negative_slack)) break;
        }
        while (used.contains(pick)) pick = gen.index(pool);
        used.insert(pick);
        q.candidates[c] = pick;
      }
      data.fitb.push_back(std::move(q));
    }
  }
  return data;
}

}  // namespace pcmp
