#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pcmp/outfit_data.hpp"

namespace pcmp {

/// Color compatibility templates planted by the generator.
enum class Template : int {
  Analogous = 0,     // every hue within 30 degrees
  TwoHue = 1,        // two hues >= 120 degrees apart, optionally one neutral item
  Triadic = 2,       // three hues roughly 120 degrees apart
  Neutral = 3,       // chroma below 10 everywhere
};
inline constexpr int kTemplateCount = 4;

struct SyntheticConfig {
  std::size_t n_outfits = 1000;
  std::size_t min_items = 3;
  std::size_t max_items = 5;
  std::uint64_t seed = 0;

  double neutral_probability = 0.5;  // TwoHue outfits with a neutral item
  double min_chroma = 30.0;
  double max_chroma = 60.0;
  double max_neutral_chroma = 8.0;
  double analogous_spread = 12.0;    // item hue offset from the outfit base hue
  double palette_hue_jitter = 3.0;   // per palette color around the item hue
  double two_hue_min_gap = 140.0;
  double two_hue_max_gap = 220.0;
  double two_hue_jitter = 5.0;
  double triadic_jitter = 6.0;

  double negative_slack = 15.0;      // margin in degrees keeping negatives off-template; < 0 disables the check
  bool make_fitb = true;
};

/// Mean-hue summary of one 9-D palette feature.
struct ItemHue {
  double hue_deg = 0.0;
  double chroma = 0.0;
  bool neutral = false;
};

inline constexpr double kNeutralChroma = 10.0;

ItemHue summarize_palette_feature(std::span<const double> feature);

/// True when the item features satisfy template `t`; `slack` widens every
/// tolerance by that many degrees.
bool fits_template(Template t, std::span<const ItemHue> items, double slack = 0.0);
std::optional<Template> matching_template(std::span<const ItemHue> items, double slack = 0.0);

/// Dataset with balanced labels (positives = ceil(n/2)), template ids on
/// positives, negatives mixed from positive items and kept off-template, and
/// one FITB query per positive when `make_fitb` is set.
Dataset generate_synthetic(const SyntheticConfig& config);

}  // namespace pcmp
