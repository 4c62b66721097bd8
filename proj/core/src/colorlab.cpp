#include "pcmp/colorlab.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <tuple>

#include "pcmp/errors.hpp"

namespace pcmp {
namespace {

// sRGB primaries, D65 white.
constexpr double kM[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};
constexpr double kMinv[3][3] = {
    {3.2404542, -1.5371385, -0.4985314},
    {-0.9692660, 1.8760108, 0.0415560},
    {0.0556434, -0.2040259, 1.0572252},
};
constexpr double kWhiteX = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kWhiteY = 1.0;
constexpr double kWhiteZ = kM[2][0] + kM[2][1] + kM[2][2];

constexpr double kEpsilon = 216.0 / 24389.0;
constexpr double kKappa = 24389.0 / 27.0;

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double c) {
  return c <= 0.0031308 ? c * 12.92 : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) { return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0; }

double lab_f_inv(double f) {
  const double t = f * f * f;
  return t > kEpsilon ? t : (116.0 * f - 16.0) / kKappa;
}

std::uint8_t to_channel(double c) {
  const double v = std::round(std::clamp(c, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(v);
}

double sq_dist(const LabColor& x, const LabColor& y) {
  const double dl = x.L - y.L, da = x.a - y.a, db = x.b - y.b;
  return dl * dl + da * da + db * db;
}

}  // namespace

std::size_t PixelMask::count() const {
  return static_cast<std::size_t>(std::count(included.begin(), included.end(), 1));
}

std::vector<double> ColorPalette::feature() const {
  std::vector<double> f;
  f.reserve(colors.size() * 3);
  for (const auto& c : colors) {
    f.push_back(c.L);
    f.push_back(c.a);
    f.push_back(c.b);
  }
  return f;
}

LabColor rgb_to_lab(int r, int g, int b) {
  const double lin[3] = {srgb_to_linear(r / 255.0), srgb_to_linear(g / 255.0),
                         srgb_to_linear(b / 255.0)};
  double xyz[3];
  for (int i = 0; i < 3; ++i) {
    xyz[i] = kM[i][0] * lin[0] + kM[i][1] * lin[1] + kM[i][2] * lin[2];
  }
  const double fx = lab_f(xyz[0] / kWhiteX);
  const double fy = lab_f(xyz[1] / kWhiteY);
  const double fz = lab_f(xyz[2] / kWhiteZ);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Rgb8 lab_to_rgb(const LabColor& c) {
  const double fy = (c.L + 16.0) / 116.0;
  const double fx = fy + c.a / 500.0;
  const double fz = fy - c.b / 200.0;
  const double y = c.L > kKappa * kEpsilon ? fy * fy * fy : c.L / kKappa;
  const double xyz[3] = {lab_f_inv(fx) * kWhiteX, y * kWhiteY, lab_f_inv(fz) * kWhiteZ};
  double rgb[3];
  for (int i = 0; i < 3; ++i) {
    const double lin = kMinv[i][0] * xyz[0] + kMinv[i][1] * xyz[1] + kMinv[i][2] * xyz[2];
    rgb[i] = linear_to_srgb(std::max(lin, 0.0));
  }
  return {to_channel(rgb[0]), to_channel(rgb[1]), to_channel(rgb[2])};
}

PixelMask build_mask(const Image& image) {
  if (image.width <= 0 || image.height <= 0 || image.pixels.empty()) {
    throw Error(ErrorCode::ZeroPixels, "raster has zero area");
  }
  const int w = image.width, h = image.height;
  const std::size_t n = image.pixel_count();
  PixelMask mask{w, h, std::vector<std::uint8_t>(n, 1)};

  auto is_white = [&](std::size_t i) {
    const Rgb8 c = image.rgb(i);
    return c.r >= kWhiteCutoff && c.g >= kWhiteCutoff && c.b >= kWhiteCutoff;
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (image.alpha(i) < kAlphaCutoff) mask.included[i] = 0;
  }

  std::vector<std::uint8_t> flooded(n, 0);
  std::deque<std::size_t> queue;
  auto seed_pixel = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    if (!flooded[i] && is_white(i)) {
      flooded[i] = 1;
      queue.push_back(i);
    }
  };
  for (int x = 0; x < w; ++x) {
    seed_pixel(x, 0);
    seed_pixel(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    seed_pixel(0, y);
    seed_pixel(w - 1, y);
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    mask.included[i] = 0;
    const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
    if (x > 0) seed_pixel(x - 1, y);
    if (x + 1 < w) seed_pixel(x + 1, y);
    if (y > 0) seed_pixel(x, y - 1);
    if (y + 1 < h) seed_pixel(x, y + 1);
  }

  if (mask.count() == 0) std::fill(mask.included.begin(), mask.included.end(), 1);
  return mask;
}

LabKMeansResult lab_kmeans(std::span<const LabColor> points, std::span<const double> weights,
                           int k, std::uint64_t seed, int max_iterations, double tolerance) {
  if (points.empty()) throw Error(ErrorCode::ZeroPixels, "no points to cluster");
  if (points.size() != weights.size()) {
    throw Error(ErrorCode::ShapeMismatch, "points and weights differ in length");
  }
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");

  const std::size_t n = points.size();
  std::mt19937_64 rng(seed);
  LabKMeansResult out;

  // k-means++ over weighted points.
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  {
    std::discrete_distribution<std::size_t> first(weights.begin(), weights.end());
    out.centroids.push_back(points[first(rng)]);
  }
  while (static_cast<int>(out.centroids.size()) < k) {
    std::vector<double> score(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(points[i], out.centroids.back()));
      score[i] = weights[i] * best[i];
      total += score[i];
    }
    if (total <= 0.0) break;  // fewer distinct points than k
    std::discrete_distribution<std::size_t> pick(score.begin(), score.end());
    out.centroids.push_back(points[pick(rng)]);
  }

  const std::size_t kk = out.centroids.size();
  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d_best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < kk; ++c) {
        const double d = sq_dist(points[i], out.centroids[c]);
        if (d < d_best) {
          d_best = d;
          assign[i] = c;
        }
      }
      objective += weights[i] * d_best;
    }
    out.objective_trace.push_back(objective);
    out.iterations = iter + 1;

    std::vector<double> sl(kk, 0.0), sa(kk, 0.0), sb(kk, 0.0), sw(kk, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assign[i];
      sl[c] += weights[i] * points[i].L;
      sa[c] += weights[i] * points[i].a;
      sb[c] += weights[i] * points[i].b;
      sw[c] += weights[i];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (sw[c] <= 0.0) continue;  // empty clusters keep their centroid
      const LabColor next{sl[c] / sw[c], sa[c] / sw[c], sb[c] / sw[c]};
      shift = std::max(shift, std::sqrt(sq_dist(next, out.centroids[c])));
      out.centroids[c] = next;
    }
    if (shift < tolerance) break;
  }

  out.weights.assign(kk, 0.0);
  for (std::size_t i = 0; i < n; ++i) out.weights[assign[i]] += weights[i];
  return out;
}

ColorPalette extract_palette(const Image& image, const PixelMask& mask, int k,
                             std::uint64_t seed) {
  if (image.pixel_count() == 0 || mask.included.size() != image.pixel_count()) {
    throw Error(ErrorCode::ZeroPixels, "mask does not cover a non-empty image");
  }
  // Identical pixels collapse into one weighted point; std::map keeps the
  // order canonical so results do not depend on pixel layout.
  std::map<std::tuple<std::uint8_t, std::uint8_t, std::uint8_t>, double> histogram;
  for (std::size_t i = 0; i < image.pixel_count(); ++i) {
    if (!mask.included[i]) continue;
    const Rgb8 c = image.rgb(i);
    histogram[{c.r, c.g, c.b}] += 1.0;
  }
  if (histogram.empty()) throw Error(ErrorCode::ZeroPixels, "mask includes no pixels");

  std::vector<LabColor> points;
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& [rgb, count] : histogram) {
    points.push_back(rgb_to_lab(std::get<0>(rgb), std::get<1>(rgb), std::get<2>(rgb)));
    weights.push_back(count);
    total += count;
  }

  const auto km = lab_kmeans(points, weights, k, seed);

  struct Slot {
    LabColor color;
    double weight;
  };
  std::vector<Slot> slots;
  for (std::size_t c = 0; c < km.centroids.size(); ++c) {
    if (km.weights[c] > 0.0) slots.push_back({km.centroids[c], km.weights[c] / total});
  }
  auto by_share = [](const Slot& x, const Slot& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.color.L != y.color.L) return x.color.L > y.color.L;
    if (x.color.a != y.color.a) return x.color.a > y.color.a;
    return x.color.b > y.color.b;
  };
  std::sort(slots.begin(), slots.end(), by_share);

  // Fewer surviving clusters than k: the largest one is split into equal
  // replicas so the feature length stays fixed.
  if (static_cast<int>(slots.size()) < k) {
    const int copies = k - static_cast<int>(slots.size()) + 1;
    const Slot largest = slots.front();
    slots.erase(slots.begin());
    for (int i = 0; i < copies; ++i) slots.push_back({largest.color, largest.weight / copies});
    std::sort(slots.begin(), slots.end(), by_share);
  }

  ColorPalette palette;
  for (const auto& s : slots) {
    palette.colors.push_back(s.color);
    palette.weights.push_back(s.weight);
  }
  return palette;
}

}  // namespace pcmp
