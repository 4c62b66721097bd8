#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace pcmp {

/// CIE-Lab color under a D65 reference white.
struct LabColor {
  double L = 0.0;
  double a = 0.0;
  double b = 0.0;

  bool operator==(const LabColor&) const = default;
};

struct Rgb8 {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  bool operator==(const Rgb8&) const = default;
};

/// Decoded raster, 3 (RGB) or 4 (RGBA) interleaved 8-bit channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  Rgb8 rgb(std::size_t i) const {
    const auto* p = pixels.data() + i * channels;
    return {p[0], p[1], p[2]};
  }
  std::uint8_t alpha(std::size_t i) const { return channels == 4 ? pixels[i * 4 + 3] : 255; }
};

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> included;

  std::size_t count() const;
};

/// Dominant colors of one item image, sorted by pixel share.
struct ColorPalette {
  std::vector<LabColor> colors;
  std::vector<double> weights;

  /// Concatenated [L, a, b] per color; 9 values for the default k = 3.
  std::vector<double> feature() const;
};

LabColor rgb_to_lab(int r, int g, int b);
inline LabColor rgb_to_lab(Rgb8 c) { return rgb_to_lab(c.r, c.g, c.b); }

/// Inverse of rgb_to_lab; out-of-gamut channels are clamped to [0, 255].
Rgb8 lab_to_rgb(const LabColor& c);

inline constexpr std::uint8_t kAlphaCutoff = 16;
inline constexpr std::uint8_t kWhiteCutoff = 250;

/// Excludes transparent pixels and the near-white background that is
/// 4-connected to the image border. Falls back to every pixel when the
/// exclusion would leave nothing.
PixelMask build_mask(const Image& image);

struct LabKMeansResult {
  std::vector<LabColor> centroids;
  std::vector<double> weights;          // total point weight per centroid
  std::vector<double> objective_trace;  // weighted SSE after every assignment step
  int iterations = 0;
};

/// Weighted Lloyd's K-means in Lab with seeded k-means++ initialisation.
/// Stops after `max_iterations` or once no centroid moves more than `tolerance`.
LabKMeansResult lab_kmeans(std::span<const LabColor> points, std::span<const double> weights,
                           int k, std::uint64_t seed, int max_iterations = 100,
                           double tolerance = 1e-4);

inline constexpr int kDefaultPaletteSize = 3;

ColorPalette extract_palette(const Image& image, const PixelMask& mask,
                             int k = kDefaultPaletteSize, std::uint64_t seed = 0);

}  // namespace pcmp
