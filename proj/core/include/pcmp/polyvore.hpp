#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "pcmp/outfit_data.hpp"
#include "pcmp/palette_cache.hpp"

namespace pcmp {

// Polyvore-style sources:
//   outfits:  [{"set_id": s, "items": [{"item_id": id, "index": k}, ...]}, ...]
//   compat:   one outfit per line, "label s_k s_k ..."
//   fitb:     [{"question": [s_k...], "answers": [4 x s_k], "blank_position": n}, ...]
// Items are referenced as "<set_id>_<index>" in compat and fitb files.
struct PolyvoreSources {
  std::filesystem::path outfits;
  std::optional<std::filesystem::path> compat;  // without it, every listed outfit is a positive
  std::optional<std::filesystem::path> fitb;
};

struct ConversionStats {
  std::size_t missing_items = 0;   // references without a palette, dropped from their outfit
  std::size_t dropped_outfits = 0; // fewer than 2 items left
  std::size_t dropped_queries = 0; // FITB queries touching a missing item or with no recoverable answer
};

/// Maps the sources onto the dataset schema, one 9-D item per palette. The
/// FITB answer is the candidate drawn from the question's own set.
Dataset convert_polyvore(const PolyvoreSources& sources, const std::vector<PaletteRecord>& palettes,
                         ConversionStats* stats = nullptr);

}  // namespace pcmp
