#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pcmp/colorlab.hpp"

namespace pcmp {

struct PaletteRecord {
  std::string item_id;
  ColorPalette palette;
};

// One JSON object per line:
//   {"item_id": str, "palette": [[L,a,b] x k], "weights": [w x k]}
std::string to_cache_line(const PaletteRecord& record);
PaletteRecord parse_cache_line(const std::string& line);

void write_palette_cache(const std::filesystem::path& path, const std::vector<PaletteRecord>& records);
std::vector<PaletteRecord> read_palette_cache(const std::filesystem::path& path);

struct DirectoryScan {
  std::vector<PaletteRecord> records;  // sorted by item id
  std::vector<std::string> failures;   // files that could not be decoded, with the reason
};

/// Palettes for every regular file `<item_id>.<ext>` in `dir`. Unreadable
/// files are skipped and listed in `failures`. Throws IoError when the
/// directory is missing or holds no files.
DirectoryScan extract_directory_palettes(const std::filesystem::path& dir, std::uint64_t seed,
                                         std::size_t k = 3, unsigned threads = 0);

}  // namespace pcmp
