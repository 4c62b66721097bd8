#include "pcmp/palette_cache.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <optional>
#include <thread>

#include "json.hpp"
#include "pcmp/errors.hpp"
#include "pcmp/image_io.hpp"

namespace pcmp {

using nlohmann::json;

std::string to_cache_line(const PaletteRecord& record) {
  json j;
  j["item_id"] = record.item_id;
  j["palette"] = json::array();
  for (const auto& c : record.palette.colors) j["palette"].push_back({c.L, c.a, c.b});
  j["weights"] = record.palette.weights;
  return j.dump();
}

PaletteRecord parse_cache_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    PaletteRecord r;
    r.item_id = j.at("item_id").get<std::string>();
    for (const auto& c : j.at("palette")) {
      r.palette.colors.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
    }
    r.palette.weights = j.at("weights").get<std::vector<double>>();
    if (r.palette.weights.size() != r.palette.colors.size()) {
      throw Error(ErrorCode::SchemaError, "palette/weights length mismatch for " + r.item_id);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("palette cache line: ") + e.what());
  }
}

void write_palette_cache(const std::filesystem::path& path, const std::vector<PaletteRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : records) out << to_cache_line(r) << '\n';
}

std::vector<PaletteRecord> read_palette_cache(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<PaletteRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(parse_cache_line(line));
  }
  return records;
}

DirectoryScan extract_directory_palettes(const std::filesystem::path& dir, std::uint64_t seed, std::size_t k,
                                         unsigned threads) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  if (files.empty()) throw Error(ErrorCode::IoError, "no image files in " + dir.string());
  std::sort(files.begin(), files.end());

  // Each file is independent; slots keep the output in file order.
  std::vector<std::optional<PaletteRecord>> slots(files.size());
  std::vector<std::string> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        const Image img = read_image(files[i]);
        slots[i] = PaletteRecord{files[i].stem().string(), extract_palette(img, build_mask(img), k, seed)};
      } catch (const std::exception& e) {
        errors[i] = files[i].filename().string() + ": " + e.what();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, files.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  DirectoryScan scan;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (slots[i]) {
      scan.records.push_back(std::move(*slots[i]));
    } else {
      scan.failures.push_back(std::move(errors[i]));
    }
  }
  std::sort(scan.records.begin(), scan.records.end(),
            [](const PaletteRecord& a, const PaletteRecord& b) { return a.item_id < b.item_id; });
  return scan;
}

}  // namespace pcmp
