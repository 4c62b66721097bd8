#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "pcmp/matrix.hpp"

namespace pcmp {

struct Item {
  std::string id;
  std::vector<double> feature;
};

/// Items keyed by id; every feature has the same dimension.
class ItemTable {
 public:
  ItemTable() = default;

  /// Throws SchemaError on a duplicate id or a dimension mismatch.
  std::size_t add(Item item);

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const Item& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Item>& items() const noexcept { return items_; }

  bool contains(const std::string& id) const { return index_.contains(id); }
  /// Throws DanglingId naming the id when absent.
  std::size_t index_of(const std::string& id) const;

  /// Stacks the features of `members` into an N x d matrix.
  Matrix features(std::span<const std::size_t> members) const;

 private:
  std::vector<Item> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t dim_ = 0;
};

inline constexpr int kNoTemplate = -1;

/// Outfit over item-table indices. `template_id` is only set by the
/// synthetic generator.
struct Outfit {
  std::string id;
  std::vector<std::size_t> items;
  int label = 1;
  int template_id = kNoTemplate;
};

struct OutfitPair {
  Outfit pos;
  Outfit neg;
  std::vector<std::size_t> shared;  // sorted id intersection
};

OutfitPair make_pair(Outfit pos, Outfit neg);

/// Removes every item of `drop` from `items`, preserving order.
std::vector<std::size_t> without(std::span<const std::size_t> items, std::span<const std::size_t> drop);

struct FitbQuery {
  std::vector<std::size_t> partial;
  std::array<std::size_t, 4> candidates{};
  int answer = 0;
};

struct Dataset {
  ItemTable items;
  std::vector<Outfit> outfits;
  std::vector<FitbQuery> fitb;
  std::size_t dropped_outfits = 0;
};

/// Parses the dataset schema:
///   {"items":[{"id","feature"}], "outfits":[{"items","label"[,"id"][,"template"]}],
///    "fitb":[{"partial","candidates","answer"}]}
/// Outfits with fewer than two items are dropped and counted.
Dataset parse_dataset(const nlohmann::json& doc);
Dataset load_dataset(const std::filesystem::path& path);

nlohmann::json dataset_to_json(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

inline constexpr double kDefaultReplaceFraction = 0.5;

/// Replaces ceil(replace_fraction * N) positions of `pos` (capped at N - 1
/// when `keep_shared`) with distinct items drawn uniformly from the table
/// and not already present. Returns a label-0 outfit of the same size.
Outfit sample_negative(const Outfit& pos, std::size_t table_size, std::mt19937_64& rng,
                       double replace_fraction = kDefaultReplaceFraction, bool keep_shared = true);
Outfit sample_negative(const Outfit& pos, std::size_t table_size, std::uint64_t seed,
                       double replace_fraction = kDefaultReplaceFraction, bool keep_shared = true);

}  // namespace pcmp
