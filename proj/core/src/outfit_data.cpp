#include "pcmp/outfit_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "pcmp/errors.hpp"

namespace pcmp {

using nlohmann::json;

std::size_t ItemTable::add(Item item) {
  if (items_.empty()) {
    dim_ = item.feature.size();
  } else if (item.feature.size() != dim_) {
    throw Error(ErrorCode::SchemaError, "item " + item.id + " has feature dimension " +
                                            std::to_string(item.feature.size()) + ", expected " +
                                            std::to_string(dim_));
  }
  for (double v : item.feature) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SchemaError, "non-finite feature in item " + item.id);
  }
  if (index_.contains(item.id)) throw Error(ErrorCode::SchemaError, "duplicate item id " + item.id);
  const std::size_t i = items_.size();
  index_.emplace(item.id, i);
  items_.push_back(std::move(item));
  return i;
}

std::size_t ItemTable::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::DanglingId, "unknown item id '" + id + "'");
  return it->second;
}

Matrix ItemTable::features(std::span<const std::size_t> members) const {
  Matrix m(members.size(), dim_);
  for (std::size_t r = 0; r < members.size(); ++r) {
    const auto& f = items_.at(members[r]).feature;
    std::copy(f.begin(), f.end(), m.row(r).begin());
  }
  return m;
}

OutfitPair make_pair(Outfit pos, Outfit neg) {
  std::vector<std::size_t> a = pos.items, b = neg.items;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  OutfitPair p{std::move(pos), std::move(neg), {}};
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(p.shared));
  return p;
}

std::vector<std::size_t> without(std::span<const std::size_t> items, std::span<const std::size_t> drop) {
  std::vector<std::size_t> out;
  for (std::size_t i : items) {
    if (std::find(drop.begin(), drop.end(), i) == drop.end()) out.push_back(i);
  }
  return out;
}

namespace {

std::vector<std::size_t> resolve(const ItemTable& table, const json& ids) {
  std::vector<std::size_t> out;
  for (const auto& id : ids) out.push_back(table.index_of(id.get<std::string>()));
  return out;
}

}  // namespace

Dataset parse_dataset(const json& doc) {
  Dataset data;
  try {
    for (const auto& it : doc.at("items")) {
      data.items.add({it.at("id").get<std::string>(), it.at("feature").get<std::vector<double>>()});
    }
    std::size_t ordinal = 0;
    for (const auto& o : doc.at("outfits")) {
      Outfit outfit;
      outfit.id = o.contains("id") ? o.at("id").get<std::string>() : "o" + std::to_string(ordinal);
      ++ordinal;
      outfit.items = resolve(data.items, o.at("items"));
      outfit.label = o.at("label").get<int>();
      if (outfit.label != 0 && outfit.label != 1) {
        throw Error(ErrorCode::SchemaError, "label must be 0 or 1 in outfit " + outfit.id);
      }
      if (o.contains("template")) outfit.template_id = o.at("template").get<int>();
      std::set<std::size_t> unique(outfit.items.begin(), outfit.items.end());
      if (unique.size() != outfit.items.size()) {
        throw Error(ErrorCode::SchemaError, "duplicate item in outfit " + outfit.id);
      }
      if (outfit.items.size() < 2) {
        ++data.dropped_outfits;
        continue;
      }
      data.outfits.push_back(std::move(outfit));
    }
    if (doc.contains("fitb")) {
      for (const auto& q : doc.at("fitb")) {
        FitbQuery query;
        query.partial = resolve(data.items, q.at("partial"));
        const auto cands = resolve(data.items, q.at("candidates"));
        if (query.partial.empty() || cands.size() != 4) {
          throw Error(ErrorCode::SchemaError, "FITB query needs >=1 partial item and 4 candidates");
        }
        std::copy(cands.begin(), cands.end(), query.candidates.begin());
        query.answer = q.at("answer").get<int>();
        if (query.answer < 0 || query.answer > 3) {
          throw Error(ErrorCode::SchemaError, "FITB answer index out of range");
        }
        data.fitb.push_back(std::move(query));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  }
  if (data.dropped_outfits > 0) {
    spdlog::warn("dropped {} outfit(s) with fewer than 2 items", data.dropped_outfits);
  }
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read dataset " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
  return parse_dataset(doc);
}

json dataset_to_json(const Dataset& data) {
  json doc;
  doc["items"] = json::array();
  for (const auto& it : data.items.items()) doc["items"].push_back({{"id", it.id}, {"feature", it.feature}});
  auto ids = [&](std::span<const std::size_t> members) {
    json arr = json::array();
    for (std::size_t m : members) arr.push_back(data.items[m].id);
    return arr;
  };
  doc["outfits"] = json::array();
  for (const auto& o : data.outfits) {
    json j{{"id", o.id}, {"items", ids(o.items)}, {"label", o.label}};
    if (o.template_id != kNoTemplate) j["template"] = o.template_id;
    doc["outfits"].push_back(std::move(j));
  }
  doc["fitb"] = json::array();
  for (const auto& q : data.fitb) {
    doc["fitb"].push_back({{"partial", ids(q.partial)}, {"candidates", ids(q.candidates)}, {"answer", q.answer}});
  }
  return doc;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write dataset " + path.string());
  out << dataset_to_json(data).dump() << '\n';
}

Outfit sample_negative(const Outfit& pos, std::size_t table_size, std::mt19937_64& rng,
                       double replace_fraction, bool keep_shared) {
  const std::size_t n = pos.items.size();
  if (!(replace_fraction > 0.0 && replace_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "replace_fraction must lie in (0, 1]");
  }
  auto n_replace = static_cast<std::size_t>(std::ceil(replace_fraction * static_cast<double>(n)));
  if (keep_shared && n_replace >= n) n_replace = n - 1;
  n_replace = std::max<std::size_t>(n_replace, 1);
  if (table_size < n || table_size - n < n_replace) {
    throw Error(ErrorCode::PoolTooSmall, "item table of " + std::to_string(table_size) +
                                             " cannot supply " + std::to_string(n_replace) +
                                             " replacements");
  }

  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  std::shuffle(positions.begin(), positions.end(), rng);
  positions.resize(n_replace);
  std::sort(positions.begin(), positions.end());

  std::set<std::size_t> present(pos.items.begin(), pos.items.end());
  std::uniform_int_distribution<std::size_t> pick(0, table_size - 1);
  Outfit neg = pos;
  neg.label = 0;
  neg.template_id = kNoTemplate;
  neg.id = pos.id + "-neg";
  for (std::size_t p : positions) {
    std::size_t candidate;
    do {
      candidate = pick(rng);
    } while (present.contains(candidate));
    present.insert(candidate);
    neg.items[p] = candidate;
  }
  return neg;
}

Outfit sample_negative(const Outfit& pos, std::size_t table_size, std::uint64_t seed,
                       double replace_fraction, bool keep_shared) {
  std::mt19937_64 rng(seed);
  return sample_negative(pos, table_size, rng, replace_fraction, keep_shared);
}

}  // namespace pcmp
