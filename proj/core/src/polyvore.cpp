#include "pcmp/polyvore.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "pcmp/errors.hpp"

namespace pcmp {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

std::string set_of(const std::string& ref) { return ref.substr(0, ref.rfind('_')); }

}  // namespace

Dataset convert_polyvore(const PolyvoreSources& src, const std::vector<PaletteRecord>& palettes,
                         ConversionStats* stats_out) {
  ConversionStats stats;
  Dataset data;
  for (const auto& p : palettes) data.items.add({p.item_id, p.palette.feature()});

  // "<set>_<index>" -> item id
  std::unordered_map<std::string, std::string> refs;
  std::vector<std::pair<std::string, std::vector<std::string>>> listed;
  try {
    for (const auto& o : read_json(src.outfits)) {
      const auto set_id = o.at("set_id").get<std::string>();
      std::vector<std::string> ids;
      for (const auto& it : o.at("items")) {
        const auto id = it.at("item_id").get<std::string>();
        refs[set_id + "_" + std::to_string(it.at("index").get<long long>())] = id;
        ids.push_back(id);
      }
      listed.emplace_back(set_id, std::move(ids));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("outfits file: ") + e.what());
  }

  auto resolve = [&](const std::string& ref) -> std::optional<std::size_t> {
    const auto it = refs.find(ref);
    const std::string& id = it == refs.end() ? ref : it->second;
    if (!data.items.contains(id)) return std::nullopt;
    return data.items.index_of(id);
  };
  auto add_outfit = [&](std::string id, const std::vector<std::string>& members, int label, bool by_ref) {
    Outfit o;
    o.id = std::move(id);
    o.label = label;
    for (const auto& m : members) {
      const auto idx = by_ref ? resolve(m) : (data.items.contains(m) ? std::optional(data.items.index_of(m)) : std::nullopt);
      if (!idx) {
        ++stats.missing_items;
        continue;
      }
      if (std::find(o.items.begin(), o.items.end(), *idx) == o.items.end()) o.items.push_back(*idx);
    }
    if (o.items.size() < 2) {
      ++stats.dropped_outfits;
      return;
    }
    data.outfits.push_back(std::move(o));
  };

  if (src.compat) {
    std::ifstream in(*src.compat);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + src.compat->string());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      std::istringstream ss(line);
      int label = 0;
      if (!(ss >> label)) continue;
      if (label != 0 && label != 1) throw Error(ErrorCode::SchemaError, "compat label must be 0 or 1: " + line);
      std::vector<std::string> members;
      for (std::string r; ss >> r;) members.push_back(r);
      add_outfit("c" + std::to_string(n++), members, label, true);
    }
  } else {
    for (const auto& [set_id, ids] : listed) add_outfit(set_id, ids, 1, false);
  }

  if (src.fitb) {
    try {
      for (const auto& q : read_json(*src.fitb)) {
        const auto question = q.at("question").get<std::vector<std::string>>();
        const auto answers = q.at("answers").get<std::vector<std::string>>();
        if (answers.size() != 4 || question.empty()) {
          ++stats.dropped_queries;
          continue;
        }
        FitbQuery fq;
        bool ok = true;
        for (const auto& r : question) {
          const auto idx = resolve(r);
          if (!idx) ok = false; else fq.partial.push_back(*idx);
        }
        int answer = -1;
        for (std::size_t c = 0; c < 4; ++c) {
          const auto idx = resolve(answers[c]);
          if (!idx) ok = false; else fq.candidates[c] = *idx;
          if (answer < 0 && set_of(answers[c]) == set_of(question.front())) answer = static_cast<int>(c);
        }
        if (!ok || answer < 0) {
          ++stats.dropped_queries;
          continue;
        }
        fq.answer = answer;
        data.fitb.push_back(std::move(fq));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("fitb file: ") + e.what());
    }
  }

  data.dropped_outfits = stats.dropped_outfits;
  if (stats.missing_items || stats.dropped_outfits || stats.dropped_queries) {
    spdlog::warn("convert: {} missing item refs, {} outfits dropped, {} fitb queries dropped", stats.missing_items,
                 stats.dropped_outfits, stats.dropped_queries);
  }
  if (stats_out) *stats_out = stats;
  return data;
}

}  // namespace pcmp
