#include "pcmp/service.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "pcmp/checkpoint.hpp"
#include "pcmp/clusterer.hpp"
#include "pcmp/colorlab.hpp"
#include "pcmp/errors.hpp"
#include "pcmp/evaluator.hpp"

namespace pcmp {

using nlohmann::json;

std::vector<std::size_t> sample_pool(std::size_t n_items, std::size_t pool_size, std::uint64_t seed) {
  std::vector<std::size_t> all(n_items);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (pool_size >= n_items) return all;
  // partial Fisher-Yates so the draw does not depend on the library's std::sample
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < pool_size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n_items - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(pool_size);
  std::sort(all.begin(), all.end());
  return all;
}

std::shared_ptr<const ServiceState> load_service_state(const ServiceOptions& opt) {
  auto state = std::make_shared<ServiceState>();
  Checkpoint ck = load_checkpoint(opt.checkpoint);
  state->params = std::move(ck.params);
  state->meta = std::move(ck.meta);
  Dataset data = load_dataset(opt.dataset);
  if (data.items.dim() != state->params.config.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "dataset feature dimension " + std::to_string(data.items.dim()) +
                                              " does not match checkpoint input " +
                                              std::to_string(state->params.config.input_dim));
  }
  state->items = std::move(data.items);
  state->pool = sample_pool(state->items.size(), opt.pool_size, opt.pool_seed);

  const auto clusters_path = opt.clusters.value_or(opt.checkpoint.parent_path() / "clusters.json");
  if (std::filesystem::exists(clusters_path)) {
    std::ifstream in(clusters_path);
    try {
      state->cluster_report = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, "cluster report " + clusters_path.string() + ": " + e.what());
    }
    cluster_state_from_json(state->cluster_report);  // validates
  } else if (opt.clusters) {
    throw Error(ErrorCode::IoError, "cannot open " + clusters_path.string());
  }
  spdlog::info("service state: {} items, pool {}, C = {}", state->items.size(), state->pool.size(),
               state->params.config.n_classes - 1);
  return state;
}

namespace {

Reply unavailable() { return {503, {{"error", "ServiceUnavailable"}, {"message", "model not loaded"}}}; }

Reply bad_request(std::string_view code, const std::string& message, json extra = json::object()) {
  extra["error"] = std::string(code);
  extra["message"] = message;
  return {400, std::move(extra)};
}

// Resolves ids strictly: any unknown id fails the whole request.
std::optional<Reply> resolve(const ItemTable& items, const std::vector<std::string>& ids,
                             std::vector<std::size_t>& out) {
  std::vector<std::string> unknown;
  for (const auto& id : ids) {
    if (items.contains(id)) {
      out.push_back(items.index_of(id));
    } else {
      unknown.push_back(id);
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown item ids:";
    for (const auto& u : unknown) msg += " " + u;
    return bad_request(to_string(ErrorCode::UnknownItem), msg, {{"unknown", unknown}});
  }
  return std::nullopt;
}

std::optional<std::vector<std::string>> id_list(const json& request, const char* key) {
  if (!request.is_object() || !request.contains(key) || !request[key].is_array()) return std::nullopt;
  std::vector<std::string> ids;
  for (const auto& v : request[key]) {
    if (!v.is_string()) return std::nullopt;
    ids.push_back(v.get<std::string>());
  }
  return ids;
}

bool has_duplicates(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

}  // namespace

void Service::install(std::shared_ptr<const ServiceState> state) {
  std::lock_guard lock(mu_);
  state_ = std::move(state);
}

std::shared_ptr<const ServiceState> Service::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

Reply Service::score(const json& request) const {
  const auto st = state();
  if (!st) return unavailable();
  const auto ids = id_list(request, "items");
  if (!ids) return bad_request(to_string(ErrorCode::SchemaError), "expected {\"items\": [ids]}");
  std::vector<std::size_t> members;
  if (auto err = resolve(st->items, *ids, members)) return *err;
  if (members.size() < 2) {
    return bad_request(to_string(ErrorCode::TooFewItems), "an outfit needs at least 2 items");
  }
  if (has_duplicates(members)) return bad_request(to_string(ErrorCode::SchemaError), "duplicate item ids");
  const auto probs = outfit_softmax(st->params, st->items, members);
  return {200,
          {{"probability", compat_probability(probs)}, {"softmax", probs}, {"predicted_class", predicted_class(probs)}}};
}

Reply Service::recommend(const json& request) const {
  const auto st = state();
  if (!st) return unavailable();
  const auto ids = id_list(request, "partial");
  if (!ids) return bad_request(to_string(ErrorCode::SchemaError), "expected {\"partial\": [ids], \"per_cluster\": k}");
  long long per_cluster = 10;
  if (request.contains("per_cluster")) {
    if (!request["per_cluster"].is_number_integer() || request["per_cluster"].get<long long>() < 0) {
      return bad_request(to_string(ErrorCode::SchemaError), "per_cluster must be a non-negative integer");
    }
    per_cluster = request["per_cluster"].get<long long>();
  }
  std::vector<std::size_t> partial;
  if (auto err = resolve(st->items, *ids, partial)) return *err;
  if (partial.empty()) return bad_request(to_string(ErrorCode::TooFewItems), "partial outfit needs at least 1 item");
  if (has_duplicates(partial)) return bad_request(to_string(ErrorCode::SchemaError), "duplicate item ids");
  if (st->pool.empty()) return bad_request(to_string(ErrorCode::PoolTooSmall), "candidate pool is empty");

  const std::size_t C = st->params.config.n_classes - 1;
  struct Scored {
    std::size_t item;
    double score;
  };
  std::vector<std::vector<Scored>> buckets(C);
  std::vector<std::size_t> members = partial;
  members.push_back(0);
  for (std::size_t cand : st->pool) {
    if (std::find(partial.begin(), partial.end(), cand) != partial.end()) continue;
    members.back() = cand;
    const auto probs = outfit_softmax(st->params, st->items, members);
    const int c = predicted_positive_cluster(probs);
    buckets[static_cast<std::size_t>(c - 1)].push_back({cand, probs[static_cast<std::size_t>(c)]});
  }

  json clusters = json::array();
  for (std::size_t c = 0; c < C; ++c) {
    auto& b = buckets[c];
    std::sort(b.begin(), b.end(), [&](const Scored& x, const Scored& y) {
      if (x.score != y.score) return x.score > y.score;
      return st->items[x.item].id < st->items[y.item].id;
    });
    json candidates = json::array();
    const std::size_t keep = std::min(b.size(), static_cast<std::size_t>(per_cluster));
    for (std::size_t i = 0; i < keep; ++i) {
      candidates.push_back({{"item_id", st->items[b[i].item].id}, {"score", b[i].score}});
    }
    clusters.push_back({{"cluster_id", c + 1}, {"candidates", std::move(candidates)}});
  }
  return {200, {{"clusters", std::move(clusters)}}};
}

Reply Service::clusters() const {
  const auto st = state();
  if (!st) return unavailable();
  if (st->cluster_report.is_null()) return {404, {{"error", "NotFound"}, {"message", "no cluster report loaded"}}};
  json out;
  out["clusters"] = st->cluster_report.at("clusters");
  constexpr std::size_t kExamples = 5;
  for (auto& c : out["clusters"]) c["examples"] = json::array();
  if (st->cluster_report.contains("samples")) {
    for (const auto& s : st->cluster_report["samples"]) {
      const auto k = s.at("cluster").get<std::size_t>();
      if (k >= out["clusters"].size()) continue;
      auto& ex = out["clusters"][k]["examples"];
      if (ex.size() < kExamples) ex.push_back(s.at("outfit_id"));
    }
  }
  return {200, std::move(out)};
}

Reply Service::items(const std::string& raw) const {
  const auto st = state();
  if (!st) return unavailable();
  std::vector<std::string> ids;
  std::stringstream ss(raw);
  for (std::string id; std::getline(ss, id, ',');) {
    if (!id.empty()) ids.push_back(id);
  }
  std::vector<std::size_t> idx;
  if (auto err = resolve(st->items, ids, idx)) return *err;
  json out = json::array();
  for (std::size_t i : idx) {
    const Item& item = st->items[i];
    json j = {{"item_id", item.id}, {"feature", item.feature}};
    if (item.feature.size() == 9) {
      json swatches = json::array();
      for (std::size_t s = 0; s < 3; ++s) {
        const LabColor lab{item.feature[3 * s], item.feature[3 * s + 1], item.feature[3 * s + 2]};
        const Rgb8 rgb = lab_to_rgb(lab);
        swatches.push_back({{"lab", {lab.L, lab.a, lab.b}}, {"rgb", {rgb.r, rgb.g, rgb.b}}});
      }
      j["swatches"] = std::move(swatches);
    }
    out.push_back(std::move(j));
  }
  return {200, std::move(out)};
}

void Service::bind(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir) const {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto parse = [](const httplib::Request& req) -> std::optional<json> {
    try {
      return json::parse(req.body);
    } catch (const json::exception&) {
      return std::nullopt;
    }
  };
  auto invalid = Reply{400, {{"error", std::string(to_string(ErrorCode::SchemaError))}, {"message", "body is not valid JSON"}}};

  server.Post("/score", [=, this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse(req);
    send(res, body ? score(*body) : invalid);
  });
  server.Post("/recommend", [=, this](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse(req);
    send(res, body ? recommend(*body) : invalid);
  });
  server.Get("/clusters", [=, this](const httplib::Request&, httplib::Response& res) { send(res, clusters()); });
  server.Get("/items", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, items(req.has_param("ids") ? req.get_param_value("ids") : std::string()));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", what);
    res.status = 500;
    res.set_content(json{{"error", "Internal"}, {"message", what}}.dump(), "application/json");
  });
  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      throw Error(ErrorCode::IoError, "static dir not found: " + static_dir->string());
    }
  }
}

}  // namespace pcmp
