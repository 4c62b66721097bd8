#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pcmp/model.hpp"
#include "pcmp/outfit_data.hpp"

namespace httplib {
class Server;
}

namespace pcmp {

inline constexpr std::size_t kDefaultPoolSize = 2000;

/// Everything a request may read. Built once, never mutated afterwards.
struct ServiceState {
  ModelParams params;
  nlohmann::json meta;
  nlohmann::json cluster_report;  // null when no report was found
  ItemTable items;
  std::vector<std::size_t> pool;  // candidate item indices, ascending
};

struct ServiceOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> clusters;  // default: clusters.json beside the checkpoint
  std::size_t pool_size = kDefaultPoolSize;
  std::uint64_t pool_seed = 0;
};

/// Seeded sample of min(pool_size, n_items) distinct indices, sorted.
std::vector<std::size_t> sample_pool(std::size_t n_items, std::size_t pool_size, std::uint64_t seed);

std::shared_ptr<const ServiceState> load_service_state(const ServiceOptions& options);

struct Reply {
  int status = 200;
  nlohmann::json body;
};

/// Request handlers as plain functions of (state, request). They return 503
/// until a state is installed.
class Service {
 public:
  Service() = default;
  explicit Service(std::shared_ptr<const ServiceState> state) : state_(std::move(state)) {}

  void install(std::shared_ptr<const ServiceState> state);
  std::shared_ptr<const ServiceState> state() const;

  Reply score(const nlohmann::json& request) const;
  Reply recommend(const nlohmann::json& request) const;
  Reply clusters() const;
  /// `ids` is the raw comma-separated query value; empty means no ids.
  Reply items(const std::string& ids) const;

  /// Registers the endpoints, plus a static mount at "/" when given.
  void bind(httplib::Server& server, const std::optional<std::filesystem::path>& static_dir = std::nullopt) const;

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ServiceState> state_;
};

}  // namespace pcmp
