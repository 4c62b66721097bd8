#pragma once

#include <filesystem>

#include "json.hpp"
#include "pcmp/model.hpp"

namespace pcmp {

inline constexpr char kCheckpointMagic[4] = {'P', 'C', 'M', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  nlohmann::json meta;  // hyperparameters from the sidecar
};

/// Binary layout, little-endian: "PCMP", u32 version, then
/// per tensor (in `tensors()` order) u32 rank, u32 dims[rank], f64 data
/// row-major. A JSON sidecar `<path>.json` records d, C, lambda and dims;
/// `extra_meta` keys are merged into it.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const nlohmann::json& extra_meta = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

}  // namespace pcmp
