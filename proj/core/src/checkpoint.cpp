#include "pcmp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "pcmp/errors.hpp"

namespace pcmp {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

using nlohmann::json;

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  return checkpoint.string() + ".json";
}

namespace {

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::IoError, "truncated checkpoint " + path.string());
  return v;
}

ModelConfig config_from(const json& meta) {
  ModelConfig c;
  c.input_dim = meta.at("d").get<std::size_t>();
  c.hidden = meta.at("hidden").get<std::size_t>();
  c.embed_dim = meta.at("embed_dim").get<std::size_t>();
  c.n_classes = meta.at("n_classes").get<std::size_t>();
  c.sage_layers = meta.at("sage_layers").get<std::size_t>();
  c.graph_kind = parse_graph_kind(meta.at("graph_kind").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, const json& extra_meta) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
    out.write(kCheckpointMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    for (const auto& t : tensors(params)) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
      for (std::size_t d : t.dims) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
      out.write(reinterpret_cast<const char*>(t.values.data()),
                static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing checkpoint " + path.string());
  }
  const auto& c = params.config;
  json meta = {
      {"format", "PCMP"},
      {"version", kCheckpointVersion},
      {"d", c.input_dim},
      {"hidden", c.hidden},
      {"embed_dim", c.embed_dim},
      {"n_classes", c.n_classes},
      {"C", c.n_classes - 1},
      {"sage_layers", c.sage_layers},
      {"graph_kind", to_string(c.graph_kind)},
  };
  meta["tensors"] = json::array();
  for (const auto& t : tensors(params)) meta["tensors"].push_back({{"name", t.name}, {"dims", t.dims}});
  for (const auto& [k, v] : extra_meta.items()) meta[k] = v;
  std::ofstream side(sidecar_path(path), std::ios::binary);
  if (!side) throw Error(ErrorCode::IoError, "cannot write " + sidecar_path(path).string());
  side << meta.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck;
  {
    std::ifstream side(sidecar_path(path));
    if (!side) throw Error(ErrorCode::IoError, "missing checkpoint sidecar " + sidecar_path(path).string());
    try {
      ck.meta = json::parse(side);
      ck.params = make_model(config_from(ck.meta), 0);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, "checkpoint sidecar: " + std::string(e.what()));
    }
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw Error(ErrorCode::SchemaError, "bad checkpoint magic in " + path.string());
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::SchemaError, "unsupported checkpoint version " + std::to_string(version));
  }
  for (auto& t : tensors(ck.params)) {
    const auto rank = get<std::uint32_t>(in, path);
    if (rank != t.dims.size()) throw Error(ErrorCode::ShapeMismatch, "rank mismatch for " + t.name);
    for (std::size_t d : t.dims) {
      if (get<std::uint32_t>(in, path) != d) throw Error(ErrorCode::ShapeMismatch, "dim mismatch for " + t.name);
    }
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::IoError, "truncated checkpoint " + path.string());
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorCode::SchemaError, "trailing bytes in checkpoint " + path.string());
  }
  return ck;
}

}  // namespace pcmp
