// pcmp: palettes, convert, synth, train, eval, export-embeddings, serve.
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "httplib.h"
#include "pcmp/checkpoint.hpp"
#include "pcmp/clusterer.hpp"
#include "pcmp/errors.hpp"
#include "pcmp/evaluator.hpp"
#include "pcmp/log.hpp"
#include "pcmp/palette_cache.hpp"
#include "pcmp/polyvore.hpp"
#include "pcmp/service.hpp"
#include "pcmp/synthetic.hpp"
#include "pcmp/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(pcmp::ErrorCode code) {
  using pcmp::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    case ErrorCode::NoEligibleCluster:
    case ErrorCode::EmptyGraph:
    case ErrorCode::TooFewPoints:
    case ErrorCode::LabelOutOfRange:
      return kExitRuntime;
    default:
      return kExitData;  // bad or missing input
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pcmp::Error(pcmp::ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct PalettesArgs {
  std::string images, out;
  std::uint64_t seed = 0;
  std::size_t k = 3;
};

int run_palettes(const PalettesArgs& a) {
  const auto scan = pcmp::extract_directory_palettes(a.images, a.seed, a.k);
  for (const auto& f : scan.failures) spdlog::warn("skipped {}", f);
  if (scan.records.empty()) throw pcmp::Error(pcmp::ErrorCode::ZeroPixels, "no readable images in " + a.images);
  pcmp::write_palette_cache(a.out, scan.records);
  std::cerr << scan.records.size() << " palettes written, " << scan.failures.size() << " warnings\n";
  return kExitOk;
}

struct ConvertArgs {
  std::string images, palettes, outfits, compat, fitb, out;
  std::uint64_t seed = 0;
};

int run_convert(const ConvertArgs& a) {
  std::vector<pcmp::PaletteRecord> palettes;
  if (!a.palettes.empty()) {
    palettes = pcmp::read_palette_cache(a.palettes);
  } else {
    const auto scan = pcmp::extract_directory_palettes(a.images, a.seed);
    for (const auto& f : scan.failures) spdlog::warn("skipped {}", f);
    palettes = scan.records;
  }
  pcmp::PolyvoreSources src;
  src.outfits = a.outfits;
  if (!a.compat.empty()) src.compat = a.compat;
  if (!a.fitb.empty()) src.fitb = a.fitb;
  const auto data = pcmp::convert_polyvore(src, palettes);
  pcmp::save_dataset(data, a.out);
  std::cerr << data.items.size() << " items, " << data.outfits.size() << " outfits, " << data.fitb.size()
            << " fitb queries\n";
  return kExitOk;
}

struct SynthArgs {
  std::string out;
  std::size_t n = 1000, min_items = 3, max_items = 5;
  std::uint64_t seed = 0;
  double negative_slack = pcmp::SyntheticConfig{}.negative_slack;
  bool no_fitb = false;
};

int run_synth(const SynthArgs& a) {
  pcmp::SyntheticConfig cfg;
  cfg.n_outfits = a.n;
  cfg.min_items = a.min_items;
  cfg.max_items = a.max_items;
  cfg.seed = a.seed;
  cfg.make_fitb = !a.no_fitb;
  cfg.negative_slack = a.negative_slack;
  pcmp::save_dataset(pcmp::generate_synthetic(cfg), a.out);
  return kExitOk;
}

struct TrainArgs {
  std::string data, out, validation, graph = "relation", loss = "joint";
  pcmp::TrainConfig cfg;
};

int run_train(TrainArgs a) {
  a.cfg.graph_kind = pcmp::parse_graph_kind(a.graph);
  a.cfg.loss = a.loss == "joint" ? pcmp::LossKind::Joint : pcmp::LossKind::Binary;
  const auto data = pcmp::load_dataset(a.data);
  std::optional<pcmp::Dataset> val;
  if (!a.validation.empty()) val = pcmp::load_dataset(a.validation);

  const auto result = a.cfg.loss == pcmp::LossKind::Joint
                          ? pcmp::train(data, a.cfg, val ? &*val : nullptr)
                          : pcmp::train_binary_baseline(data, a.cfg, val ? &*val : nullptr);

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  json meta = {{"train_config", pcmp::to_json(a.cfg)}, {"lambda", a.cfg.lambda}};
  pcmp::save_checkpoint(dir / "model.pcmp", result.params, meta);
  write_json(dir / "train_report.json", pcmp::to_json(result.report));
  if (a.cfg.loss == pcmp::LossKind::Joint && !result.report.rounds.empty()) {
    write_json(dir / "clusters.json", pcmp::cluster_report(result.final_round, result.clustering_set));
  }
  if (a.cfg.loss == pcmp::LossKind::Joint && result.report.rounds.empty()) {
    spdlog::warn("no clustering round ran (warm-up covers every epoch); clusters.json not written");
  }
  std::cerr << "wrote " << (dir / "model.pcmp").string() << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string data, checkpoint;
};

int run_eval(const EvalArgs& a) {
  const auto ck = pcmp::load_checkpoint(a.checkpoint);
  const auto data = pcmp::load_dataset(a.data);
  std::cout << pcmp::to_json(pcmp::evaluate(ck.params, data)).dump(2) << '\n';
  return kExitOk;
}

struct ExportArgs {
  std::string data, checkpoint, clusters, out;
};

int run_export(const ExportArgs& a) {
  const auto ck = pcmp::load_checkpoint(a.checkpoint);
  const auto data = pcmp::load_dataset(a.data);
  std::optional<pcmp::ClusterState> state;
  if (!a.clusters.empty()) {
    std::ifstream in(a.clusters);
    if (!in) throw pcmp::Error(pcmp::ErrorCode::IoError, "cannot read " + a.clusters);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw pcmp::Error(pcmp::ErrorCode::SchemaError, a.clusters + ": " + e.what());
    }
    state = pcmp::cluster_state_from_json(j);
  }
  pcmp::export_embeddings(ck.params, data.items, data.outfits, state ? &*state : nullptr, a.out);
  return kExitOk;
}

struct ServeArgs {
  pcmp::ServiceOptions opt;
  std::string checkpoint, dataset, clusters, static_dir, bind = "127.0.0.1:8080";
};

httplib::Server* g_server = nullptr;

int run_serve(const ServeArgs& a) {
  auto opt = a.opt;
  opt.checkpoint = a.checkpoint;
  opt.dataset = a.dataset;
  if (!a.clusters.empty()) opt.clusters = a.clusters;
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw pcmp::Error(pcmp::ErrorCode::InvalidArgument, "--bind expects host:port");
  const std::string host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw pcmp::Error(pcmp::ErrorCode::InvalidArgument, "bad port in --bind " + a.bind);
  }

  httplib::Server server;
  pcmp::Service service;
  std::optional<fs::path> static_dir;
  if (!a.static_dir.empty()) static_dir = a.static_dir;
  service.bind(server, static_dir);
  // load before listening; requests arriving earlier would see 503
  service.install(pcmp::load_service_state(opt));

  g_server = &server;
  std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
  std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
  spdlog::info("listening on {}:{}", host, port);
  if (!server.listen(host, port)) {
    throw pcmp::Error(pcmp::ErrorCode::IoError, "cannot listen on " + a.bind);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  pcmp::configure_logging_from_env();
  CLI::App app{"pcmp - outfit color compatibility"};
  app.require_subcommand(1);

  PalettesArgs pal;
  auto* c_pal = app.add_subcommand("palettes", "Extract 3-color Lab palettes from a directory of item images");
  c_pal->add_option("--images", pal.images, "Directory of <item_id>.<ext> images")->required();
  c_pal->add_option("--out", pal.out, "Palette cache file (JSON lines)")->required();
  c_pal->add_option("--seed", pal.seed, "K-means seed");
  c_pal->add_option("--k", pal.k, "Colors per palette")->check(CLI::PositiveNumber);

  ConvertArgs conv;
  auto* c_conv = app.add_subcommand("convert", "Convert Polyvore-style outfit lists into the dataset schema");
  auto* o_img = c_conv->add_option("--images", conv.images, "Item image directory");
  auto* o_pal = c_conv->add_option("--palettes", conv.palettes, "Existing palette cache instead of --images");
  o_img->excludes(o_pal);
  c_conv->add_option("--outfits", conv.outfits, "Outfits JSON (set_id, items)")->required();
  c_conv->add_option("--compat", conv.compat, "Compatibility file, one 'label ref ref ...' per line");
  c_conv->add_option("--fitb", conv.fitb, "FITB questions JSON");
  c_conv->add_option("--out", conv.out, "Dataset JSON to write")->required();
  c_conv->add_option("--seed", conv.seed, "Palette K-means seed");

  SynthArgs syn;
  auto* c_syn = app.add_subcommand("synth", "Generate the 4-template synthetic dataset");
  c_syn->add_option("--out", syn.out, "Dataset JSON to write")->required();
  c_syn->add_option("--n", syn.n, "Number of outfits")->check(CLI::PositiveNumber);
  c_syn->add_option("--seed", syn.seed, "Generator seed");
  c_syn->add_option("--min-items", syn.min_items, "Smallest outfit")->check(CLI::Range(2, 64));
  c_syn->add_option("--max-items", syn.max_items, "Largest outfit")->check(CLI::Range(2, 64));
  c_syn->add_option("--negative-slack", syn.negative_slack,
                    "Degrees by which negatives and FITB distractors must miss every template; < 0 disables");
  c_syn->add_flag("--no-fitb", syn.no_fitb, "Skip FITB queries");

  TrainArgs tr;
  auto* c_tr = app.add_subcommand("train", "Train a model; writes model.pcmp, train_report.json, clusters.json");
  c_tr->add_option("--data", tr.data, "Training dataset JSON")->required();
  c_tr->add_option("--out", tr.out, "Output directory")->required();
  c_tr->add_option("--validation", tr.validation, "Dataset evaluated during training");
  c_tr->add_option("--graph", tr.graph, "relation | node")->check(CLI::IsMember({"relation", "node"}));
  c_tr->add_option("--loss", tr.loss, "joint | bce")->check(CLI::IsMember({"joint", "bce"}));
  c_tr->add_option("--C", tr.cfg.C, "Positive clusters")->check(CLI::PositiveNumber);
  c_tr->add_option("--lambda", tr.cfg.lambda, "Local loss weight")->check(CLI::NonNegativeNumber);
  c_tr->add_option("--recluster-period", tr.cfg.recluster_period, "Epochs between pseudo-label rounds")
      ->check(CLI::PositiveNumber);
  c_tr->add_option("--warmup-epochs", tr.cfg.warmup_epochs, "Compatibility-only epochs before the first clustering")
      ->check(CLI::NonNegativeNumber);
  c_tr->add_option("--epochs", tr.cfg.epochs, "Epochs")->check(CLI::NonNegativeNumber);
  c_tr->add_option("--batch-size", tr.cfg.batch_size, "Positive outfits per batch")->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", tr.cfg.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  c_tr->add_option("--seed", tr.cfg.seed, "Training seed");
  c_tr->add_option("--replace-fraction", tr.cfg.replace_fraction, "Share of items replaced in negatives")
      ->check(CLI::Range(0.0, 1.0));
  c_tr->add_option("--eval-every", tr.cfg.eval_every, "Validation cadence in epochs");

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "Print CP AUC / FITB accuracy / ARI as JSON");
  c_ev->add_option("--data", ev.data, "Dataset JSON")->required();
  c_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();

  ExportArgs ex;
  auto* c_ex = app.add_subcommand("export-embeddings", "Write outfit embeddings as CSV");
  c_ex->add_option("--data", ex.data, "Dataset JSON")->required();
  c_ex->add_option("--checkpoint", ex.checkpoint, "Checkpoint file")->required();
  c_ex->add_option("--clusters", ex.clusters, "clusters.json, adds pseudo labels");
  c_ex->add_option("--out", ex.out, "CSV file")->required();

  ServeArgs sv;
  auto* c_sv = app.add_subcommand("serve", "Serve /score, /recommend, /clusters and /items over HTTP");
  c_sv->add_option("--checkpoint", sv.checkpoint, "Checkpoint file")->required();
  c_sv->add_option("--dataset", sv.dataset, "Dataset JSON holding the item table")->required();
  c_sv->add_option("--clusters", sv.clusters, "Cluster report (default: clusters.json beside the checkpoint)");
  c_sv->add_option("--pool-size", sv.opt.pool_size, "Candidate pool size");
  c_sv->add_option("--pool-seed", sv.opt.pool_seed, "Candidate pool seed");
  c_sv->add_option("--bind", sv.bind, "host:port");
  c_sv->add_option("--static-dir", sv.static_dir, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_pal) return run_palettes(pal);
    if (*c_conv) {
      if (conv.images.empty() && conv.palettes.empty()) {
        std::cerr << "convert: one of --images or --palettes is required\n";
        return kExitUsage;
      }
      return run_convert(conv);
    }
    if (*c_syn) {
      if (syn.min_items > syn.max_items) {
        std::cerr << "synth: --min-items exceeds --max-items\n";
        return kExitUsage;
      }
      return run_synth(syn);
    }
    if (*c_tr) return run_train(tr);
    if (*c_ev) return run_eval(ev);
    if (*c_ex) return run_export(ex);
    if (*c_sv) return run_serve(sv);
  } catch (const pcmp::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
