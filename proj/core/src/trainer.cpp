#include "pcmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <spdlog/spdlog.h>

#include "pcmp/errors.hpp"
#include "pcmp/evaluator.hpp"
#include "pcmp/losses.hpp"
#include "pcmp/optimizer.hpp"

namespace pcmp {

using nlohmann::json;

void validate(const TrainConfig& c) {
  if (c.C < 1) throw Error(ErrorCode::InvalidArgument, "C must be >= 1");
  if (!(c.lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (c.recluster_period < 1) throw Error(ErrorCode::InvalidArgument, "recluster period must be >= 1");
  if (c.warmup_epochs < 0) throw Error(ErrorCode::InvalidArgument, "warmup epochs must be >= 0");
  if (c.epochs < 0) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 0");
  if (c.batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (!(c.lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(c.replace_fraction > 0.0 && c.replace_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "replace fraction must lie in (0, 1]");
  }
}

json to_json(const TrainConfig& c) {
  return {
      {"C", c.C},
      {"lambda", c.lambda},
      {"recluster_period", c.recluster_period},
      {"warmup_epochs", c.warmup_epochs},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr", c.lr},
      {"seed", c.seed},
      {"graph_kind", to_string(c.graph_kind)},
      {"loss", c.loss == LossKind::Joint ? "joint" : "bce"},
      {"replace_fraction", c.replace_fraction},
      {"hidden", c.hidden},
      {"embed_dim", c.embed_dim},
      {"sage_layers", c.sage_layers},
  };
}

json to_json(const TrainReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json epochs = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"l1", e.l1}, {"l2", e.l2}, {"total", e.total}, {"pairs", e.pairs},
                      {"local_pairs", e.local_pairs}, {"skipped_local", e.skipped_local},
                      {"val_auc", opt(e.val_auc)}, {"val_fitb", opt(e.val_fitb)}});
  }
  json batches = json::array();
  for (const auto& b : r.batches) {
    batches.push_back({{"epoch", b.epoch}, {"l1", b.l1}, {"l2", b.l2}, {"total", b.total}, {"pairs", b.pairs}});
  }
  json rounds = json::array();
  for (const auto& rd : r.rounds) {
    rounds.push_back({{"epoch", rd.epoch}, {"z", rd.z}, {"m_pos", rd.m_pos}, {"m_neg", rd.m_neg},
                      {"negative_clusters", rd.negative_clusters}, {"consistent", rd.consistent}});
  }
  return {{"epochs", epochs}, {"batches", batches}, {"rounds", rounds}, {"skipped_local", r.skipped_local}};
}

namespace {

constexpr int kNoPseudoLabel = -1;

struct PairLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  bool local = false;
};

class Trainer {
 public:
  Trainer(const Dataset& data, const TrainConfig& cfg, const Dataset* validation, const EpochCallback& cb)
      : data_(data), cfg_(cfg), validation_(validation), on_epoch_(cb), rng_(cfg.seed) {}

  TrainResult run() {
    validate(cfg_);
    if (data_.items.size() == 0) throw Error(ErrorCode::InvalidArgument, "dataset has no items");
    for (std::size_t i = 0; i < data_.outfits.size(); ++i) {
      if (data_.outfits[i].label == 1) positives_.push_back(i);
    }
    if (positives_.empty()) throw Error(ErrorCode::InvalidArgument, "training needs at least one positive outfit");

    const bool joint = cfg_.loss == LossKind::Joint;
    ModelConfig mc;
    mc.input_dim = data_.items.dim();
    mc.hidden = cfg_.hidden;
    mc.embed_dim = cfg_.embed_dim;
    mc.sage_layers = cfg_.sage_layers;
    mc.n_classes = joint ? cfg_.C + 1 : 2;
    mc.graph_kind = cfg_.graph_kind;

    TrainResult result;
    result.params = make_model(mc, rng_);
    fit_standardization(result.params, data_.items);
    if (cfg_.zero_init_head) {
      result.params.head.W.fill(0.0);
      std::fill(result.params.head.b.begin(), result.params.head.b.end(), 0.0);
    }
    auto& params = result.params;
    AdamState adam = make_adam(params);

    result.clustering_set = data_.outfits;
    const bool has_negatives = std::any_of(data_.outfits.begin(), data_.outfits.end(),
                                           [](const Outfit& o) { return o.label == 0; });
    if (joint && !has_negatives) {
      for (std::size_t p : positives_) {
        result.clustering_set.push_back(
            sample_negative(data_.outfits[p], data_.items.size(), rng_, cfg_.replace_fraction));
      }
    }

    const int eval_every = cfg_.eval_every > 0 ? cfg_.eval_every : cfg_.recluster_period;
    std::vector<int> pseudo_pos(data_.outfits.size(), 1);
    const ClusterState* prev = nullptr;

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      const bool warming = joint && epoch < cfg_.warmup_epochs;
      if (joint && !warming && (epoch - cfg_.warmup_epochs) % cfg_.recluster_period == 0) {
        result.final_round = generate_pseudo_labels(params, data_.items, result.clustering_set, cfg_.C,
                                                    cfg_.seed + static_cast<std::uint64_t>(epoch), prev);
        prev = &result.final_round.state;
        record_round(result, epoch);
        for (std::size_t p : positives_) pseudo_pos[p] = result.final_round.pseudo.labels[p];
      }

      std::shuffle(positives_.begin(), positives_.end(), rng_);
      EpochLog log;
      log.epoch = epoch;
      for (std::size_t start = 0; start < positives_.size(); start += cfg_.batch_size) {
        const std::size_t end = std::min(start + cfg_.batch_size, positives_.size());
        ModelParams grads = zeros_like(params);
        const double scale = 1.0 / static_cast<double>(end - start);
        BatchLog batch;
        batch.epoch = epoch;
        for (std::size_t k = start; k < end; ++k) {
          const Outfit& pos = data_.outfits[positives_[k]];
          Outfit neg = sample_negative(pos, data_.items.size(), rng_, cfg_.replace_fraction);
          const PairLoss pl = pair_step(params, pos, neg, warming ? kNoPseudoLabel : pseudo_pos[positives_[k]],
                                        scale, grads);
          batch.l1 += pl.l1 * scale;
          batch.l2 += pl.l2 * scale;
          ++batch.pairs;
          if (pl.local) {
            ++log.local_pairs;
          } else if (joint) {
            ++log.skipped_local;
          }
        }
        batch.total = batch.l1 + cfg_.lambda * batch.l2;
        optimizer_step(params, grads, adam, cfg_.lr);
        const double w = static_cast<double>(batch.pairs);
        log.l1 += batch.l1 * w;
        log.l2 += batch.l2 * w;
        log.pairs += batch.pairs;
        result.report.batches.push_back(batch);
      }
      log.l1 /= static_cast<double>(log.pairs);
      log.l2 /= static_cast<double>(log.pairs);
      log.total = log.l1 + cfg_.lambda * log.l2;
      result.report.skipped_local += log.skipped_local;

      if (validation_ && ((epoch + 1) % eval_every == 0 || epoch + 1 == cfg_.epochs)) {
        const EvalReport ev = evaluate(params, *validation_);
        log.val_auc = ev.cp_auc;
        log.val_fitb = ev.fitb_accuracy;
      }
      spdlog::info("epoch {:>3}  l1 {:.4f}  l2 {:.4f}  total {:.4f}{}", epoch, log.l1, log.l2, log.total,
                   log.val_auc ? fmt::format("  val_auc {:.4f}  val_fitb {:.4f}", *log.val_auc,
                                             log.val_fitb.value_or(0.0))
                               : std::string());
      result.report.epochs.push_back(log);
      if (on_epoch_) on_epoch_(log);
    }
    return result;
  }

 private:
  void record_round(TrainResult& result, int epoch) {
    const auto& round = result.final_round;
    std::vector<int> y;
    for (const auto& o : result.clustering_set) y.push_back(o.label);
    RoundLog rl;
    rl.epoch = epoch;
    rl.z = round.state.z;
    rl.m_pos = round.state.m_pos;
    rl.m_neg = round.state.m_neg;
    rl.negative_clusters = static_cast<std::size_t>(std::count(rl.z.begin(), rl.z.end(), 0));
    rl.consistent = pseudo_labels_consistent(round.pseudo, y, round.state);
    if (!rl.consistent || rl.negative_clusters != 1) {
      throw Error(ErrorCode::NoEligibleCluster, "pseudo labels violate the cluster-label constraint");
    }
    spdlog::debug("recluster at epoch {}: z = [{}]", epoch, fmt::join(rl.z, ","));
    result.report.rounds.push_back(std::move(rl));
  }

  PairLoss pair_step(const ModelParams& params, const Outfit& pos, const Outfit& neg, int pseudo, double scale,
                     ModelParams& grads) {
    PairLoss out;
    const auto fp = forward_outfit(params, data_.items.features(pos.items));
    const auto fn = forward_outfit(params, data_.items.features(neg.items));
    if (pseudo == kNoPseudoLabel) {
      // no clusters yet: binary loss on the summed positive classes
      out.l1 = loss_local(compat_probability(fp.probs), compat_probability(fn.probs));
      backward_scaled(params, fp, compat_bce_grad(fp.probs, true), scale, grads);
      backward_scaled(params, fn, compat_bce_grad(fn.probs, false), scale, grads);
    } else {
      const int pos_label = cfg_.loss == LossKind::Joint ? pseudo : 1;
      out.l1 = cross_entropy(fp.probs, pos_label) + cross_entropy(fn.probs, 0);
      backward_scaled(params, fp, cross_entropy_grad(fp.probs, pos_label), scale, grads);
      backward_scaled(params, fn, cross_entropy_grad(fn.probs, 0), scale, grads);
    }

    if (cfg_.loss != LossKind::Joint) return out;
    const OutfitPair pair = make_pair(pos, neg);
    const auto sub_pos = without(pos.items, pair.shared);
    const auto sub_neg = without(neg.items, pair.shared);
    if (pair.shared.empty() || sub_pos.size() < 2 || sub_neg.size() < 2) return out;
    out.local = true;
    const auto sp = forward_outfit(params, data_.items.features(sub_pos));
    const auto sn = forward_outfit(params, data_.items.features(sub_neg));
    out.l2 = loss_local(compat_probability(sp.probs), compat_probability(sn.probs));
    if (cfg_.lambda > 0.0) {
      backward_scaled(params, sp, compat_bce_grad(sp.probs, true), scale * cfg_.lambda, grads);
      backward_scaled(params, sn, compat_bce_grad(sn.probs, false), scale * cfg_.lambda, grads);
    }
    return out;
  }

  static void backward_scaled(const ModelParams& params, const OutfitForward& f, std::vector<double> dlogits,
                              double scale, ModelParams& grads) {
    for (double& g : dlogits) g *= scale;
    backward_outfit(params, f, dlogits, grads);
  }

  const Dataset& data_;
  const TrainConfig& cfg_;
  const Dataset* validation_;
  const EpochCallback& on_epoch_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> positives_;
};

}  // namespace

TrainResult train(const Dataset& data, const TrainConfig& config, const Dataset* validation,
                  const EpochCallback& on_epoch) {
  return Trainer(data, config, validation, on_epoch).run();
}

TrainResult train_binary_baseline(const Dataset& data, TrainConfig config, const Dataset* validation,
                                  const EpochCallback& on_epoch) {
  config.loss = LossKind::Binary;
  config.C = 1;
  return Trainer(data, config, validation, on_epoch).run();
}

}  // namespace pcmp
