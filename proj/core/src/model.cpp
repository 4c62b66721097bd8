#include "pcmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcmp/errors.hpp"
#include "pcmp/outfit_data.hpp"

namespace pcmp {

ModelParams make_model(const ModelConfig& config, std::mt19937_64& rng) {
  if (config.n_classes < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 classes");
  if (config.sage_layers < 1) throw Error(ErrorCode::InvalidArgument, "need at least 1 sage layer");
  ModelParams p;
  p.config = config;
  p.feature_shift.assign(config.input_dim, 0.0);
  p.feature_scale.assign(config.input_dim, 1.0);
  p.embed = make_dense(config.hidden, config.input_dim);
  init_uniform(p.embed, rng);
  for (std::size_t l = 0; l < config.sage_layers; ++l) {
    p.sage.push_back(make_dense(config.hidden, 2 * config.hidden));
    init_uniform(p.sage.back(), rng);
  }
  p.proj = make_dense(config.embed_dim, config.hidden);
  init_uniform(p.proj, rng);
  p.head = make_dense(config.n_classes, config.embed_dim);
  init_uniform(p.head, rng);
  return p;
}

ModelParams make_model(const ModelConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_model(config, rng);
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  for (auto& t : tensors(z)) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

void fit_standardization(ModelParams& params, const ItemTable& items) {
  const std::size_t d = params.config.input_dim;
  if (items.dim() != d) {
    throw Error(ErrorCode::ShapeMismatch, "item dimension " + std::to_string(items.dim()) +
                                              " does not match model input " + std::to_string(d));
  }
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  const double n = static_cast<double>(items.size());
  if (items.size() == 0) return;
  for (const auto& it : items.items()) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += it.feature[c];
  }
  for (double& m : mean) m /= n;
  for (const auto& it : items.items()) {
    for (std::size_t c = 0; c < d; ++c) sq[c] += (it.feature[c] - mean[c]) * (it.feature[c] - mean[c]);
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(sq[c] / n);
    params.feature_shift[c] = mean[c];
    params.feature_scale[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

namespace {

template <typename P>
std::vector<TensorRef> collect(P& params) {
  auto span_of = [](auto& v) {
    return std::span<double>(const_cast<double*>(v.data()), v.size());
  };
  std::vector<TensorRef> out;
  const std::size_t d = params.feature_shift.size();
  out.push_back({"feature_shift", span_of(params.feature_shift), {d}, false});
  out.push_back({"feature_scale", span_of(params.feature_scale), {d}, false});
  auto dense = [&](const std::string& name, auto& layer) {
    auto w = layer.W.values();
    out.push_back({name + ".W", std::span<double>(const_cast<double*>(w.data()), w.size()),
                   {layer.W.rows(), layer.W.cols()}, true});
    out.push_back({name + ".b", span_of(layer.b), {layer.b.size()}, true});
  };
  dense("embed", params.embed);
  for (std::size_t l = 0; l < params.sage.size(); ++l) dense("sage" + std::to_string(l), params.sage[l]);
  dense("proj", params.proj);
  dense("head", params.head);
  return out;
}

}  // namespace

std::vector<TensorRef> tensors(ModelParams& params) { return collect(params); }
std::vector<TensorRef> tensors(const ModelParams& params) { return collect(params); }

void check_same_shape(const ModelParams& a, const ModelParams& b) {
  const auto ta = tensors(a), tb = tensors(b);
  if (ta.size() != tb.size()) throw Error(ErrorCode::ShapeMismatch, "tensor count differs");
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].dims != tb[i].dims) throw Error(ErrorCode::ShapeMismatch, "shape differs at " + ta[i].name);
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

double compat_probability(std::span<const double> softmax_scores) {
  double p = 0.0;
  for (std::size_t c = 1; c < softmax_scores.size(); ++c) p += softmax_scores[c];
  return std::clamp(p, 0.0, 1.0);
}

namespace {

Matrix standardize(const ModelParams& params, const Matrix& raw) {
  if (raw.cols() != params.config.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "item features have " + std::to_string(raw.cols()) +
                                              " columns, model expects " +
                                              std::to_string(params.config.input_dim));
  }
  Matrix x(raw.rows(), raw.cols());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    for (std::size_t c = 0; c < raw.cols(); ++c) {
      x(r, c) = (raw(r, c) - params.feature_shift[c]) * params.feature_scale[c];
    }
  }
  return x;
}

Matrix node_features(const GraphStructure& g, const Matrix& z) {
  Matrix h(g.n_nodes(), z.cols());
  for (std::size_t k = 0; k < g.n_nodes(); ++k) {
    const auto [i, j] = g.node_items[k];
    auto out = h.row(k);
    const auto zi = z.row(i), zj = z.row(j);
    if (g.kind == GraphKind::Relation) {
      for (std::size_t c = 0; c < z.cols(); ++c) out[c] = zi[c] * zj[c];
    } else {
      std::copy(zi.begin(), zi.end(), out.begin());
    }
  }
  return h;
}

std::vector<std::size_t> canonical_order(const Matrix& raw) {
  std::vector<std::size_t> order(raw.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = raw.row(a), rb = raw.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

}  // namespace

RelationGraph build_graph(const ModelParams& params, const Matrix& item_features) {
  auto g = cached_structure(params.config.graph_kind, item_features.rows());
  const Matrix z = dense_forward(standardize(params, item_features), params.embed);
  return {g, node_features(*g, z)};
}

std::vector<double> graph_embed(const RelationGraph& graph, const ModelParams& params) {
  if (!graph.structure || graph.n_nodes() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no nodes");
  Matrix h = graph.node_features;
  for (const auto& layer : params.sage) h = sage_layer_forward(h, graph.structure->neighbors, layer);
  const Matrix proj = dense_forward(h, params.proj);
  std::vector<double> pooled(proj.row(0).begin(), proj.row(0).end());
  for (std::size_t r = 1; r < proj.rows(); ++r) {
    for (std::size_t c = 0; c < proj.cols(); ++c) pooled[c] = std::max(pooled[c], proj(r, c));
  }
  return pooled;
}

std::vector<double> predict(const RelationGraph& graph, const ModelParams& params) {
  const auto emb = graph_embed(graph, params);
  Matrix e(1, emb.size());
  std::copy(emb.begin(), emb.end(), e.row(0).begin());
  const Matrix logits = dense_forward(e, params.head);
  return softmax(logits.row(0));
}

OutfitForward forward_outfit(const ModelParams& params, const Matrix& item_features) {
  if (item_features.rows() < 2) throw Error(ErrorCode::TooFewItems, "outfit needs at least 2 items");
  OutfitForward f;
  f.order = canonical_order(item_features);
  Matrix sorted(item_features.rows(), item_features.cols());
  for (std::size_t r = 0; r < f.order.size(); ++r) {
    const auto src = item_features.row(f.order[r]);
    std::copy(src.begin(), src.end(), sorted.row(r).begin());
  }
  f.graph = cached_structure(params.config.graph_kind, sorted.rows());
  f.x = standardize(params, sorted);
  f.z = dense_forward(f.x, params.embed);
  f.h0 = node_features(*f.graph, f.z);

  const Matrix* h = &f.h0;
  f.sage.resize(params.sage.size());
  f.hidden.reserve(params.sage.size());
  for (std::size_t l = 0; l < params.sage.size(); ++l) {
    f.hidden.push_back(sage_layer_forward(*h, f.graph->neighbors, params.sage[l], Activation::ReLU, &f.sage[l]));
    h = &f.hidden.back();
  }
  f.projected = dense_forward(*h, params.proj);

  const std::size_t e = f.projected.cols();
  f.embedding.assign(f.projected.row(0).begin(), f.projected.row(0).end());
  f.argmax.assign(e, 0);
  for (std::size_t r = 1; r < f.projected.rows(); ++r) {
    for (std::size_t c = 0; c < e; ++c) {
      if (f.projected(r, c) > f.embedding[c]) {
        f.embedding[c] = f.projected(r, c);
        f.argmax[c] = r;
      }
    }
  }
  f.logits.resize(params.head.out());
  for (std::size_t o = 0; o < params.head.out(); ++o) {
    f.logits[o] = params.head.b[o] + dot(params.head.W.row(o), f.embedding);
  }
  f.probs = softmax(f.logits);
  return f;
}

void backward_outfit(const ModelParams& params, const OutfitForward& f,
                     std::span<const double> dlogits, ModelParams& grads) {
  if (dlogits.size() != params.head.out()) throw Error(ErrorCode::ShapeMismatch, "dlogits length");
  // Head.
  std::vector<double> demb(f.embedding.size(), 0.0);
  for (std::size_t o = 0; o < params.head.out(); ++o) {
    const double g = dlogits[o];
    grads.head.b[o] += g;
    auto gw = grads.head.W.row(o);
    const auto w = params.head.W.row(o);
    for (std::size_t c = 0; c < demb.size(); ++c) {
      gw[c] += g * f.embedding[c];
      demb[c] += g * w[c];
    }
  }
  // Max pool routes each dimension to its argmax node.
  Matrix dproj(f.projected.rows(), f.projected.cols());
  for (std::size_t c = 0; c < demb.size(); ++c) dproj(f.argmax[c], c) = demb[c];

  const Matrix& last = f.hidden.empty() ? f.h0 : f.hidden.back();
  Matrix dh = dense_backward(last, dproj, params.proj, grads.proj);
  for (std::size_t l = params.sage.size(); l-- > 0;) {
    dh = sage_layer_backward(f.sage[l], f.graph->neighbors, dh, params.sage[l], grads.sage[l]);
  }

  // Node features back onto item embeddings.
  Matrix dz(f.z.rows(), f.z.cols());
  for (std::size_t k = 0; k < f.graph->n_nodes(); ++k) {
    const auto [i, j] = f.graph->node_items[k];
    const auto dk = dh.row(k);
    auto dzi = dz.row(i);
    if (f.graph->kind == GraphKind::Relation) {
      auto dzj = dz.row(j);
      const auto zi = f.z.row(i), zj = f.z.row(j);
      for (std::size_t c = 0; c < dk.size(); ++c) {
        dzi[c] += dk[c] * zj[c];
        dzj[c] += dk[c] * zi[c];
      }
    } else {
      for (std::size_t c = 0; c < dk.size(); ++c) dzi[c] += dk[c];
    }
  }
  dense_backward(f.x, dz, params.embed, grads.embed, false);
}

}  // namespace pcmp
