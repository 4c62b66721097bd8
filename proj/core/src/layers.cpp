#include "pcmp/layers.hpp"

#include <algorithm>
#include <cmath>

#include "pcmp/errors.hpp"

namespace pcmp {

DenseLayer make_dense(std::size_t out, std::size_t in) {
  return {Matrix(out, in), std::vector<double>(out, 0.0)};
}

void init_uniform(DenseLayer& layer, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(layer.in()));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& w : layer.W.values()) w = u(rng);
  for (double& b : layer.b) b = u(rng);
}

double dot(std::span<const double> a, std::span<const double> b) {
  // Four fixed accumulators: vectorisable without reassociating at random.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

Matrix dense_forward(const Matrix& x, const DenseLayer& layer) {
  if (x.cols() != layer.in()) {
    throw Error(ErrorCode::ShapeMismatch, "dense input has " + std::to_string(x.cols()) +
                                              " columns, layer expects " + std::to_string(layer.in()));
  }
  Matrix y(x.rows(), layer.out());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    auto yr = y.row(r);
    for (std::size_t o = 0; o < layer.out(); ++o) yr[o] = layer.b[o] + dot(layer.W.row(o), xr);
  }
  return y;
}

Matrix dense_backward(const Matrix& x, const Matrix& dy, const DenseLayer& layer, DenseLayer& grad,
                      bool need_dx) {
  Matrix dx = need_dx ? Matrix(x.rows(), x.cols()) : Matrix();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    const auto dyr = dy.row(r);
    for (std::size_t o = 0; o < layer.out(); ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      grad.b[o] += g;
      auto gw = grad.W.row(o);
      for (std::size_t i = 0; i < xr.size(); ++i) gw[i] += g * xr[i];
      if (need_dx) {
        auto dxr = dx.row(r);
        const auto w = layer.W.row(o);
        for (std::size_t i = 0; i < xr.size(); ++i) dxr[i] += g * w[i];
      }
    }
  }
  return dx;
}

void relu_inplace(Matrix& m) {
  for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
}

Matrix mean_aggregate(const Matrix& h, const Adjacency& neighbors) {
  Matrix m(h.rows(), h.cols());
  for (std::size_t v = 0; v < h.rows(); ++v) {
    const auto& nb = neighbors[v];
    if (nb.empty()) continue;
    auto mv = m.row(v);
    for (NodeIndex u : nb) {
      const auto hu = h.row(u);
      for (std::size_t c = 0; c < h.cols(); ++c) mv[c] += hu[c];
    }
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (double& x : mv) x *= inv;
  }
  return m;
}

Matrix sage_layer_forward(const Matrix& h, const Adjacency& neighbors, const DenseLayer& layer,
                          Activation act, SageCache* cache) {
  const std::size_t d = h.cols();
  if (layer.in() != 2 * d) {
    throw Error(ErrorCode::ShapeMismatch, "sage weight expects " + std::to_string(layer.in()) +
                                              " inputs, got 2 x " + std::to_string(d));
  }
  if (neighbors.size() != h.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "adjacency covers " + std::to_string(neighbors.size()) +
                                              " nodes, features have " + std::to_string(h.rows()));
  }
  for (const auto& nb : neighbors) {
    for (NodeIndex u : nb) {
      if (u >= h.rows()) throw Error(ErrorCode::ShapeMismatch, "adjacency references a missing node");
    }
  }
  const Matrix m = mean_aggregate(h, neighbors);
  Matrix concat(h.rows(), 2 * d);
  for (std::size_t v = 0; v < h.rows(); ++v) {
    auto row = concat.row(v);
    std::copy(h.row(v).begin(), h.row(v).end(), row.begin());
    std::copy(m.row(v).begin(), m.row(v).end(), row.begin() + static_cast<std::ptrdiff_t>(d));
  }
  Matrix pre = dense_forward(concat, layer);
  Matrix out = pre;
  if (act == Activation::ReLU) relu_inplace(out);
  if (cache) {
    cache->concat = std::move(concat);
    cache->pre = std::move(pre);
  }
  return out;
}

Matrix sage_layer_backward(const SageCache& cache, const Adjacency& neighbors, const Matrix& dout,
                           const DenseLayer& layer, DenseLayer& grad, Activation act) {
  Matrix dpre = dout;
  if (act == Activation::ReLU) {
    auto dp = dpre.values();
    const auto pre = cache.pre.values();
    for (std::size_t i = 0; i < dp.size(); ++i) {
      if (pre[i] <= 0.0) dp[i] = 0.0;
    }
  }
  const Matrix dconcat = dense_backward(cache.concat, dpre, layer, grad);
  const std::size_t d = dconcat.cols() / 2;
  Matrix dh(dconcat.rows(), d);
  for (std::size_t v = 0; v < dconcat.rows(); ++v) {
    const auto dc = dconcat.row(v);
    auto dhv = dh.row(v);
    for (std::size_t c = 0; c < d; ++c) dhv[c] += dc[c];
    const auto& nb = neighbors[v];
    if (nb.empty()) continue;
    const double inv = 1.0 / static_cast<double>(nb.size());
    for (NodeIndex u : nb) {
      auto dhu = dh.row(u);
      for (std::size_t c = 0; c < d; ++c) dhu[c] += dc[d + c] * inv;
    }
  }
  return dh;
}

}  // namespace pcmp
