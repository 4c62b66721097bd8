#pragma once

#include <random>
#include <span>
#include <vector>

#include "pcmp/matrix.hpp"
#include "pcmp/relgraph.hpp"

namespace pcmp {

/// y = W x + b, W is out x in.
struct DenseLayer {
  Matrix W;
  std::vector<double> b;

  std::size_t in() const noexcept { return W.cols(); }
  std::size_t out() const noexcept { return W.rows(); }
};

DenseLayer make_dense(std::size_t out, std::size_t in);
/// Uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) on weights and bias.
void init_uniform(DenseLayer& layer, std::mt19937_64& rng);

enum class Activation { Identity, ReLU };

double dot(std::span<const double> a, std::span<const double> b);

/// Row-wise affine map: n x in -> n x out.
Matrix dense_forward(const Matrix& x, const DenseLayer& layer);
/// Accumulates dW, db into `grad` and returns dL/dx (empty when !need_dx).
Matrix dense_backward(const Matrix& x, const Matrix& dy, const DenseLayer& layer, DenseLayer& grad,
                      bool need_dx = true);

void relu_inplace(Matrix& m);

using Adjacency = std::vector<std::vector<NodeIndex>>;

/// Neighbor mean per node; zero vector for isolated nodes.
Matrix mean_aggregate(const Matrix& h, const Adjacency& neighbors);

struct SageCache {
  Matrix concat;  // [h_v, m_v] per node
  Matrix pre;     // W [h_v, m_v] + b
};

/// h'_v = act(W [h_v, mean_{u in N(v)} h_u] + b). Throws ShapeMismatch when W
/// is not d_out x 2 d_in or the adjacency does not cover every row.
Matrix sage_layer_forward(const Matrix& h, const Adjacency& neighbors, const DenseLayer& layer,
                          Activation act = Activation::ReLU, SageCache* cache = nullptr);
/// Returns dL/dh given dL/dh' and accumulates parameter gradients.
Matrix sage_layer_backward(const SageCache& cache, const Adjacency& neighbors, const Matrix& dout,
                           const DenseLayer& layer, DenseLayer& grad,
                           Activation act = Activation::ReLU);

}  // namespace pcmp
