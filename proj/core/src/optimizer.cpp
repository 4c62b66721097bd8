#include "pcmp/optimizer.hpp"

#include <cmath>

namespace pcmp {

AdamState make_adam(const ModelParams& params, AdamConfig config) {
  return {zeros_like(params), zeros_like(params), 0, config};
}

void optimizer_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
  check_same_shape(params, grads);
  check_same_shape(params, state.m);
  ++state.step;
  const auto& cfg = state.config;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto tp = tensors(params);
  const auto tg = tensors(grads);
  auto tm = tensors(state.m);
  auto tv = tensors(state.v);
  for (std::size_t t = 0; t < tp.size(); ++t) {
    if (!tp[t].trainable) continue;
    auto p = tp[t].values;
    const auto g = tg[t].values;
    auto m = tm[t].values;
    auto v = tv[t].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
    }
  }
}

}  // namespace pcmp
