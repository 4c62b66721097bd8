#pragma once

#include "pcmp/model.hpp"

namespace pcmp {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;
  AdamConfig config;
};

AdamState make_adam(const ModelParams& params, AdamConfig config = {});

/// One bias-corrected Adam update of every trainable tensor. Throws
/// ShapeMismatch when grads or state do not match params.
void optimizer_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr);

}  // namespace pcmp
