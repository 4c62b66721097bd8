#pragma once

#include <functional>
#include <string>

#include "pcmp/model.hpp"

namespace pcmp {

struct GradCheckReport {
  double max_rel_error = 0.0;  // |analytic - numeric| / max(1, |analytic|)
  std::size_t checked = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
};

/// Central finite differences over every trainable entry of `params`.
GradCheckReport check_gradients(const ModelParams& params,
                                const std::function<double(const ModelParams&)>& loss,
                                const ModelParams& analytic, double eps = 1e-4);

}  // namespace pcmp
