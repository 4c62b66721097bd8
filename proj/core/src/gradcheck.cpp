#include "pcmp/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pcmp {

GradCheckReport check_gradients(const ModelParams& params,
                                const std::function<double(const ModelParams&)>& loss,
                                const ModelParams& analytic, double eps) {
  check_same_shape(params, analytic);
  ModelParams probe = params;
  auto tp = tensors(probe);
  const auto ta = tensors(analytic);
  GradCheckReport report;
  for (std::size_t t = 0; t < tp.size(); ++t) {
    if (!tp[t].trainable) continue;
    auto values = tp[t].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = loss(probe);
      values[i] = saved - eps;
      const double down = loss(probe);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = ta[t].values[i];
      const double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(a));
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_tensor = tp[t].name;
        report.worst_index = i;
      }
    }
  }
  return report;
}

}  // namespace pcmp
