#include "pcmp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcmp/errors.hpp"
#include "pcmp/model.hpp"

namespace pcmp {
namespace {

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
bool clamped(double p) { return p <= kProbClamp || p >= 1.0 - kProbClamp; }

void check_label(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
    throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " outside 0.." +
                                                std::to_string(probs.size() - 1));
  }
}

}  // namespace

double cross_entropy(std::span<const double> probs, int label) {
  check_label(probs, label);
  return -std::log(clamp_prob(probs[label]));
}

std::vector<double> cross_entropy_grad(std::span<const double> probs, int label) {
  check_label(probs, label);
  std::vector<double> g(probs.size(), 0.0);
  if (clamped(probs[label])) return g;
  for (std::size_t c = 0; c < probs.size(); ++c) g[c] = probs[c];
  g[label] -= 1.0;
  return g;
}

double loss_global(std::span<const double> probs_pos, int pseudo_pos,
                   std::span<const double> probs_neg, int pseudo_neg) {
  if (pseudo_pos < 1) throw Error(ErrorCode::LabelOutOfRange, "positive pseudo label must be >= 1");
  if (pseudo_neg != 0) throw Error(ErrorCode::LabelOutOfRange, "negative pseudo label must be 0");
  return cross_entropy(probs_pos, pseudo_pos) + cross_entropy(probs_neg, pseudo_neg);
}

double loss_local(double p_pos, double p_neg) {
  return -std::log(clamp_prob(p_pos)) - std::log(1.0 - clamp_prob(p_neg));
}

double compat_bce(std::span<const double> probs, bool compatible) {
  const double p = clamp_prob(compat_probability(probs));
  return compatible ? -std::log(p) : -std::log(1.0 - p);
}

std::vector<double> compat_bce_grad(std::span<const double> probs, bool compatible) {
  // p = sum_{c>=1} g_c, dp/dz_k = g_k (1[k>=1] - p).
  std::vector<double> g(probs.size(), 0.0);
  const double p = compat_probability(probs);
  if (clamped(p)) return g;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const double dp = probs[k] * ((k >= 1 ? 1.0 : 0.0) - p);
    g[k] = compatible ? -dp / p : dp / (1.0 - p);
  }
  return g;
}

}  // namespace pcmp
