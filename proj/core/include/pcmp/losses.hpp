#pragma once

#include <span>
#include <vector>

namespace pcmp {

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before logs.
inline constexpr double kProbClamp = 1e-7;

/// -ln g[label]; throws LabelOutOfRange.
double cross_entropy(std::span<const double> probs, int label);
/// d(-ln g[label]) / d logits = g - onehot(label); zero when the clamp is active.
std::vector<double> cross_entropy_grad(std::span<const double> probs, int label);

/// Global loss on one pair: -ln g_pos[y_pos] - ln g_neg[y_neg], with
/// y_pos >= 1 (a positive cluster) and y_neg == 0.
double loss_global(std::span<const double> probs_pos, int pseudo_pos,
                   std::span<const double> probs_neg, int pseudo_neg);

/// Local loss on a pair of subsets: -ln p_pos - ln(1 - p_neg).
double loss_local(double p_pos, double p_neg);

/// Binary cross-entropy of the compatibility probability (sum of the
/// positive classes) for one sample; `compatible` picks -ln p or -ln(1-p).
double compat_bce(std::span<const double> probs, bool compatible);
std::vector<double> compat_bce_grad(std::span<const double> probs, bool compatible);

}  // namespace pcmp
