#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace repeatmix {

/// Pearson correlation with N-1 normalisation. Returns 0 when either
/// series has (near) zero standard deviation.
double pcc(std::span<const double> a, std::span<const double> b);

struct FusionWeights {
  double w_f = 0.5;
  double w_h = 0.5;
  double alpha_f = 0.0;
  double alpha_h = 0.0;
};

/// Two-way softmax over the order similarities.
FusionWeights softmax_weights(double alpha_f, double alpha_h);

/// alpha_f = pcc(dT_u1, dT_v1), alpha_h = pcc(dT_u1 | dT_v2, dT_v1 | dT_u2).
FusionWeights fusion_weights(std::span<const double> dt_u1, std::span<const double> dt_v1,
                             std::span<const double> dt_u2, std::span<const double> dt_v2);

enum class Fusion { adaptive, summation, concatenation };

std::string_view to_string(Fusion f);
Fusion parse_fusion(std::string_view name);

}  // namespace repeatmix
