#include "repeatmix/fusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace repeatmix {

double pcc(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pcc: series lengths differ");
  if (a.size() < 2) throw std::invalid_argument("pcc: need at least two records");
  const auto n = static_cast<double>(a.size());
  double mean_a = 0.0, mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0, var_a = 0.0, var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a, db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  cov /= (n - 1.0);
  const double sd_a = std::sqrt(var_a / (n - 1.0));
  const double sd_b = std::sqrt(var_b / (n - 1.0));
  if (sd_a < 1e-12 || sd_b < 1e-12) return 0.0;
  const double r = cov / (sd_a * sd_b);
  return std::fmax(-1.0, std::fmin(1.0, r));
}

FusionWeights softmax_weights(double alpha_f, double alpha_h) {
  const double top = std::fmax(alpha_f, alpha_h);
  const double ef = std::exp(alpha_f - top);
  const double eh = std::exp(alpha_h - top);
  return {ef / (ef + eh), eh / (ef + eh), alpha_f, alpha_h};
}

FusionWeights fusion_weights(std::span<const double> dt_u1, std::span<const double> dt_v1,
                             std::span<const double> dt_u2, std::span<const double> dt_v2) {
  const double alpha_f = pcc(dt_u1, dt_v1);
  std::vector<double> left(dt_u1.begin(), dt_u1.end());
  left.insert(left.end(), dt_v2.begin(), dt_v2.end());
  std::vector<double> right(dt_v1.begin(), dt_v1.end());
  right.insert(right.end(), dt_u2.begin(), dt_u2.end());
  return softmax_weights(alpha_f, pcc(left, right));
}

std::string_view to_string(Fusion f) {
  switch (f) {
    case Fusion::adaptive: return "adaptive";
    case Fusion::summation: return "summation";
    case Fusion::concatenation: return "concatenation";
  }
  return "unknown";
}

Fusion parse_fusion(std::string_view name) {
  if (name == "adaptive") return Fusion::adaptive;
  if (name == "summation" || name == "sum") return Fusion::summation;
  if (name == "concatenation" || name == "concat") return Fusion::concatenation;
  throw std::invalid_argument("unknown fusion '" + std::string(name) + "'");
}

}  // namespace repeatmix
