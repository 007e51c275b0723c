#pragma once

#include <span>
#include <stdexcept>

namespace repeatmix {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mean, over positives in descending-score order (stable on ties), of the
/// precision at each positive's rank.
double average_precision(std::span<const double> scores, std::span<const int> labels);

/// Probability that a random positive outranks a random negative; ties
/// count one half.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

}  // namespace repeatmix
