#pragma once

#include <span>

#include "itosr/linalg.hpp"

namespace itosr {

struct LossAndGrad {
  double value = 0.0;
  Matrix grad;  // d(value)/d(input), same shape as the input
};

// Mean softmax cross-entropy over rows. `targets` are 1-based class labels in
// [1, logits.cols()]. Throws std::out_of_range for a bad target.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets);

// Row-wise log-softmax, computed with the max-shift.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace itosr
