#include "itosr/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace itosr {

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) sum += std::exp(logits(r, c) - mx);
    const double lse = mx + std::log(sum);
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("cross-entropy: target count differs from row count");
  }
  if (logits.rows() == 0) throw std::invalid_argument("cross-entropy: empty batch");
  const auto k = logits.cols();
  for (int t : targets) {
    if (t < 1 || t > k) {
      throw std::out_of_range("cross-entropy: target " + std::to_string(t) + " outside [1, " +
                              std::to_string(k) + "]");
    }
  }
  const Matrix logp = log_softmax_rows(logits);
  const double m = static_cast<double>(logits.rows());
  LossAndGrad out;
  out.grad = logp.array().exp().matrix();
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const Eigen::Index t = targets[static_cast<std::size_t>(r)] - 1;
    out.value -= logp(r, t);
    out.grad(r, t) -= 1.0;
  }
  out.value /= m;
  out.grad /= m;
  return out;
}

}  // namespace itosr
