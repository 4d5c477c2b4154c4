#include "itosr/gan_losses.hpp"

#include <stdexcept>

#include "itosr/losses.hpp"

namespace itosr {

namespace {

void require_column(const Matrix& m, const char* what) {
  if (m.rows() == 0) throw std::invalid_argument(std::string(what) + ": empty batch");
  if (m.cols() != 1) throw std::invalid_argument(std::string(what) + ": critic output must be m x 1");
}

Matrix filled_like(const Matrix& m, double v) { return Matrix::Constant(m.rows(), m.cols(), v); }

}  // namespace

D1Loss loss_d1(const Matrix& d1_real, const Matrix& d1_fake) {
  require_column(d1_real, "loss_d1 real");
  require_column(d1_fake, "loss_d1 fake");
  const double mr = static_cast<double>(d1_real.rows());
  const double mf = static_cast<double>(d1_fake.rows());
  D1Loss out;
  out.value = -(d1_real.mean() - d1_fake.mean());
  out.grad_real = filled_like(d1_real, -1.0 / mr);
  out.grad_fake = filled_like(d1_fake, 1.0 / mf);
  return out;
}

D2Value loss_d2(const D2Split& o) {
  require_column(o.known_real, "loss_d2 known_real");
  require_column(o.unknown_real, "loss_d2 unknown_real");
  require_column(o.known_fake, "loss_d2 known_fake");
  require_column(o.unknown_fake, "loss_d2 unknown_fake");
  D2Value out;
  out.value = -(o.unknown_real.mean() - o.known_real.mean()) -
              (o.unknown_fake.mean() - o.known_fake.mean());
  out.grad.unknown_real = filled_like(o.unknown_real, -1.0 / static_cast<double>(o.unknown_real.rows()));
  out.grad.known_real = filled_like(o.known_real, 1.0 / static_cast<double>(o.known_real.rows()));
  out.grad.unknown_fake = filled_like(o.unknown_fake, -1.0 / static_cast<double>(o.unknown_fake.rows()));
  out.grad.known_fake = filled_like(o.known_fake, 1.0 / static_cast<double>(o.known_fake.rows()));
  return out;
}

ClsLoss loss_cls(const Matrix& c1_logits, std::span<const int> c1_targets,
                 const Matrix& c2_logits, std::span<const int> c2_targets) {
  ClsLoss out;
  auto c1 = softmax_cross_entropy(c1_logits, c1_targets);
  out.c1 = c1.value;
  out.grad_c1 = std::move(c1.grad);
  if (c2_logits.rows() > 0 || !c2_targets.empty()) {
    if (c2_logits.cols() != 2) throw std::invalid_argument("loss_cls: C2 logits must be 2-wide");
    auto c2 = softmax_cross_entropy(c2_logits, c2_targets);
    out.c2 = c2.value;
    out.grad_c2 = std::move(c2.grad);
  } else {
    out.grad_c2 = Matrix(0, 2);
  }
  out.value = out.c1 + out.c2;
  return out;
}

GLoss loss_g(const Matrix& d1_fake, const Matrix& d2_unknown_fake, const Matrix& d2_known_fake,
             double fake_cls, double lambda) {
  require_column(d1_fake, "loss_g d1_fake");
  GLoss out;
  out.value = -d1_fake.mean() + fake_cls;
  out.grad_d1_fake = filled_like(d1_fake, -1.0 / static_cast<double>(d1_fake.rows()));
  const bool has_d2 = d2_unknown_fake.rows() > 0 || d2_known_fake.rows() > 0;
  if (has_d2) {
    require_column(d2_unknown_fake, "loss_g d2_unknown_fake");
    require_column(d2_known_fake, "loss_g d2_known_fake");
    out.value -= lambda * (d2_unknown_fake.mean() - d2_known_fake.mean());
    out.grad_d2_unknown_fake =
        filled_like(d2_unknown_fake, -lambda / static_cast<double>(d2_unknown_fake.rows()));
    out.grad_d2_known_fake =
        filled_like(d2_known_fake, lambda / static_cast<double>(d2_known_fake.rows()));
  } else {
    if (lambda != 0.0) throw std::invalid_argument("loss_g: D2 outputs required when lambda != 0");
    out.grad_d2_unknown_fake = Matrix(0, 1);
    out.grad_d2_known_fake = Matrix(0, 1);
  }
  return out;
}

}  // namespace itosr
