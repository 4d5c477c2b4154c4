#pragma once

#include <span>

#include "itosr/linalg.hpp"

// Loss terms of the conditional dual-adversarial game. Critic outputs are
// m x 1 matrices; every returned gradient has the shape of the matching input.
namespace itosr {

// Loss minimized by D1: -(mean(D1(real)) - mean(D1(fake))), i.e. D1 ascends
// the Wasserstein value E_r[D1(x)] - E_g[D1(x~)].
struct D1Loss {
  double value = 0.0;
  Matrix grad_real;
  Matrix grad_fake;
};
D1Loss loss_d1(const Matrix& d1_real, const Matrix& d1_fake);

// D2 outputs split by real/fake and by condition (known vs unknown).
struct D2Split {
  Matrix known_real;
  Matrix unknown_real;
  Matrix known_fake;
  Matrix unknown_fake;
};

// The D2 game value as written:
//   V = -[mean(unknown_real) - mean(known_real)]
//       -[mean(unknown_fake) - mean(known_fake)]
// D2 ascends V (pushes known up, unknown down); `grad` holds dV/d(outputs).
struct D2Value {
  double value = 0.0;
  D2Split grad;
};
D2Value loss_d2(const D2Split& outputs);

// L_cls = CE(C1 logits, (c+1)-way targets) + CE(C2 logits, 2-way targets),
// each a mean over the rows passed in (real and fake stacked). Targets are
// 1-based; for C2, 1 = known and 2 = unknown. An empty C2 batch drops the C2
// term.
struct ClsLoss {
  double value = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  Matrix grad_c1;
  Matrix grad_c2;
};
ClsLoss loss_cls(const Matrix& c1_logits, std::span<const int> c1_targets,
                 const Matrix& c2_logits, std::span<const int> c2_targets);

// Generator loss, minimized by G:
//   -mean(D1(fake))                                   (G's side of the D1 game)
//   - lambda * [mean(D2(fake|unknown)) - mean(D2(fake|known))]
//                                                     (G's side of the D2 game)
//   + fake_cls                                        (classification on fakes)
// The D2 term keeps the sign G carries in the combined objective: G minimizes
// the same value D2 maximizes, so it opposes D2 on both condition groups.
// Empty D2 inputs are allowed only with lambda == 0.
struct GLoss {
  double value = 0.0;
  Matrix grad_d1_fake;
  Matrix grad_d2_unknown_fake;
  Matrix grad_d2_known_fake;
};
GLoss loss_g(const Matrix& d1_fake, const Matrix& d2_unknown_fake, const Matrix& d2_known_fake,
             double fake_cls, double lambda);

}  // namespace itosr
