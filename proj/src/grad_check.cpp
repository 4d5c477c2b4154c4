#include "itosr/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <functional>

#include "itosr/baseline.hpp"
#include "itosr/feature_gan.hpp"
#include "itosr/losses.hpp"

namespace itosr {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

namespace {

// Loss value plus the ReLU on/off pattern of every traced layer.
struct Evaluation {
  double loss = 0.0;
  std::vector<bool> pattern;
};

void append_pattern(const DenseNet& net, const Tape& tape, std::vector<bool>& out) {
  for (std::size_t i = 0; i < net.num_layers(); ++i) {
    if (net.layer(i).activation != Activation::kRelu) continue;
    const Matrix& z = tape.pre[i];
    for (Eigen::Index k = 0; k < z.size(); ++k) out.push_back(z.data()[k] > 0.0);
  }
}

struct Target {
  DenseNet* net;
  const GradientSet* grads;
};

void compare(const std::vector<Target>& targets, const std::function<Evaluation()>& eval,
             double step, GradCheckResult& res) {
  const Evaluation base = eval();
  for (const auto& tgt : targets) {
    for (std::size_t i = 0; i < tgt.net->parameter_count(); ++i) {
      const double orig = tgt.net->parameter(i);
      tgt.net->parameter(i) = orig + step;
      const Evaluation plus = eval();
      tgt.net->parameter(i) = orig - step;
      const Evaluation minus = eval();
      tgt.net->parameter(i) = orig;
      if (plus.pattern != base.pattern || minus.pattern != base.pattern) {
        ++res.skipped;
        continue;
      }
      const double numeric = (plus.loss - minus.loss) / (2.0 * step);
      const double analytic = DenseNet::gradient_at(*tgt.grads, i);
      res.max_rel_error = std::max(res.max_rel_error, relative_error(analytic, numeric));
      ++res.coordinates;
    }
  }
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::vector<int> random_labels(std::size_t n, int k, Rng& rng) {
  std::vector<int> out(n);
  for (auto& l : out) l = static_cast<int>(rng.index(static_cast<std::size_t>(k))) + 1;
  return out;
}

void scale(GradientSet& g, double f) {
  for (auto& w : g.weight) w *= f;
  for (auto& b : g.bias) b *= f;
}

constexpr Eigen::Index kBatch = 5;
constexpr Eigen::Index kHidden = 6;

// Random scalarization sum(W .* net(x)) of a three-layer net.
void check_dense(Rng& rng, GradCheckResult& res, double step, bool bug) {
  DenseNet net = DenseNet::three_layer(4, kHidden, 3, rng);
  const Matrix x = random_matrix(kBatch, 4, rng);
  const Matrix w = random_matrix(kBatch, 3, rng);
  Tape tape;
  net.forward(x, &tape);
  GradientSet g = net.backward(tape, w);
  if (bug) scale(g, 1.01);
  compare({{&net, &g}}, [&] {
    Tape t;
    Evaluation e;
    e.loss = net.forward(x, &t).cwiseProduct(w).sum();
    append_pattern(net, t, e.pattern);
    return e;
  }, step, res);
}

// Cross-entropy through embedder and head.
void check_baseline(Rng& rng, GradCheckResult& res, double step) {
  BaselineHyper hyper;
  hyper.hidden = static_cast<int>(kHidden);
  hyper.latent = 3;
  BaselineModel m = init_baseline(4, 3, 4, hyper, rng);
  const Matrix x = random_matrix(kBatch, 4, rng);
  const auto y = random_labels(kBatch, 4, rng);
  Tape te, th;
  const Matrix z = m.embedder.forward(x, &te);
  const auto ce = softmax_cross_entropy(m.head.forward(z, &th), y);
  Matrix zg;
  const GradientSet gh = m.head.backward(th, ce.grad, &zg);
  const GradientSet ge = m.embedder.backward(te, zg);
  compare({{&m.embedder, &ge}, {&m.head, &gh}}, [&] {
    Tape a, b;
    Evaluation e;
    e.loss = softmax_cross_entropy(m.head.forward(m.embedder.forward(x, &a), &b), y).value;
    append_pattern(m.embedder, a, e.pattern);
    append_pattern(m.head, b, e.pattern);
    return e;
  }, step, res);
}

GanParams small_gan(Rng& rng) {
  GanHyper h;
  h.noise_dim = 3;
  h.hidden = static_cast<int>(kHidden);
  h.clip_bound = 10.0;  // no clipping effect on the check
  h.seed = rng.next_u64();
  return init_gan(4, 2, h);
}

void check_d1(Rng& rng, GradCheckResult& res, double step) {
  GanParams p = small_gan(rng);
  const Matrix real = random_matrix(kBatch, 4, rng);
  const Matrix fake = random_matrix(kBatch, 4, rng);
  Tape tr, tf;
  const D1Loss l = loss_d1(p.d1.forward(real, &tr), p.d1.forward(fake, &tf));
  GradientSet g = p.d1.backward(tr, l.grad_real);
  g += p.d1.backward(tf, l.grad_fake);
  compare({{&p.d1, &g}}, [&] {
    Tape a, b;
    Evaluation e;
    e.loss = loss_d1(p.d1.forward(real, &a), p.d1.forward(fake, &b)).value;
    append_pattern(p.d1, a, e.pattern);
    append_pattern(p.d1, b, e.pattern);
    return e;
  }, step, res);
}

void check_d2(Rng& rng, GradCheckResult& res, double step) {
  GanParams p = small_gan(rng);
  std::array<Matrix, 4> x = {random_matrix(3, 4, rng), random_matrix(2, 4, rng),
                             random_matrix(3, 4, rng), random_matrix(2, 4, rng)};
  auto split = [&](std::array<Tape, 4>* tapes) {
    D2Split s;
    s.known_real = p.d2.forward(x[0], tapes ? &(*tapes)[0] : nullptr);
    s.unknown_real = p.d2.forward(x[1], tapes ? &(*tapes)[1] : nullptr);
    s.known_fake = p.d2.forward(x[2], tapes ? &(*tapes)[2] : nullptr);
    s.unknown_fake = p.d2.forward(x[3], tapes ? &(*tapes)[3] : nullptr);
    return s;
  };
  std::array<Tape, 4> tapes;
  const D2Value v = loss_d2(split(&tapes));
  GradientSet g = p.d2.backward(tapes[0], v.grad.known_real);
  g += p.d2.backward(tapes[1], v.grad.unknown_real);
  g += p.d2.backward(tapes[2], v.grad.known_fake);
  g += p.d2.backward(tapes[3], v.grad.unknown_fake);
  compare({{&p.d2, &g}}, [&] {
    std::array<Tape, 4> t;
    Evaluation e;
    e.loss = loss_d2(split(&t)).value;
    for (const auto& tp : t) append_pattern(p.d2, tp, e.pattern);
    return e;
  }, step, res);
}

void check_cls(Rng& rng, GradCheckResult& res, double step) {
  GanParams p = small_gan(rng);
  const Matrix x = random_matrix(2 * kBatch, 4, rng);
  const auto y1 = random_labels(2 * kBatch, 3, rng);
  const auto y2 = random_labels(2 * kBatch, 2, rng);
  Tape t1, t2;
  const ClsLoss l = loss_cls(p.c1.forward(x, &t1), y1, p.c2.forward(x, &t2), y2);
  const GradientSet g1 = p.c1.backward(t1, l.grad_c1);
  const GradientSet g2 = p.c2.backward(t2, l.grad_c2);
  compare({{&p.c1, &g1}, {&p.c2, &g2}}, [&] {
    Tape a, b;
    Evaluation e;
    e.loss = loss_cls(p.c1.forward(x, &a), y1, p.c2.forward(x, &b), y2).value;
    append_pattern(p.c1, a, e.pattern);
    append_pattern(p.c2, b, e.pattern);
    return e;
  }, step, res);
}

// Full generator path: G -> {D1, D2, C1, C2} with lambda = 0.1.
void check_generator(Rng& rng, GradCheckResult& res, double step) {
  GanParams p = small_gan(rng);
  const int unknown = p.num_classes + 1;
  std::vector<int> labels = {1, 2, unknown, 1, unknown};
  Matrix input = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), p.code_dim() + p.noise_dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    input(r, labels[i] - 1) = 1.0;
    for (int k = 0; k < p.noise_dim; ++k) input(r, p.code_dim() + k) = rng.normal();
  }
  std::vector<Eigen::Index> known_rows, unknown_rows;
  std::vector<int> binary;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == unknown ? unknown_rows : known_rows).push_back(static_cast<Eigen::Index>(i));
    binary.push_back(labels[i] == unknown ? 2 : 1);
  }
  const double lambda = 0.1;

  struct Forward {
    Tape g, d1, d2, c1, c2;
    Matrix d2_out;
    GLoss lg;
    ClsLoss lc;
  };
  auto run = [&](Forward& f) {
    const Matrix fake = p.g.forward(input, &f.g);
    const Matrix d1 = p.d1.forward(fake, &f.d1);
    f.d2_out = p.d2.forward(fake, &f.d2);
    f.lc = loss_cls(p.c1.forward(fake, &f.c1), labels, p.c2.forward(fake, &f.c2), binary);
    f.lg = loss_g(d1, f.d2_out(unknown_rows, Eigen::all), f.d2_out(known_rows, Eigen::all),
                  f.lc.value, lambda);
  };

  Forward f;
  run(f);
  Matrix fake_grad, tmp;
  p.d1.backward(f.d1, f.lg.grad_d1_fake, &fake_grad);
  Matrix g2 = Matrix::Zero(f.d2_out.rows(), 1);
  g2(unknown_rows, Eigen::all) = f.lg.grad_d2_unknown_fake;
  g2(known_rows, Eigen::all) = f.lg.grad_d2_known_fake;
  p.d2.backward(f.d2, g2, &tmp);
  fake_grad += tmp;
  p.c1.backward(f.c1, f.lc.grad_c1, &tmp);
  fake_grad += tmp;
  p.c2.backward(f.c2, f.lc.grad_c2, &tmp);
  fake_grad += tmp;
  const GradientSet gg = p.g.backward(f.g, fake_grad);

  compare({{&p.g, &gg}}, [&] {
    Forward e;
    run(e);
    Evaluation out;
    out.loss = e.lg.value;
    append_pattern(p.g, e.g, out.pattern);
    append_pattern(p.d1, e.d1, out.pattern);
    append_pattern(p.d2, e.d2, out.pattern);
    append_pattern(p.c1, e.c1, out.pattern);
    append_pattern(p.c2, e.c2, out.pattern);
    return out;
  }, step, res);
}

}  // namespace

std::vector<GradCheckResult> run_gradient_checks(const GradCheckOptions& opts) {
  struct Check {
    const char* name;
    std::function<void(Rng&, GradCheckResult&)> fn;
  };
  const double h = opts.step;
  const std::vector<Check> checks = {
      {"dense_net", [&](Rng& r, GradCheckResult& res) { check_dense(r, res, h, opts.inject_bug); }},
      {"baseline_cross_entropy", [&](Rng& r, GradCheckResult& res) { check_baseline(r, res, h); }},
      {"d1_wasserstein", [&](Rng& r, GradCheckResult& res) { check_d1(r, res, h); }},
      {"d2_known_unknown", [&](Rng& r, GradCheckResult& res) { check_d2(r, res, h); }},
      {"c1_c2_classification", [&](Rng& r, GradCheckResult& res) { check_cls(r, res, h); }},
      {"generator_combined", [&](Rng& r, GradCheckResult& res) { check_generator(r, res, h); }},
  };
  std::vector<GradCheckResult> out;
  Rng rng(opts.seed);
  for (const auto& c : checks) {
    GradCheckResult res;
    res.name = c.name;
    for (int i = 0; i < opts.instances; ++i) c.fn(rng, res);
    res.pass = res.coordinates > 0 && res.max_rel_error <= opts.tolerance;
    out.push_back(res);
  }
  return out;
}

}  // namespace itosr
