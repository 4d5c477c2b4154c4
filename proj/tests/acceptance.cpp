// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "itosr/dataset.hpp"
#include "itosr/feature_gan.hpp"
#include "itosr/gan_losses.hpp"
#include "itosr/grad_check.hpp"
#include "itosr/losses.hpp"
#include "itosr/metrics.hpp"
#include "itosr/pipeline.hpp"
#include "itosr/random.hpp"
#include "itosr/sampling.hpp"
#include "oracles.hpp"

namespace itosr {
namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------
// Gradient correctness

// Naive forward that also records which ReLU units are active, so a finite
// difference that crosses a kink can be recognised.
Matrix masked_forward(const DenseNet& net, const Matrix& x, std::vector<char>& mask) {
  Matrix cur = x;
  for (const auto& l : net.layers()) {
    Matrix next(cur.rows(), l.fan_out());
    for (Eigen::Index r = 0; r < cur.rows(); ++r) {
      for (Eigen::Index o = 0; o < l.fan_out(); ++o) {
        double acc = l.bias(o);
        for (Eigen::Index i = 0; i < l.fan_in(); ++i) acc += cur(r, i) * l.weight(i, o);
        if (l.activation == Activation::kRelu) {
          mask.push_back(acc > 0.0);
          acc = acc > 0.0 ? acc : 0.0;
        }
        next(r, o) = acc;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

struct Eval {
  double loss = 0.0;
  std::vector<char> mask;
};

struct NetCheck {
  double max_err = 0.0;
  std::size_t coords = 0;
  std::size_t skipped = 0;
};

void fd_compare(DenseNet& net, const GradientSet& analytic, const std::function<Eval()>& eval,
                NetCheck& acc) {
  constexpr double h = 1e-4;
  const std::vector<char> base = eval().mask;
  for (std::size_t i = 0; i < net.parameter_count(); ++i) {
    const double orig = net.parameter(i);
    net.parameter(i) = orig + h;
    const Eval plus = eval();
    net.parameter(i) = orig - h;
    const Eval minus = eval();
    net.parameter(i) = orig;
    if (plus.mask != base || minus.mask != base) {
      ++acc.skipped;
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * h);
    acc.max_err = std::max(acc.max_err, oracle::rel_error(DenseNet::gradient_at(analytic, i), numeric));
    ++acc.coords;
  }
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

double mean_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  double s = 0.0;
  for (Eigen::Index r : rows) s += m(r, 0);
  return s / static_cast<double>(rows.size());
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) { return m(rows, Eigen::all); }

// One random instance of every network and loss, checked against central
// differences of independently evaluated losses.
void gradient_instance(std::uint64_t seed, std::map<std::string, NetCheck>& out) {
  Rng rng(seed);
  const int c = 2;  // known classes; label 3 is unknown
  const Eigen::Index d = 4, h = 3, noise = 2, hid = 5, m = 6;
  const double lambda = 0.1;

  // Baseline: embedder + head under cross-entropy.
  {
    DenseNet emb = DenseNet::mlp({d, hid, h}, rng);
    DenseNet head = DenseNet::three_layer(h, hid, c + 1, rng);
    const Matrix x = random_matrix(rng, m, d);
    std::vector<int> y(m);
    for (auto& v : y) v = static_cast<int>(rng.index(c + 1)) + 1;
    Tape te, th;
    const Matrix lat = emb.forward(x, &te);
    const auto ce = softmax_cross_entropy(head.forward(lat, &th), y);
    Matrix dlat;
    const GradientSet gh = head.backward(th, ce.grad, &dlat);
    const GradientSet ge = emb.backward(te, dlat);
    auto eval = [&] {
      Eval e;
      const Matrix l = masked_forward(emb, x, e.mask);
      e.loss = oracle::naive_cross_entropy(masked_forward(head, l, e.mask), y);
      return e;
    };
    fd_compare(emb, ge, eval, out["embedder"]);
    fd_compare(head, gh, eval, out["head"]);
  }

  DenseNet g = DenseNet::three_layer(c + 1 + noise, hid, h, rng);
  DenseNet d1 = DenseNet::three_layer(h, hid, 1, rng);
  DenseNet d2 = DenseNet::three_layer(h, hid, 1, rng);
  DenseNet c1 = DenseNet::three_layer(h, hid, c + 1, rng);
  DenseNet c2 = DenseNet::three_layer(h, hid, 2, rng);

  // Real and fake batches; rows 0..2 known, rows 3..5 unknown in both.
  const std::vector<int> labels = {1, 2, 1, 3, 3, 3};
  const std::vector<int> binary = {1, 1, 1, 2, 2, 2};
  const std::vector<Eigen::Index> known = {0, 1, 2}, unknown = {3, 4, 5};
  Matrix gin = Matrix::Zero(m, c + 1 + noise);
  for (Eigen::Index r = 0; r < m; ++r) {
    gin(r, labels[static_cast<std::size_t>(r)] - 1) = 1.0;
    for (Eigen::Index k = 0; k < noise; ++k) gin(r, c + 1 + k) = rng.normal();
  }
  const Matrix real = random_matrix(rng, m, h);
  const Matrix fake = g.forward(gin);
  Matrix both(2 * m, h);
  both << real, fake;
  std::vector<int> both_labels(labels), both_binary(binary);
  both_labels.insert(both_labels.end(), labels.begin(), labels.end());
  both_binary.insert(both_binary.end(), binary.begin(), binary.end());

  // D1 under the Wasserstein critic loss.
  {
    Tape t;
    const Matrix o = d1.forward(both, &t);
    const D1Loss l = loss_d1(o.topRows(m), o.bottomRows(m));
    Matrix grad(2 * m, 1);
    grad << l.grad_real, l.grad_fake;
    const GradientSet an = d1.backward(t, grad);
    fd_compare(d1, an, [&] {
      Eval e;
      const Matrix q = masked_forward(d1, both, e.mask);
      e.loss = -(oracle::naive_mean(q.topRows(m)) - oracle::naive_mean(q.bottomRows(m)));
      return e;
    }, out["D1"]);
  }

  // D2 under the known/unknown game value.
  {
    Tape t;
    const Matrix o = d2.forward(both, &t);
    const std::vector<Eigen::Index> fk = {6, 7, 8}, fu = {9, 10, 11};
    const D2Value v = loss_d2({take_rows(o, known), take_rows(o, unknown), take_rows(o, fk),
                               take_rows(o, fu)});
    Matrix grad(2 * m, 1);
    grad << v.grad.known_real, v.grad.unknown_real, v.grad.known_fake, v.grad.unknown_fake;
    const GradientSet an = d2.backward(t, grad);
    fd_compare(d2, an, [&] {
      Eval e;
      const Matrix q = masked_forward(d2, both, e.mask);
      e.loss = -(mean_rows(q, unknown) - mean_rows(q, known)) - (mean_rows(q, fu) - mean_rows(q, fk));
      return e;
    }, out["D2"]);
  }

  // C1 and C2 under the summed classification loss.
  {
    Tape t1, t2;
    const ClsLoss l = loss_cls(c1.forward(both, &t1), both_labels, c2.forward(both, &t2), both_binary);
    const GradientSet a1 = c1.backward(t1, l.grad_c1);
    const GradientSet a2 = c2.backward(t2, l.grad_c2);
    auto eval = [&] {
      Eval e;
      e.loss = oracle::naive_cross_entropy(masked_forward(c1, both, e.mask), both_labels) +
               oracle::naive_cross_entropy(masked_forward(c2, both, e.mask), both_binary);
      return e;
    };
    fd_compare(c1, a1, eval, out["C1"]);
    fd_compare(c2, a2, eval, out["C2"]);
  }

  // G under the combined generator objective, through all four heads.
  {
    Tape tg, t1, t2, tc1, tc2;
    const Matrix f = g.forward(gin, &tg);
    const Matrix o1 = d1.forward(f, &t1);
    const Matrix o2 = d2.forward(f, &t2);
    const ClsLoss cls = loss_cls(c1.forward(f, &tc1), labels, c2.forward(f, &tc2), binary);
    const GLoss gl = loss_g(o1, take_rows(o2, unknown), take_rows(o2, known), cls.value, lambda);
    Matrix g2 = Matrix::Zero(m, 1);
    for (std::size_t i = 0; i < 3; ++i) {
      g2(known[i], 0) = gl.grad_d2_known_fake(static_cast<Eigen::Index>(i), 0);
      g2(unknown[i], 0) = gl.grad_d2_unknown_fake(static_cast<Eigen::Index>(i), 0);
    }
    Matrix in1, in2, in3, in4;
    d1.backward(t1, gl.grad_d1_fake, &in1);
    d2.backward(t2, g2, &in2);
    c1.backward(tc1, cls.grad_c1, &in3);
    c2.backward(tc2, cls.grad_c2, &in4);
    const GradientSet an = g.backward(tg, in1 + in2 + in3 + in4);
    fd_compare(g, an, [&] {
      Eval e;
      const Matrix q = masked_forward(g, gin, e.mask);
      const Matrix q1 = masked_forward(d1, q, e.mask);
      const Matrix q2 = masked_forward(d2, q, e.mask);
      e.loss = -oracle::naive_mean(q1) - lambda * (mean_rows(q2, unknown) - mean_rows(q2, known)) +
               oracle::naive_cross_entropy(masked_forward(c1, q, e.mask), labels) +
               oracle::naive_cross_entropy(masked_forward(c2, q, e.mask), binary);
      return e;
    }, out["G"]);
  }
}

Verdict check_gradients() {
  Stopwatch sw;
  constexpr int kInstances = 20;
  std::map<std::string, NetCheck> nets;
  for (int i = 0; i < kInstances; ++i) gradient_instance(1000 + static_cast<std::uint64_t>(i), nets);
  bool ok = nets.size() == 7;
  std::string detail;
  for (const auto& [name, r] : nets) {
    ok = ok && r.coords > 0 && r.max_err <= 1e-4;
    detail += fmt("%s=%.1e ", name.c_str(), r.max_err);
  }
  // The built-in harness must agree.
  bool harness = true;
  for (const auto& r : run_gradient_checks({})) harness = harness && r.pass;
  const double secs = sw.seconds();
  ok = ok && harness && secs < 60.0;
  return {ok, fmt("instances=%d %sharness=%s time=%.1fs", kInstances, detail.c_str(),
                  harness ? "pass" : "fail", secs)};
}

// ---------------------------------------------------------------------------
// Sampling

Verdict check_sampling_oracle() {
  Stopwatch sw;
  Rng rng(7);
  int mismatches = 0;
  std::size_t selected_total = 0;
  constexpr int kConfigs = 200;
  for (int cfg = 0; cfg < kConfigs; ++cfg) {
    const std::size_t n = 2 + rng.index(299);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(8));
    const int c = 2 + static_cast<int>(rng.index(5));
    const bool grid = rng.index(2) == 0;  // integer grid forces distance ties

    std::vector<double> train_conf(20 + rng.index(50));
    for (auto& s : train_conf) s = rng.uniform01();
    const double alpha = 0.1 + 2.0 * rng.uniform01();
    const ThresholdStats stats = compute_threshold_stats(train_conf, alpha);

    std::vector<double> conf(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      conf[i] = rng.uniform01();
      labels[i] = static_cast<int>(rng.index(static_cast<std::uint64_t>(c))) + 1;
    }
    Matrix pts(static_cast<Eigen::Index>(n), d);
    for (Eigen::Index i = 0; i < pts.size(); ++i) {
      pts.data()[i] = grid ? static_cast<double>(rng.index(4)) : rng.normal();
    }

    const PseudoLabelGrouping g = threshold_grouping(conf, labels, stats, c);
    const std::vector<int> want_groups = oracle::brute_groups(conf, stats.mu, stats.delta, alpha);
    std::vector<int> want_tentative(n);
    for (std::size_t i = 0; i < n; ++i) {
      mismatches += static_cast<int>(g.groups[i]) != want_groups[i];
      want_tentative[i] = want_groups[i] == 1 ? c + 1 : labels[i];
    }
    mismatches += g.tentative != want_tentative;

    const int k = 1 + static_cast<int>(rng.index(std::min<std::uint64_t>(n - 1, 15)));
    const SelectedSubset sel = knn_consistency_filter(g, pts, k);
    const auto want = oracle::brute_knn_select(pts, want_groups, want_tentative, k);
    mismatches += sel.indices != want;
    for (std::size_t i = 0; i < sel.size(); ++i) mismatches += sel.labels[i] != want_tentative[sel.indices[i]];
    selected_total += sel.size();
  }
  const double secs = sw.seconds();
  return {mismatches == 0 && secs < 60.0,
          fmt("configs=%d mismatches=%d selected_rows=%zu time=%.1fs", kConfigs, mismatches,
              selected_total, secs)};
}

Verdict check_auroc_oracle() {
  Stopwatch sw;
  Rng rng(11);
  int mismatches = 0;
  const std::vector<double> ex_s = {0.9, 0.8, 0.4, 0.3};
  const std::vector<int> ex_k = {1, 0, 1, 0};
  const double example = auroc(ex_s, ex_k);
  mismatches += example != 0.75 || oracle::pairwise_auroc(ex_s, ex_k) != 0.75;
  constexpr int kVectors = 500;
  for (int v = 0; v < kVectors; ++v) {
    const std::size_t n = 2 + rng.index(199);
    const std::uint64_t levels = 1 + rng.index(20);  // few levels means many ties
    const bool continuous = rng.index(3) == 0;
    std::vector<double> s(n);
    std::vector<int> k(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = continuous ? rng.uniform01() : static_cast<double>(rng.index(levels)) / 7.0;
      k[i] = static_cast<int>(rng.index(2));
    }
    const std::size_t a = rng.index(n);
    k[a] = 1;
    k[(a + 1 + rng.index(n - 1)) % n] = 0;
    mismatches += auroc(s, k) != oracle::pairwise_auroc(s, k);
  }
  const double secs = sw.seconds();
  return {mismatches == 0 && secs < 30.0,
          fmt("vectors=%d example=%.2f mismatches=%d time=%.2fs", kVectors, example, mismatches, secs)};
}

Verdict check_partition() {
  Rng rng(13);
  int bad_partition = 0, bad_boundary = 0, bad_monotone = 0;
  // Exact boundaries: mu and delta chosen so mu +- alpha*delta is representable.
  for (int i = 0; i < 200; ++i) {
    const double mu = static_cast<double>(rng.index(64)) / 64.0;
    const double delta = static_cast<double>(rng.index(16)) / 256.0;
    const double alpha = static_cast<double>(1 + rng.index(8)) / 4.0;
    const ThresholdStats st{mu, delta, alpha};
    const std::vector<double> s = {st.upper(), st.lower()};
    const std::vector<int> lab = {1, 1};
    const auto g = threshold_grouping(s, lab, st, 3);
    bad_boundary += g.groups[0] != Group::kUndetermined || g.groups[1] != Group::kUndetermined;
  }
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.index(300);
    std::vector<double> s(n);
    std::vector<int> lab(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.uniform01();
      lab[i] = static_cast<int>(rng.index(5)) + 1;
    }
    const ThresholdStats lo{rng.uniform01(), 0.3 * rng.uniform01(), 3.0 * rng.uniform01()};
    ThresholdStats hi = lo;
    hi.alpha += 3.0 * rng.uniform01();
    const auto a = threshold_grouping(s, lab, lo, 5);
    const auto b = threshold_grouping(s, lab, hi, 5);
    const auto ca = a.counts();
    bad_partition += ca.known + ca.unknown + ca.undetermined != n || a.size() != n;
    for (std::size_t i = 0; i < n; ++i) {
      const bool known = s[i] > lo.upper(), unknown = s[i] < lo.lower();
      bad_partition += (known && unknown) || (a.groups[i] == Group::kKnown) != known ||
                       (a.groups[i] == Group::kUnknown) != unknown;
      bad_monotone += a.groups[i] == Group::kUndetermined && b.groups[i] != Group::kUndetermined;
    }
    bad_monotone += b.counts().undetermined < ca.undetermined;
  }
  return {bad_partition + bad_boundary + bad_monotone == 0,
          fmt("partition_violations=%d boundary_violations=%d monotonicity_violations=%d",
              bad_partition, bad_boundary, bad_monotone)};
}

// ---------------------------------------------------------------------------
// Critic clipping

Verdict check_clip() {
  Rng rng(17);
  const Eigen::Index n = 64;
  Matrix x(n, 8);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    y[static_cast<std::size_t>(i)] = static_cast<int>(i % 4) + 1;
    for (Eigen::Index k = 0; k < 8; ++k) x(i, k) = rng.normal() + y[static_cast<std::size_t>(i)];
  }
  GanHyper hyper;
  hyper.hidden = 32;
  hyper.noise_dim = 8;
  hyper.batch = 16;
  hyper.n_critic = 5;
  hyper.epochs = 10;  // ceil(64/16) generator steps x 5 critic steps x 10 epochs
  hyper.seed = 17;
  std::size_t steps = 0, violations = 0;
  double worst = 0.0;
  const auto res = train_gan(x, y, init_gan(8, 3, hyper), hyper, [&](const GanParams& p) {
    ++steps;
    const double m = std::max(p.d1.max_abs_parameter(), p.d2.max_abs_parameter());
    worst = std::max(worst, m);
    violations += m > hyper.clip_bound;
  });
  return {steps == 200 && res.critic_steps == 200 && violations == 0,
          fmt("critic_steps=%zu violations=%zu max_abs=%.6g bound=%.6g", steps, violations, worst,
              hyper.clip_bound)};
}

// ---------------------------------------------------------------------------
// Benchmark runs

struct SeedRuns {
  double m0_auroc = 0.0;
  double full_auroc = 0.0;
  double full_f1 = 0.0;
  double degenerate_f1 = 0.0;
  double nodscs_f1 = 0.0;
  double nod2c2_f1 = 0.0;
  double full_seconds = 0.0;
  bool deterministic = true;
};

bool same_result(const RunResult& a, const RunResult& b) {
  return a.final_model == b.final_model && a.final_predictions.labels == b.final_predictions.labels &&
         a.final_predictions.scores == b.final_predictions.scores;
}

std::vector<SeedRuns> benchmark_runs() {
  std::vector<SeedRuns> out;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SynthConfig sc;  // 6 known, 4 unknown, d = 16, 50 per class
    sc.seed = seed;
    const FeatureDataset ds = synth_openset(sc);
    PipelineConfig cfg;
    cfg.seed = seed;
    SeedRuns s;

    Stopwatch sw;
    const RunResult full = run_it_osr(ds, cfg);
    s.full_seconds = sw.seconds();
    s.m0_auroc = full.initial_metrics->auroc;
    s.full_auroc = full.iterations.back().metrics->auroc;
    s.full_f1 = full.iterations.back().metrics->macro_f1;
    s.deterministic = same_result(full, run_it_osr(ds, cfg));

    PipelineConfig degenerate = cfg;
    degenerate.iterations = 1;
    degenerate.alpha = 9999.0;
    s.degenerate_f1 = run_it_osr(ds, degenerate).iterations.back().metrics->macro_f1;

    PipelineConfig nodscs = cfg;
    nodscs.use_dual_space_sampling = false;
    const RunResult a = run_it_osr(ds, nodscs);
    s.nodscs_f1 = a.iterations.back().metrics->macro_f1;

    PipelineConfig nod2c2 = cfg;
    nod2c2.gan.use_d2 = false;
    nod2c2.gan.use_c2 = false;
    const RunResult b = run_it_osr(ds, nod2c2);
    s.nod2c2_f1 = b.iterations.back().metrics->macro_f1;
    if (seed == 1) {
      s.deterministic = s.deterministic && same_result(a, run_it_osr(ds, nodscs)) &&
                        same_result(b, run_it_osr(ds, nod2c2));
    }
    std::printf("  seed %llu: M0 auroc=%.4f | full auroc=%.4f f1=%.4f (%.1fs) | degenerate f1=%.4f"
                " | w/o DSCS f1=%.4f | w/o D2,C2 f1=%.4f\n",
                static_cast<unsigned long long>(seed), s.m0_auroc, s.full_auroc, s.full_f1,
                s.full_seconds, s.degenerate_f1, s.nodscs_f1, s.nod2c2_f1);
    std::fflush(stdout);
    out.push_back(s);
  }
  return out;
}

double mean_of(const std::vector<SeedRuns>& runs, double SeedRuns::*field) {
  double s = 0.0;
  for (const auto& r : runs) s += r.*field;
  return s / static_cast<double>(runs.size());
}

Verdict check_gain(const std::vector<SeedRuns>& runs) {
  const double m0 = mean_of(runs, &SeedRuns::m0_auroc);
  const double full = mean_of(runs, &SeedRuns::full_auroc);
  const double f1 = mean_of(runs, &SeedRuns::full_f1);
  const double deg = mean_of(runs, &SeedRuns::degenerate_f1);
  double slowest = 0.0;
  for (const auto& r : runs) slowest = std::max(slowest, r.full_seconds);
  return {full >= m0 && f1 >= deg && slowest < 180.0,
          fmt("mean auroc %.4f vs M0 %.4f; mean macro-F1 %.4f vs degenerate %.4f; slowest seed %.1fs",
              full, m0, f1, deg, slowest)};
}

Verdict check_ablation(const std::vector<SeedRuns>& runs) {
  const double full = mean_of(runs, &SeedRuns::full_f1);
  const double nodscs = mean_of(runs, &SeedRuns::nodscs_f1);
  const double nod2c2 = mean_of(runs, &SeedRuns::nod2c2_f1);
  bool det = true;
  for (const auto& r : runs) det = det && r.deterministic;
  return {full >= nodscs && full >= nod2c2 && det,
          fmt("mean macro-F1 full %.5f, w/o DSCS %.5f, w/o D2,C2 %.5f; bitwise repeat %s", full,
              nodscs, nod2c2, det ? "identical" : "DIFFERENT")};
}

// ---------------------------------------------------------------------------
// CLI determinism

int shell(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict check_cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / "itosr_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bin = ITOSR_CLI_PATH;
  int rc = shell(bin + " synth --seed 21 --out " + (dir / "data").string());
  const std::string data = " --train " + (dir / "data" / "train.txt").string() + " --test " +
                           (dir / "data" / "test.txt").string() + " --seed 21 --quiet";
  rc += shell(bin + " run" + data + " --out " + (dir / "a").string());
  rc += shell(bin + " run" + data + " --out " + (dir / "b").string());
  const std::string ra = slurp(dir / "a" / "report.json"), rb = slurp(dir / "b" / "report.json");
  const std::string pa = slurp(dir / "a" / "predictions.csv"), pb = slurp(dir / "b" / "predictions.csv");
  const bool ok = rc == 0 && !ra.empty() && !pa.empty() && ra == rb && pa == pb;
  return {ok, fmt("exit_codes_sum=%d report.json %s (%zu bytes), predictions.csv %s (%zu bytes)", rc,
                  ra == rb ? "identical" : "DIFFER", ra.size(), pa == pb ? "identical" : "DIFFER",
                  pa.size())};
}

}  // namespace
}  // namespace itosr

int main() {
  using namespace itosr;
  int failures = 0;
  auto report = [&](const char* name, const Verdict& v) {
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
    failures += !v.pass;
  };
  report("gradient-correctness", check_gradients());
  report("sampling-oracle-equivalence", check_sampling_oracle());
  report("auroc-oracle-equivalence", check_auroc_oracle());
  report("grouping-partition-boundary-monotonicity", check_partition());
  report("critic-clipping", check_clip());
  std::printf("benchmark runs (synthetic, 5 seeds):\n");
  const auto runs = benchmark_runs();
  report("directional-transductive-gain", check_gain(runs));
  report("ablation-ordering", check_ablation(runs));
  report("cli-determinism", check_cli_determinism());
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
