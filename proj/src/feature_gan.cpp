#include "itosr/feature_gan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "itosr/losses.hpp"

namespace itosr {

namespace {

// Endless sampler over a fixed index pool; reshuffles after each pass.
class PoolCycle {
 public:
  PoolCycle(std::vector<std::size_t> pool, Rng& rng) : pool_(std::move(pool)), rng_(rng) {
    rng_.shuffle(pool_.begin(), pool_.end());
  }

  std::size_t next() {
    if (pos_ == pool_.size()) {
      rng_.shuffle(pool_.begin(), pool_.end());
      pos_ = 0;
    }
    return pool_[pos_++];
  }

 private:
  std::vector<std::size_t> pool_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void scatter_rows(Matrix& dst, std::span<const std::size_t> rows, const Matrix& src) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    dst.row(static_cast<Eigen::Index>(rows[i])) += src.row(static_cast<Eigen::Index>(i));
  }
}

// Generator input rows [one-hot(label) | z].
Matrix generator_input(std::span<const int> labels, int num_classes, int noise_dim, Rng& rng) {
  const int code_dim = num_classes + 1;
  Matrix in = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), code_dim + noise_dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    in(r, labels[i] - 1) = 1.0;
    for (int k = 0; k < noise_dim; ++k) in(r, code_dim + k) = rng.normal();
  }
  return in;
}

struct ConditionSplit {
  std::vector<std::size_t> known;
  std::vector<std::size_t> unknown;
};

ConditionSplit split_by_condition(std::span<const int> labels, int unknown_label,
                                  std::size_t offset = 0) {
  ConditionSplit s;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == unknown_label ? s.unknown : s.known).push_back(offset + i);
  }
  return s;
}

std::vector<int> binary_targets(std::span<const int> labels, int unknown_label) {
  std::vector<int> t(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) t[i] = labels[i] == unknown_label ? 2 : 1;
  return t;
}

GradientSet negated(GradientSet g) {
  for (auto& w : g.weight) w = -w;
  for (auto& b : g.bias) b = -b;
  return g;
}

}  // namespace

Matrix orthogonal_codes(int num_classes) {
  return Matrix::Identity(num_classes + 1, num_classes + 1);
}

GanParams init_gan(Eigen::Index feature_dim, int num_classes, const GanHyper& hyper) {
  if (feature_dim <= 0 || num_classes < 1 || hyper.noise_dim <= 0 || hyper.hidden <= 0) {
    throw std::invalid_argument("init_gan: dimensions must be positive");
  }
  if (!(hyper.clip_bound > 0.0)) throw std::invalid_argument("init_gan: clip_bound must be > 0");
  Rng rng(hyper.seed);
  GanParams p;
  p.noise_dim = hyper.noise_dim;
  p.num_classes = num_classes;
  p.lambda = hyper.lambda;
  p.clip_bound = hyper.clip_bound;
  const Eigen::Index h = hyper.hidden;
  p.g = DenseNet::three_layer(hyper.noise_dim + num_classes + 1, h, feature_dim, rng);
  p.d1 = DenseNet::three_layer(feature_dim, h, 1, rng);
  p.d2 = DenseNet::three_layer(feature_dim, h, 1, rng);
  p.c1 = DenseNet::three_layer(feature_dim, h, num_classes + 1, rng);
  p.c2 = DenseNet::three_layer(feature_dim, h, 2, rng);
  p.d1.clip_weights(p.clip_bound);
  p.d2.clip_weights(p.clip_bound);
  return p;
}

GanTrainResult train_gan(const Matrix& real, std::span<const int> labels, GanParams params,
                         const GanHyper& hyper, const CriticObserver& on_critic_step) {
  const int c = params.num_classes;
  const int unknown = c + 1;
  const auto n = static_cast<std::size_t>(real.rows());
  if (n == 0) throw std::invalid_argument("train_gan: no real data");
  if (labels.size() != n) throw std::invalid_argument("train_gan: label count differs from rows");
  if (real.cols() != params.feature_dim()) throw ShapeError("train_gan: feature width mismatch");
  if (hyper.batch < 2 || hyper.n_critic < 1) throw std::invalid_argument("train_gan: bad batch/n_critic");

  std::vector<std::size_t> known_pool, unknown_pool;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 1 || labels[i] > unknown) throw std::out_of_range("train_gan: label out of range");
    (labels[i] == unknown ? unknown_pool : known_pool).push_back(i);
  }
  if (unknown_pool.empty()) throw std::invalid_argument("train_gan: no unknown-class rows");
  if (known_pool.empty()) throw std::invalid_argument("train_gan: no known-class rows");

  Rng rng(hyper.seed);
  PoolCycle known_cycle(known_pool, rng);
  PoolCycle unknown_cycle(unknown_pool, rng);

  const auto batch = static_cast<std::size_t>(hyper.batch);
  const auto share = static_cast<std::size_t>(
      std::llround(static_cast<double>(batch) * static_cast<double>(unknown_pool.size()) /
                   static_cast<double>(n)));
  const std::size_t n_unknown = std::clamp<std::size_t>(share, 1, batch - 1);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;

  auto draw_real = [&](std::vector<std::size_t>& rows, std::vector<int>& row_labels) {
    rows.clear();
    row_labels.clear();
    for (std::size_t i = 0; i < batch - n_unknown; ++i) rows.push_back(known_cycle.next());
    for (std::size_t i = 0; i < n_unknown; ++i) rows.push_back(unknown_cycle.next());
    for (std::size_t r : rows) row_labels.push_back(labels[r]);
  };

  const bool use_d2 = hyper.use_d2;
  const bool use_c2 = hyper.use_c2;
  const double lambda = use_d2 ? params.lambda : 0.0;

  GanTrainResult result;
  std::vector<std::size_t> rows;
  std::vector<int> batch_labels;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    GanEpochLoss acc;
    acc.epoch = epoch + 1;
    std::size_t critic_count = 0;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      for (int it = 0; it < hyper.n_critic; ++it) {
        draw_real(rows, batch_labels);
        const Matrix fake = params.g.forward(
            generator_input(batch_labels, c, params.noise_dim, rng));
        // Stacked [real; fake], both halves conditioned on batch_labels.
        Matrix x(static_cast<Eigen::Index>(2 * batch), real.cols());
        x.topRows(static_cast<Eigen::Index>(batch)) = gather_rows(real, rows);
        x.bottomRows(static_cast<Eigen::Index>(batch)) = fake;
        std::vector<int> stacked_labels(batch_labels);
        stacked_labels.insert(stacked_labels.end(), batch_labels.begin(), batch_labels.end());
        const auto mb = static_cast<Eigen::Index>(batch);

        Tape t1;
        const Matrix d1_out = params.d1.forward(x, &t1);
        const D1Loss l1 = loss_d1(d1_out.topRows(mb), d1_out.bottomRows(mb));
        Matrix g1(2 * mb, 1);
        g1.topRows(mb) = l1.grad_real;
        g1.bottomRows(mb) = l1.grad_fake;
        params.d1.sgd_step(params.d1.backward(t1, g1), hyper.lr);
        params.d1.clip_weights(params.clip_bound);
        acc.loss_d1 += l1.value;

        if (use_d2) {
          Tape t2;
          const Matrix d2_out = params.d2.forward(x, &t2);
          const ConditionSplit real_split = split_by_condition(batch_labels, unknown);
          const ConditionSplit fake_split = split_by_condition(batch_labels, unknown, batch);
          const D2Split parts{gather_rows(d2_out, real_split.known),
                              gather_rows(d2_out, real_split.unknown),
                              gather_rows(d2_out, fake_split.known),
                              gather_rows(d2_out, fake_split.unknown)};
          const D2Value v2 = loss_d2(parts);
          Matrix g2 = Matrix::Zero(2 * mb, 1);
          scatter_rows(g2, real_split.known, v2.grad.known_real);
          scatter_rows(g2, real_split.unknown, v2.grad.unknown_real);
          scatter_rows(g2, fake_split.known, v2.grad.known_fake);
          scatter_rows(g2, fake_split.unknown, v2.grad.unknown_fake);
          // D2 ascends the game value.
          params.d2.sgd_step(negated(params.d2.backward(t2, g2)), hyper.lr);
          params.d2.clip_weights(params.clip_bound);
          acc.loss_d2 += v2.value;
        }

        Tape tc1, tc2;
        const Matrix c1_out = params.c1.forward(x, &tc1);
        Matrix c2_out(0, 2);
        std::vector<int> c2_targets;
        if (use_c2) {
          c2_out = params.c2.forward(x, &tc2);
          c2_targets = binary_targets(stacked_labels, unknown);
        }
        const ClsLoss lc = loss_cls(c1_out, stacked_labels, c2_out, c2_targets);
        params.c1.sgd_step(params.c1.backward(tc1, lc.grad_c1), hyper.lr);
        if (use_c2) params.c2.sgd_step(params.c2.backward(tc2, lc.grad_c2), hyper.lr);
        acc.loss_cls += lc.value;

        ++critic_count;
        ++result.critic_steps;
        if (on_critic_step) on_critic_step(params);
      }

      // Generator update.
      draw_real(rows, batch_labels);
      Tape tg;
      const Matrix fake =
          params.g.forward(generator_input(batch_labels, c, params.noise_dim, rng), &tg);
      Matrix fake_grad = Matrix::Zero(fake.rows(), fake.cols());

      Tape t1;
      const Matrix d1_fake = params.d1.forward(fake, &t1);
      Matrix d2_unknown(0, 1), d2_known(0, 1);
      Tape t2;
      Matrix d2_out;
      const ConditionSplit split = split_by_condition(batch_labels, unknown);
      if (use_d2) {
        d2_out = params.d2.forward(fake, &t2);
        d2_known = gather_rows(d2_out, split.known);
        d2_unknown = gather_rows(d2_out, split.unknown);
      }

      double fake_cls = 0.0;
      if (hyper.generator_cls) {
        Tape tc1, tc2;
        const Matrix c1_out = params.c1.forward(fake, &tc1);
        Matrix c2_out(0, 2);
        std::vector<int> c2_targets;
        if (use_c2) {
          c2_out = params.c2.forward(fake, &tc2);
          c2_targets = binary_targets(batch_labels, unknown);
        }
        const ClsLoss lc = loss_cls(c1_out, batch_labels, c2_out, c2_targets);
        fake_cls = lc.value;
        Matrix in_grad;
        params.c1.backward(tc1, lc.grad_c1, &in_grad);
        fake_grad += in_grad;
        if (use_c2) {
          params.c2.backward(tc2, lc.grad_c2, &in_grad);
          fake_grad += in_grad;
        }
      }

      const GLoss lg = loss_g(d1_fake, d2_unknown, d2_known, fake_cls, lambda);
      Matrix in_grad;
      params.d1.backward(t1, lg.grad_d1_fake, &in_grad);
      fake_grad += in_grad;
      if (use_d2) {
        Matrix g2 = Matrix::Zero(d2_out.rows(), 1);
        scatter_rows(g2, split.known, lg.grad_d2_known_fake);
        scatter_rows(g2, split.unknown, lg.grad_d2_unknown_fake);
        params.d2.backward(t2, g2, &in_grad);
        fake_grad += in_grad;
      }
      params.g.sgd_step(params.g.backward(tg, fake_grad), hyper.lr);
      acc.loss_g += lg.value;
      ++result.generator_steps;
    }
    if (critic_count > 0) {
      const double k = static_cast<double>(critic_count);
      acc.loss_d1 /= k;
      acc.loss_d2 /= k;
      acc.loss_cls /= k;
      acc.loss_g /= static_cast<double>(steps_per_epoch);
    }
    result.trace.push_back(acc);
  }
  result.params = std::move(params);
  return result;
}

GeneratedSet generate_features(const GanParams& params, std::span<const int> counts,
                               std::uint64_t seed) {
  if (counts.size() != static_cast<std::size_t>(params.code_dim())) {
    throw std::invalid_argument("generate_features: need one count per class (c+1)");
  }
  std::vector<int> labels;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw std::invalid_argument("generate_features: negative count");
    labels.insert(labels.end(), static_cast<std::size_t>(counts[j]), static_cast<int>(j) + 1);
  }
  GeneratedSet out;
  if (labels.empty()) {
    out.features = Matrix(0, params.feature_dim());
    return out;
  }
  Rng rng(seed);
  out.features = params.g.forward(generator_input(labels, params.num_classes, params.noise_dim, rng));
  out.labels = std::move(labels);
  return out;
}

void write_loss_trace(const std::filesystem::path& path, std::span<const GanEpochLoss> trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "epoch,loss_d1,loss_d2,loss_cls,loss_g\n";
  char buf[160];
  for (const auto& e : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", e.epoch, e.loss_d1, e.loss_d2,
                  e.loss_cls, e.loss_g);
    out << buf;
  }
}

void save_gan(const GanParams& p, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  p.g.save(dir / "g.nn");
  p.d1.save(dir / "d1.nn");
  p.d2.save(dir / "d2.nn");
  p.c1.save(dir / "c1.nn");
  p.c2.save(dir / "c2.nn");
  std::ofstream out(dir / "manifest.txt", std::ios::trunc);
  char buf[64];
  out << "format=itosr-gan v1\n";
  out << "noise_dim=" << p.noise_dim << "\n";
  out << "num_classes=" << p.num_classes << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.lambda);
  out << "lambda=" << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.17g", p.clip_bound);
  out << "clip_bound=" << buf << "\n";
  out << "networks=g.nn,d1.nn,d2.nn,c1.nn,c2.nn\n";
}

GanParams load_gan(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.txt");
  if (!in) throw std::runtime_error("missing GAN manifest in " + dir.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (kv["format"] != "itosr-gan v1") throw std::runtime_error("unsupported GAN manifest");
  GanParams p;
  p.noise_dim = std::stoi(kv.at("noise_dim"));
  p.num_classes = std::stoi(kv.at("num_classes"));
  p.lambda = std::stod(kv.at("lambda"));
  p.clip_bound = std::stod(kv.at("clip_bound"));
  p.g = DenseNet::load(dir / "g.nn");
  p.d1 = DenseNet::load(dir / "d1.nn");
  p.d2 = DenseNet::load(dir / "d2.nn");
  p.c1 = DenseNet::load(dir / "c1.nn");
  p.c2 = DenseNet::load(dir / "c2.nn");
  if (p.g.input_dim() != p.noise_dim + p.code_dim() || p.c1.output_dim() != p.code_dim()) {
    throw std::runtime_error("GAN checkpoint networks disagree with the manifest");
  }
  return p;
}

}  // namespace itosr
