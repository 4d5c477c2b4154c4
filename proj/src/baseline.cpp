#include "itosr/baseline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "itosr/losses.hpp"

namespace itosr {

void BaselineModel::validate() const {
  if (embedder.num_layers() == 0 || head.num_layers() == 0) {
    throw std::invalid_argument("baseline model is empty");
  }
  if (embedder.output_dim() != head.input_dim()) {
    throw ShapeError("embedder output width differs from head input width");
  }
  const int k = head_classes();
  if (k != num_classes && k != num_classes + 1) {
    throw ShapeError("head width must be c or c+1");
  }
}

DenseNet init_head(Eigen::Index latent_dim, int head_classes, int hidden, Rng& rng) {
  return DenseNet::three_layer(latent_dim, hidden, head_classes, rng);
}

BaselineModel init_baseline(Eigen::Index input_dim, int num_classes, int head_classes,
                            const BaselineHyper& hyper, Rng& rng) {
  if (hyper.hidden <= 0 || hyper.latent <= 0) throw std::invalid_argument("widths must be positive");
  BaselineModel m;
  m.num_classes = num_classes;
  m.embedder = DenseNet::mlp({input_dim, hyper.hidden, hyper.latent}, rng);
  m.head = init_head(hyper.latent, head_classes, hyper.hidden, rng);
  m.validate();
  return m;
}

void grow_head(BaselineModel& model, int head_classes, Rng& rng) {
  const int k = model.head_classes();
  if (head_classes == k) return;
  if (head_classes < k) throw std::invalid_argument("grow_head cannot shrink a head");
  auto layers = model.head.layers();
  auto& last = layers.back();
  const double bound = 1.0 / std::sqrt(static_cast<double>(last.fan_in()));
  Matrix w(last.fan_in(), head_classes);
  RowVector b(head_classes);
  w.leftCols(k) = last.weight;
  b.head(k) = last.bias;
  for (Eigen::Index c = k; c < head_classes; ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
    b(c) = rng.uniform(-bound, bound);
  }
  last.weight = std::move(w);
  last.bias = std::move(b);
  model.head.set_layers(std::move(layers));
  model.validate();
}

void fit_baseline(BaselineModel& model, const Matrix& inputs, std::span<const int> input_labels,
                  const Matrix& latents, std::span<const int> latent_labels,
                  const BaselineHyper& hyper, Rng& rng) {
  model.validate();
  const auto n_in = static_cast<std::size_t>(inputs.rows());
  const auto n_lat = static_cast<std::size_t>(latents.rows());
  if (input_labels.size() != n_in || latent_labels.size() != n_lat) {
    throw std::invalid_argument("fit_baseline: label count differs from row count");
  }
  if (n_in + n_lat == 0) throw std::invalid_argument("fit_baseline: empty training set");
  if (n_in > 0 && inputs.cols() != model.input_dim()) throw ShapeError("fit_baseline: input width");
  if (n_lat > 0 && latents.cols() != model.latent_dim()) throw ShapeError("fit_baseline: latent width");
  const int k = model.head_classes();
  for (auto labels : {input_labels, latent_labels}) {
    for (int l : labels) {
      if (l < 1 || l > k) throw std::out_of_range("fit_baseline: label outside [1, k]");
    }
  }
  if (hyper.batch <= 0) throw std::invalid_argument("fit_baseline: batch must be positive");

  // Union index: [0, n_in) are input rows, [n_in, n_in + n_lat) latent rows.
  std::vector<std::size_t> order(n_in + n_lat);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(hyper.batch);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      std::vector<std::size_t> in_rows, lat_rows;
      for (std::size_t i = start; i < stop; ++i) {
        (order[i] < n_in ? in_rows : lat_rows).push_back(order[i] < n_in ? order[i] : order[i] - n_in);
      }
      const auto m_in = static_cast<Eigen::Index>(in_rows.size());
      const auto m_lat = static_cast<Eigen::Index>(lat_rows.size());

      Tape embed_tape;
      Matrix z(m_in + m_lat, model.latent_dim());
      std::vector<int> targets;
      targets.reserve(in_rows.size() + lat_rows.size());
      if (m_in > 0) {
        Matrix x(m_in, inputs.cols());
        for (Eigen::Index r = 0; r < m_in; ++r) {
          x.row(r) = inputs.row(static_cast<Eigen::Index>(in_rows[static_cast<std::size_t>(r)]));
          targets.push_back(input_labels[in_rows[static_cast<std::size_t>(r)]]);
        }
        z.topRows(m_in) = model.embedder.forward(x, &embed_tape);
      }
      for (Eigen::Index r = 0; r < m_lat; ++r) {
        z.row(m_in + r) = latents.row(static_cast<Eigen::Index>(lat_rows[static_cast<std::size_t>(r)]));
        targets.push_back(latent_labels[lat_rows[static_cast<std::size_t>(r)]]);
      }

      Tape head_tape;
      const Matrix logits = model.head.forward(z, &head_tape);
      const LossAndGrad ce = softmax_cross_entropy(logits, targets);
      Matrix z_grad;
      const GradientSet head_grads = model.head.backward(head_tape, ce.grad, m_in > 0 ? &z_grad : nullptr);
      if (m_in > 0) {
        const GradientSet embed_grads =
            model.embedder.backward(embed_tape, Matrix(z_grad.topRows(m_in)));
        model.embedder.sgd_step(embed_grads, hyper.lr_embedder);
      }
      model.head.sgd_step(head_grads, hyper.lr_head);
    }
  }
}

BaselineModel train_baseline(const FeatureDataset& ds, const BaselineHyper& hyper) {
  ds.validate();
  if (ds.num_classes < 2) throw std::invalid_argument("train_baseline: need at least 2 classes");
  if (ds.train_size() == 0) throw std::invalid_argument("train_baseline: empty train set");
  Rng rng(hyper.seed);
  BaselineModel model = init_baseline(ds.dim(), ds.num_classes, ds.num_classes, hyper, rng);
  fit_baseline(model, ds.train_features, ds.train_labels, Matrix(0, model.latent_dim()), {}, hyper,
               rng);
  return model;
}

Predictions predict(const BaselineModel& model, const Matrix& features) {
  model.validate();
  if (features.cols() != model.input_dim()) {
    throw ShapeError("predict: feature width " + std::to_string(features.cols()) +
                     " != model input width " + std::to_string(model.input_dim()));
  }
  Predictions p;
  p.latent = model.embedder.forward(features);
  p.scores = softmax_rows(model.head.forward(p.latent));
  const auto n = static_cast<std::size_t>(features.rows());
  p.labels.resize(n);
  p.known_labels.resize(n);
  p.confidence.resize(n);
  for (Eigen::Index r = 0; r < p.scores.rows(); ++r) {
    const auto i = static_cast<std::size_t>(r);
    Eigen::Index arg = 0;
    p.scores.row(r).maxCoeff(&arg);
    p.labels[i] = static_cast<int>(arg) + 1;
    p.confidence[i] = p.scores.row(r).head(model.num_classes).maxCoeff(&arg);
    p.known_labels[i] = static_cast<int>(arg) + 1;
  }
  return p;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::invalid_argument("accuracy: sizes differ or empty");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {
constexpr std::array<char, 8> kBaselineMagic = {'I', 'T', 'O', 'S', 'R', 'B', 'M', '1'};
}

void save_baseline(const BaselineModel& model, const std::filesystem::path& path) {
  model.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kBaselineMagic.data(), kBaselineMagic.size());
  // k, h, d, c as little-endian u32.
  for (auto v : {static_cast<std::uint32_t>(model.head_classes()),
                 static_cast<std::uint32_t>(model.latent_dim()),
                 static_cast<std::uint32_t>(model.input_dim()),
                 static_cast<std::uint32_t>(model.num_classes)}) {
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  model.embedder.save(out);
  model.head.save(out);
}

BaselineModel load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kBaselineMagic) throw std::runtime_error("not a baseline checkpoint");
  std::array<std::uint32_t, 4> header{};
  for (auto& v : header) {
    std::array<unsigned char, 4> b{};
    in.read(reinterpret_cast<char*>(b.data()), 4);
    v = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  BaselineModel m;
  m.embedder = DenseNet::load(in);
  m.head = DenseNet::load(in);
  m.num_classes = static_cast<int>(header[3]);
  m.validate();
  if (static_cast<std::uint32_t>(m.head_classes()) != header[0] ||
      static_cast<std::uint32_t>(m.latent_dim()) != header[1] ||
      static_cast<std::uint32_t>(m.input_dim()) != header[2]) {
    throw std::runtime_error("baseline checkpoint header disagrees with its networks");
  }
  return m;
}

}  // namespace itosr
