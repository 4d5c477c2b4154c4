#include "itosr/tensor_nn.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

namespace itosr {

namespace {

constexpr std::array<char, 8> kMagic = {'I', 'T', 'O', 'S', 'R', 'N', 'N', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

std::uint64_t read_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (!in) throw std::runtime_error("network checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }
double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

}  // namespace

std::uint64_t DenseNet::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { check_chain(); }

DenseNet::DenseNet(const DenseNet& other) : layers_(other.layers_) {}

DenseNet& DenseNet::operator=(const DenseNet& other) {
  if (this != &other) {
    layers_ = other.layers_;
    id_ = next_id();
    version_ = 0;
  }
  return *this;
}

void DenseNet::check_chain() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.fan_out()) throw ShapeError("layer bias width differs from fan_out");
    if (i > 0 && layers_[i - 1].fan_out() != l.fan_in()) {
      throw ShapeError("layer " + std::to_string(i) + " does not chain with its predecessor");
    }
  }
}

DenseNet DenseNet::mlp(const std::vector<Eigen::Index>& widths, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Eigen::Index in = widths[i];
    const Eigen::Index out = widths[i + 1];
    if (in <= 0 || out <= 0) throw ShapeError("layer widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseLayer l;
    l.weight.resize(in, out);
    l.bias.resize(out);
    for (Eigen::Index r = 0; r < in; ++r) {
      for (Eigen::Index c = 0; c < out; ++c) l.weight(r, c) = rng.uniform(-bound, bound);
    }
    for (Eigen::Index c = 0; c < out; ++c) l.bias(c) = rng.uniform(-bound, bound);
    l.activation = i + 2 < widths.size() ? Activation::kRelu : Activation::kLinear;
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

DenseNet DenseNet::three_layer(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng) {
  return mlp({in, hidden, hidden, out}, rng);
}

Eigen::Index DenseNet::input_dim() const { return layers_.empty() ? 0 : layers_.front().fan_in(); }
Eigen::Index DenseNet::output_dim() const { return layers_.empty() ? 0 : layers_.back().fan_out(); }

Matrix DenseNet::forward(const Matrix& batch, Tape* tape) const {
  if (layers_.empty()) throw ShapeError("forward on an empty network");
  if (batch.cols() != input_dim()) {
    throw ShapeError("batch width " + std::to_string(batch.cols()) + " != input_dim " +
                     std::to_string(input_dim()));
  }
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
    tape->net_id = id_;
    tape->net_version = version_;
  }
  Matrix x = batch;
  for (const auto& l : layers_) {
    Matrix z = x * l.weight;
    z.rowwise() += l.bias;
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->pre.push_back(z);
    }
    x = l.activation == Activation::kRelu ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

GradientSet DenseNet::backward(const Tape& tape, const Matrix& output_grad,
                               Matrix* input_grad) const {
  if (tape.net_id != id_ || tape.net_version != version_ || tape.inputs.size() != layers_.size()) {
    throw std::logic_error("stale tape: network changed since forward");
  }
  const Eigen::Index m = tape.inputs.front().rows();
  if (output_grad.rows() != m || output_grad.cols() != output_dim()) {
    throw ShapeError("output_grad shape does not match the traced forward output");
  }
  GradientSet g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = output_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& l = layers_[i];
    if (l.activation == Activation::kRelu) {
      delta = delta.cwiseProduct(
          tape.pre[i].unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    }
    g.weight[i] = tape.inputs[i].transpose() * delta;
    g.bias[i] = delta.colwise().sum();
    if (i > 0 || input_grad) delta = delta * l.weight.transpose();
  }
  if (input_grad) *input_grad = std::move(delta);
  return g;
}

GradientSet DenseNet::zero_gradients() const {
  GradientSet g;
  for (const auto& l : layers_) {
    g.weight.push_back(Matrix::Zero(l.fan_in(), l.fan_out()));
    g.bias.push_back(RowVector::Zero(l.fan_out()));
  }
  return g;
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (weight.size() != other.weight.size()) throw ShapeError("gradient sets are not congruent");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (weight[i].rows() != other.weight[i].rows() || weight[i].cols() != other.weight[i].cols()) {
      throw ShapeError("gradient sets are not congruent");
    }
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

double GradientSet::max_abs() const {
  double m = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i) {
    if (weight[i].size()) m = std::max(m, weight[i].cwiseAbs().maxCoeff());
    if (bias[i].size()) m = std::max(m, bias[i].cwiseAbs().maxCoeff());
  }
  return m;
}

void DenseNet::sgd_step(const GradientSet& grads, double lr) {
  if (grads.weight.size() != layers_.size() || grads.bias.size() != layers_.size()) {
    throw ShapeError("gradient set has the wrong layer count");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    if (grads.weight[i].rows() != l.fan_in() || grads.weight[i].cols() != l.fan_out() ||
        grads.bias[i].size() != l.fan_out()) {
      throw ShapeError("gradient shape mismatch at layer " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight -= lr * grads.weight[i];
    layers_[i].bias -= lr * grads.bias[i];
  }
  touch();
}

void DenseNet::clip_weights(double bound) {
  for (auto& l : layers_) {
    l.weight = l.weight.cwiseMax(-bound).cwiseMin(bound);
    l.bias = l.bias.cwiseMax(-bound).cwiseMin(bound);
  }
  touch();
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double& DenseNet::parameter(std::size_t index) {
  touch();
  return const_cast<double&>(std::as_const(*this).locate(index));
}

double DenseNet::parameter(std::size_t index) const { return locate(index); }

const double& DenseNet::locate(std::size_t index) const {
  for (const auto& l : layers_) {
    const auto nw = static_cast<std::size_t>(l.weight.size());
    if (index < nw) return l.weight.data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(l.bias.size());
    if (index < nb) return l.bias.data()[index];
    index -= nb;
  }
  throw std::out_of_range("parameter index out of range");
}

double DenseNet::gradient_at(const GradientSet& grads, std::size_t index) {
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    const auto nw = static_cast<std::size_t>(grads.weight[i].size());
    if (index < nw) return grads.weight[i].data()[index];
    index -= nw;
    const auto nb = static_cast<std::size_t>(grads.bias[i].size());
    if (index < nb) return grads.bias[i].data()[index];
    index -= nb;
  }
  throw std::out_of_range("gradient index out of range");
}

double DenseNet::max_abs_parameter() const {
  double m = 0.0;
  for (const auto& l : layers_) {
    if (l.weight.size()) m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size()) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

void DenseNet::set_layers(std::vector<DenseLayer> layers) {
  layers_ = std::move(layers);
  check_chain();
  touch();
}

void DenseNet::save(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, layers_.size());
  for (const auto& l : layers_) {
    write_u64(out, static_cast<std::uint64_t>(l.fan_in()));
    write_u64(out, static_cast<std::uint64_t>(l.fan_out()));
    write_u64(out, static_cast<std::uint64_t>(l.activation));
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) write_f64(out, l.weight.data()[i]);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) write_f64(out, l.bias(i));
  }
}

DenseNet DenseNet::load(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("not a network checkpoint");
  const std::uint64_t count = read_u64(in);
  if (count > 1024) throw std::runtime_error("network checkpoint has an absurd layer count");
  std::vector<DenseLayer> layers;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto in_dim = static_cast<Eigen::Index>(read_u64(in));
    const auto out_dim = static_cast<Eigen::Index>(read_u64(in));
    const auto act = read_u64(in);
    if (act > 1 || in_dim <= 0 || out_dim <= 0 || in_dim > (1 << 24) || out_dim > (1 << 24)) {
      throw std::runtime_error("network checkpoint has a corrupt layer header");
    }
    DenseLayer l;
    l.activation = static_cast<Activation>(act);
    l.weight.resize(in_dim, out_dim);
    l.bias.resize(out_dim);
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = read_f64(in);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = read_f64(in);
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

void DenseNet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save(out);
}

DenseNet DenseNet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load(in);
}

bool DenseNet::operator==(const DenseNet& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& a = layers_[i];
    const auto& b = other.layers_[i];
    if (a.activation != b.activation || a.fan_in() != b.fan_in() || a.fan_out() != b.fan_out()) {
      return false;
    }
    if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(double) * a.weight.size()) != 0 ||
        std::memcmp(a.bias.data(), b.bias.data(), sizeof(double) * a.bias.size()) != 0) {
      return false;
    }
  }
  return true;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) - mx);
      sum += out(r, c);
    }
    out.row(r) /= sum;
  }
  return out;
}

}  // namespace itosr
