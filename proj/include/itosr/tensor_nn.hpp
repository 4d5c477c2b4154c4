#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "itosr/linalg.hpp"
#include "itosr/random.hpp"

namespace itosr {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Activation : std::uint8_t { kLinear = 0, kRelu = 1 };

// y = act(x * weight + bias); weight is fan_in x fan_out.
struct DenseLayer {
  Matrix weight;
  RowVector bias;
  Activation activation = Activation::kLinear;

  Eigen::Index fan_in() const { return weight.rows(); }
  Eigen::Index fan_out() const { return weight.cols(); }
};

// Per-layer parameter gradients, congruent with a DenseNet's layers.
struct GradientSet {
  std::vector<Matrix> weight;
  std::vector<RowVector> bias;

  GradientSet& operator+=(const GradientSet& other);
  double max_abs() const;
};

// Activations cached by DenseNet::forward for the matching backward call.
struct Tape {
  std::vector<Matrix> inputs;  // input to each layer
  std::vector<Matrix> pre;     // pre-activation of each layer
  std::uint64_t net_id = 0;
  std::uint64_t net_version = 0;
};

class DenseNet {
 public:
  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers);
  // Copies get a fresh identity so tapes never validate across copies.
  DenseNet(const DenseNet& other);
  DenseNet& operator=(const DenseNet& other);
  DenseNet(DenseNet&&) noexcept = default;
  DenseNet& operator=(DenseNet&&) noexcept = default;

  // in -> hidden (ReLU) -> hidden (ReLU) -> out (linear). Weights and biases
  // are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static DenseNet three_layer(Eigen::Index in, Eigen::Index hidden, Eigen::Index out, Rng& rng);

  // Fully-connected stack with the given widths; ReLU between layers and a
  // linear output.
  static DenseNet mlp(const std::vector<Eigen::Index>& widths, Rng& rng);

  Matrix forward(const Matrix& batch, Tape* tape = nullptr) const;

  // Reverse-mode gradients for the traced computation. When `input_grad` is
  // non-null it receives d(loss)/d(batch).
  GradientSet backward(const Tape& tape, const Matrix& output_grad,
                       Matrix* input_grad = nullptr) const;

  void sgd_step(const GradientSet& grads, double lr);
  void clip_weights(double bound);

  GradientSet zero_gradients() const;

  Eigen::Index input_dim() const;
  Eigen::Index output_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  const DenseLayer& layer(std::size_t i) const { return layers_[i]; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  // Flat parameter view, weights then bias per layer. Mutation through
  // `parameter` invalidates outstanding tapes.
  std::size_t parameter_count() const;
  double& parameter(std::size_t index);
  double parameter(std::size_t index) const;
  static double gradient_at(const GradientSet& grads, std::size_t index);
  double max_abs_parameter() const;

  // Replaces layers (used when a classifier head grows); invalidates tapes.
  void set_layers(std::vector<DenseLayer> layers);

  void save(std::ostream& out) const;
  static DenseNet load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static DenseNet load(const std::filesystem::path& path);

  // Bitwise parameter equality.
  bool operator==(const DenseNet& other) const;

 private:
  void check_chain() const;
  const double& locate(std::size_t index) const;
  void touch() { ++version_; }

  std::vector<DenseLayer> layers_;
  std::uint64_t id_ = next_id();
  std::uint64_t version_ = 0;

  static std::uint64_t next_id();
};

// Softmax rows of `logits`.
Matrix softmax_rows(const Matrix& logits);

}  // namespace itosr
