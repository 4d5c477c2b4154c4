#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "itosr/dataset.hpp"
#include "itosr/tensor_nn.hpp"

namespace itosr {

struct BaselineHyper {
  int epochs = 60;
  int batch = 32;
  double lr_embedder = 0.002;
  double lr_head = 0.02;
  int hidden = 128;
  int latent = 64;
  std::uint64_t seed = 0;
};

// Embedder F' (d -> hidden -> latent) followed by a three-layer perceptron
// head C (latent -> hidden -> hidden -> k logits). k is c for the initial
// model and c + 1 once an unknown class has been added.
struct BaselineModel {
  DenseNet embedder;
  DenseNet head;
  int num_classes = 0;

  int head_classes() const { return static_cast<int>(head.output_dim()); }
  Eigen::Index latent_dim() const { return embedder.output_dim(); }
  Eigen::Index input_dim() const { return embedder.input_dim(); }

  void validate() const;
  bool operator==(const BaselineModel& other) const = default;
};

// Struct-of-arrays view over per-row predictions. Labels are 1-based.
struct Predictions {
  Matrix scores;                   // softmax, rows sum to 1
  std::vector<int> labels;         // argmax over all k entries
  std::vector<int> known_labels;   // argmax over the c known entries
  std::vector<double> confidence;  // max softmax over the c known entries
  Matrix latent;                   // embedder output

  std::size_t size() const { return labels.size(); }
};

BaselineModel init_baseline(Eigen::Index input_dim, int num_classes, int head_classes,
                            const BaselineHyper& hyper, Rng& rng);

// Fresh head of width `head_classes` on top of an existing embedder.
DenseNet init_head(Eigen::Index latent_dim, int head_classes, int hidden, Rng& rng);

// Adds output units (initialized like a fresh layer) so the head emits
// `head_classes` logits; existing units are kept.
void grow_head(BaselineModel& model, int head_classes, Rng& rng);

// Mini-batch SGD on cross-entropy over the union of `inputs` (passed through
// the embedder) and `latents` (fed straight into the head). Labels are 1-based
// in [1, k]. Batches are drawn from a seeded shuffle of the union; the last
// partial batch is kept.
void fit_baseline(BaselineModel& model, const Matrix& inputs, std::span<const int> input_labels,
                  const Matrix& latents, std::span<const int> latent_labels,
                  const BaselineHyper& hyper, Rng& rng);

// Initializes a c-way model and trains it on the labeled train table.
BaselineModel train_baseline(const FeatureDataset& ds, const BaselineHyper& hyper);

Predictions predict(const BaselineModel& model, const Matrix& features);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

void save_baseline(const BaselineModel& model, const std::filesystem::path& path);
BaselineModel load_baseline(const std::filesystem::path& path);

}  // namespace itosr
