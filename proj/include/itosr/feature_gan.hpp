#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "itosr/gan_losses.hpp"
#include "itosr/tensor_nn.hpp"

namespace itosr {

struct GanHyper {
  int noise_dim = 64;
  int hidden = 128;
  double lambda = 0.1;
  double clip_bound = 0.01;
  int epochs = 20;
  int batch = 64;
  int n_critic = 5;
  double lr = 0.02;
  bool use_d2 = true;
  bool use_c2 = true;
  // G also minimizes the classification loss on its own samples.
  bool generator_cls = true;
  std::uint64_t seed = 0;
};

// Generator G, critics D1/D2 and classifiers C1/C2 for c known classes plus
// one unknown class. G consumes [one-hot code (c+1) | noise z].
struct GanParams {
  DenseNet g;
  DenseNet d1;
  DenseNet d2;
  DenseNet c1;
  DenseNet c2;
  int noise_dim = 0;
  int num_classes = 0;
  double lambda = 0.1;
  double clip_bound = 0.01;

  int code_dim() const { return num_classes + 1; }
  Eigen::Index feature_dim() const { return g.output_dim(); }

  bool operator==(const GanParams& other) const = default;
};

// Rows are the mutually orthogonal one-hot condition codes, one per class.
Matrix orthogonal_codes(int num_classes);

GanParams init_gan(Eigen::Index feature_dim, int num_classes, const GanHyper& hyper);

struct GanEpochLoss {
  int epoch = 0;
  double loss_d1 = 0.0;
  double loss_d2 = 0.0;
  double loss_cls = 0.0;
  double loss_g = 0.0;
};

struct GanTrainResult {
  GanParams params;
  std::vector<GanEpochLoss> trace;
  std::size_t critic_steps = 0;
  std::size_t generator_steps = 0;
};

// Called after each critic update (D1/D2 already clipped).
using CriticObserver = std::function<void(const GanParams&)>;

// Alternating optimization over real latent features labeled in [1, c+1]:
// n_critic updates of D1, D2 (clipped after each step) and C1, C2 per single
// G update. Every real batch holds both known and unknown rows; each pool is
// drawn from its own reshuffled cycle, so a small unknown pool is reused.
// Fakes are conditioned on the same labels as the real batch.
GanTrainResult train_gan(const Matrix& real_latents, std::span<const int> real_labels,
                         GanParams params, const GanHyper& hyper,
                         const CriticObserver& on_critic_step = {});

struct GeneratedSet {
  Matrix features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

// counts[j] samples of class j + 1, rows grouped by class in label order.
GeneratedSet generate_features(const GanParams& params, std::span<const int> counts,
                               std::uint64_t seed);

void write_loss_trace(const std::filesystem::path& path, std::span<const GanEpochLoss> trace);

// Directory with g.nn, d1.nn, d2.nn, c1.nn, c2.nn and manifest.txt.
void save_gan(const GanParams& params, const std::filesystem::path& dir);
GanParams load_gan(const std::filesystem::path& dir);

}  // namespace itosr
