#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itosr/baseline.hpp"
#include "itosr/dataset.hpp"
#include "itosr/feature_gan.hpp"
#include "itosr/metrics.hpp"
#include "itosr/sampling.hpp"

namespace itosr {

// Which model a baseline update starts from at t >= 2.
enum class UpdateSource { kPrevious, kInitial };
// Whether the (c+1)-way head is re-initialized or grown from the old head.
enum class HeadInit { kReinit, kFinetune };

const char* to_string(UpdateSource s);
const char* to_string(HeadInit h);

struct PipelineConfig {
  int iterations = 2;
  double alpha = 2.5;
  int k = 10;
  BaselineHyper baseline;
  GanHyper gan;
  bool use_dual_space_sampling = true;
  UpdateSource update_from = UpdateSource::kPrevious;
  HeadInit head_init = HeadInit::kReinit;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationReport {
  int t = 0;
  std::string sampling_mode;  // "dual-space" or "score-only"
  ThresholdStats stats;
  GroupCounts groups;
  std::size_t selected = 0;
  std::size_t selected_unknown = 0;
  std::size_t generated = 0;
  bool gan_skipped = false;
  std::vector<int> generation_targets;
  std::vector<GanEpochLoss> gan_trace;
  std::optional<EvalResult> metrics;

  // Debug payload for the per-iteration CSV dumps.
  PseudoLabelGrouping grouping;
  SelectedSubset selection;
};

struct RunResult {
  Predictions initial;
  std::optional<EvalResult> initial_metrics;
  std::vector<IterationReport> iterations;
  Predictions final_predictions;
  BaselineModel final_model;
};

// Per-class generation targets raising every class total (train + selected)
// to the largest total. Both histograms cover labels 1..c+1 (index 0 is
// label 1).
std::vector<int> balance_counts(std::span<const int> train_histogram,
                                std::span<const int> selected_histogram);

std::vector<int> label_histogram(std::span<const int> labels, int num_labels);

// Returns a (c+1)-way model trained on D^l, the selected test rows (through
// the embedder) and the generated latents (straight into the head). The
// embedder is warm-started from `model`.
BaselineModel baseline_update(const BaselineModel& model, const FeatureDataset& ds,
                              const SelectedSubset& selected, const GeneratedSet& generated,
                              const BaselineHyper& hyper, HeadInit head_init);

RunResult run_it_osr(const FeatureDataset& ds, const PipelineConfig& cfg);

}  // namespace itosr
