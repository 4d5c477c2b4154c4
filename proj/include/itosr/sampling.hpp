#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "itosr/baseline.hpp"
#include "itosr/linalg.hpp"

namespace itosr {

enum class Group : std::uint8_t { kKnown, kUnknown, kUndetermined };

const char* to_string(Group g);

// Mean and population standard deviation of train-set confidences.
struct ThresholdStats {
  double mu = 0.0;
  double delta = 0.0;
  double alpha = 2.5;

  double upper() const { return mu + alpha * delta; }
  double lower() const { return mu - alpha * delta; }
};

ThresholdStats compute_threshold_stats(std::span<const double> train_confidences, double alpha);

struct GroupCounts {
  std::size_t known = 0;
  std::size_t unknown = 0;
  std::size_t undetermined = 0;
};

// Per test row: group tag, tentative label and confidence. KNOWN and
// UNDETERMINED rows carry their best known-class label; UNKNOWN rows carry
// c + 1.
struct PseudoLabelGrouping {
  std::vector<Group> groups;
  std::vector<int> tentative;
  std::vector<double> confidence;
  int num_classes = 0;

  std::size_t size() const { return groups.size(); }
  GroupCounts counts() const;
};

// KNOWN iff s > mu + alpha*delta, UNKNOWN iff s < mu - alpha*delta, otherwise
// UNDETERMINED (both boundaries inclusive).
PseudoLabelGrouping threshold_grouping(std::span<const double> confidence,
                                       std::span<const int> known_labels,
                                       const ThresholdStats& stats, int num_classes);
PseudoLabelGrouping threshold_grouping(const Predictions& preds, const ThresholdStats& stats,
                                       int num_classes);

// Test rows used as pseudo-labeled training data; indices ascending.
struct SelectedSubset {
  std::vector<std::size_t> indices;
  std::vector<int> labels;

  std::size_t size() const { return indices.size(); }
  std::size_t count_label(int label) const;
};

// For every KNOWN/UNKNOWN row, finds its K nearest test rows (Euclidean,
// self excluded, ties to the lower index) among all rows, and keeps it when
// strictly more than K/2 of them share its tentative label.
SelectedSubset knn_consistency_filter(const PseudoLabelGrouping& grouping, const Matrix& latents,
                                      int k);

// Keeps every KNOWN/UNKNOWN row; the score-only ablation.
SelectedSubset score_only_selection(const PseudoLabelGrouping& grouping);

// row_id,group,tentative_label,s,selected
void write_sampling_csv(const std::filesystem::path& path, const PseudoLabelGrouping& grouping,
                        const SelectedSubset& selected);

}  // namespace itosr
