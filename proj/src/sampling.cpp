#include "itosr/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace itosr {

const char* to_string(Group g) {
  switch (g) {
    case Group::kKnown: return "known";
    case Group::kUnknown: return "unknown";
    case Group::kUndetermined: return "undetermined";
  }
  return "?";
}

ThresholdStats compute_threshold_stats(std::span<const double> values, double alpha) {
  if (values.size() < 2) throw std::invalid_argument("threshold stats need at least two values");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / n), alpha};
}

GroupCounts PseudoLabelGrouping::counts() const {
  GroupCounts c;
  for (Group g : groups) {
    switch (g) {
      case Group::kKnown: ++c.known; break;
      case Group::kUnknown: ++c.unknown; break;
      case Group::kUndetermined: ++c.undetermined; break;
    }
  }
  return c;
}

PseudoLabelGrouping threshold_grouping(std::span<const double> confidence,
                                       std::span<const int> known_labels,
                                       const ThresholdStats& stats, int num_classes) {
  if (confidence.size() != known_labels.size()) {
    throw std::invalid_argument("grouping: confidence and label counts differ");
  }
  PseudoLabelGrouping out;
  out.num_classes = num_classes;
  out.groups.resize(confidence.size());
  out.tentative.resize(confidence.size());
  out.confidence.assign(confidence.begin(), confidence.end());
  const double upper = stats.upper();
  const double lower = stats.lower();
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double s = confidence[i];
    if (s > upper) {
      out.groups[i] = Group::kKnown;
      out.tentative[i] = known_labels[i];
    } else if (s < lower) {
      out.groups[i] = Group::kUnknown;
      out.tentative[i] = num_classes + 1;
    } else {
      out.groups[i] = Group::kUndetermined;
      out.tentative[i] = known_labels[i];
    }
  }
  return out;
}

PseudoLabelGrouping threshold_grouping(const Predictions& preds, const ThresholdStats& stats,
                                       int num_classes) {
  return threshold_grouping(preds.confidence, preds.known_labels, stats, num_classes);
}

std::size_t SelectedSubset::count_label(int label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

SelectedSubset knn_consistency_filter(const PseudoLabelGrouping& grouping, const Matrix& latents,
                                      int k) {
  const auto n = grouping.size();
  if (static_cast<std::size_t>(latents.rows()) != n) {
    throw std::invalid_argument("knn filter: latent rows differ from grouping size");
  }
  if (k < 1 || static_cast<std::size_t>(k) >= n) {
    throw std::out_of_range("knn filter: K=" + std::to_string(k) + " outside [1, n_u)");
  }
  SelectedSubset out;
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (grouping.groups[i] == Group::kUndetermined) continue;
    dist.clear();
    const auto qi = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist.emplace_back((latents.row(static_cast<Eigen::Index>(j)) - latents.row(qi)).squaredNorm(), j);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    int agree = 0;
    for (int r = 0; r < k; ++r) agree += grouping.tentative[dist[static_cast<std::size_t>(r)].second] == grouping.tentative[i];
    // Strict majority: agree > K/2.
    if (2 * agree > k) {
      out.indices.push_back(i);
      out.labels.push_back(grouping.tentative[i]);
    }
  }
  return out;
}

SelectedSubset score_only_selection(const PseudoLabelGrouping& grouping) {
  SelectedSubset out;
  for (std::size_t i = 0; i < grouping.size(); ++i) {
    if (grouping.groups[i] == Group::kUndetermined) continue;
    out.indices.push_back(i);
    out.labels.push_back(grouping.tentative[i]);
  }
  return out;
}

void write_sampling_csv(const std::filesystem::path& path, const PseudoLabelGrouping& grouping,
                        const SelectedSubset& selected) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::vector<bool> chosen(grouping.size(), false);
  for (std::size_t i : selected.indices) chosen[i] = true;
  out << "row_id,group,tentative_label,s,selected\n";
  char buf[64];
  for (std::size_t i = 0; i < grouping.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", grouping.confidence[i]);
    out << i << ',' << to_string(grouping.groups[i]) << ',' << grouping.tentative[i] << ',' << buf
        << ',' << (chosen[i] ? 1 : 0) << '\n';
  }
}

}  // namespace itosr
