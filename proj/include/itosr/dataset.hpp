#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "itosr/linalg.hpp"

namespace itosr {

class DatasetError : public std::runtime_error {
 public:
  enum class Kind {
    kIo,
    kMalformedHeader,
    kMalformedRow,
    kDimensionMismatch,
    kNonFinite,
    kLabelOutOfRange,
    kInvalid,
  };

  DatasetError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(DatasetError::Kind kind);

// Labeled train table plus unlabeled test table over `num_classes` known
// classes. Labels are 1-based; num_classes + 1 denotes "unknown" and only
// appears in test_truth, which evaluation reads and the pipeline never does.
//
// Feature values are stored at single precision (held in doubles), which is
// what both file encodings carry.
struct FeatureDataset {
  Matrix train_features;
  std::vector<int> train_labels;
  Matrix test_features;
  std::optional<std::vector<int>> test_truth;
  int num_classes = 0;

  Eigen::Index dim() const { return train_features.cols(); }
  Eigen::Index train_size() const { return train_features.rows(); }
  Eigen::Index test_size() const { return test_features.rows(); }
  int unknown_label() const { return num_classes + 1; }

  // Throws DatasetError when an invariant does not hold.
  void validate() const;

  // Rounds all feature values to single precision in place.
  void quantize();

  bool operator==(const FeatureDataset& other) const;
};

enum class Encoding { kText, kBinary };

// One feature-table file. `labels` are 1..c for train rows and 0 for
// unlabeled test rows.
struct FeatureTable {
  Matrix features;
  std::vector<int> labels;
  std::optional<std::vector<int>> truth;
  int num_classes = 0;
};

FeatureTable read_feature_table(const std::filesystem::path& path);
void write_feature_table(const FeatureTable& table,
                         const std::filesystem::path& path, Encoding encoding);

FeatureDataset load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& test_path);
void save_dataset(const FeatureDataset& ds,
                  const std::filesystem::path& train_path,
                  const std::filesystem::path& test_path,
                  Encoding encoding = Encoding::kText);

struct SynthConfig {
  int c_known = 6;
  int c_unknown = 4;
  int dim = 16;
  int per_class_n = 50;
  double center_scale = 2.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Gaussian clusters, one per class, with means drawn uniformly in
// [-center_scale, center_scale]^d. Each known class contributes per_class_n
// train rows and per_class_n test rows; each unknown class contributes
// per_class_n test rows with truth c_known + 1. Row order is shuffled.
FeatureDataset synth_openset(const SynthConfig& cfg);

}  // namespace itosr
