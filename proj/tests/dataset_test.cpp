#include "itosr/dataset.hpp"
#include "itosr/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_util.hpp"

namespace itosr {
namespace {

using testing::read_file;
using testing::scratch_dir;
using testing::write_file;

FeatureDataset random_dataset(std::uint64_t seed, int n_l, int n_u, int d, int c, bool truth) {
  Rng rng(seed);
  FeatureDataset ds;
  ds.num_classes = c;
  ds.train_features.resize(n_l, d);
  ds.test_features.resize(n_u, d);
  for (Eigen::Index i = 0; i < ds.train_features.size(); ++i) ds.train_features.data()[i] = rng.normal() * 100;
  for (Eigen::Index i = 0; i < ds.test_features.size(); ++i) ds.test_features.data()[i] = rng.normal() * 1e-3;
  for (int i = 0; i < n_l; ++i) ds.train_labels.push_back(i % c + 1);
  if (truth) {
    ds.test_truth.emplace();
    for (int i = 0; i < n_u; ++i) ds.test_truth->push_back(static_cast<int>(rng.index(c + 1)) + 1);
  }
  ds.quantize();
  return ds;
}

TEST(Dataset, LoadsWellFormedFilesWithShapes) {
  const auto dir = scratch_dir();
  const FeatureDataset ds = random_dataset(1, 12, 8, 4, 3, true);
  save_dataset(ds, dir / "train.txt", dir / "test.txt");
  const FeatureDataset back = load_dataset(dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(back.train_size(), 12);
  EXPECT_EQ(back.test_size(), 8);
  EXPECT_EQ(back.dim(), 4);
  EXPECT_EQ(back.num_classes, 3);
}

TEST(Dataset, RoundTripIsBitwiseForBothEncodings) {
  const auto dir = scratch_dir();
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    Rng shape(seed + 100);
    const int c = 2 + static_cast<int>(shape.index(5));
    const int n_l = c + static_cast<int>(shape.index(30));
    const int n_u = static_cast<int>(shape.index(30));
    const int d = 1 + static_cast<int>(shape.index(9));
    const FeatureDataset ds = random_dataset(seed, n_l, n_u, d, c, seed % 2 == 0);
    for (Encoding enc : {Encoding::kText, Encoding::kBinary}) {
      save_dataset(ds, dir / "a", dir / "b", enc);
      EXPECT_EQ(load_dataset(dir / "a", dir / "b"), ds) << "seed " << seed;
    }
  }
}

TEST(Dataset, EmptyTestSetIsValid) {
  const auto dir = scratch_dir();
  const FeatureDataset ds = random_dataset(2, 6, 0, 3, 2, false);
  save_dataset(ds, dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(read_file(dir / "test.txt"), "#itosr-features v1 n=0 d=3 c=2 truth=0\n");
  const FeatureDataset back = load_dataset(dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(back.test_size(), 0);
  EXPECT_EQ(back.test_features.cols(), 3);
}

TEST(Dataset, SaveRejectsZeroClassesBeforeWriting) {
  const auto dir = scratch_dir();
  FeatureDataset ds = random_dataset(3, 4, 2, 2, 2, false);
  ds.num_classes = 0;
  EXPECT_THROW(save_dataset(ds, dir / "train.txt", dir / "test.txt"), DatasetError);
  EXPECT_FALSE(std::filesystem::exists(dir / "train.txt"));
}

TEST(Dataset, TextFormatLayout) {
  const auto dir = scratch_dir();
  FeatureDataset ds;
  ds.num_classes = 2;
  ds.train_features = Matrix{{0.1, -2.5}, {3.0, 1e-7}};
  ds.train_labels = {1, 2};
  ds.test_features = Matrix{{0.5, 0.25}};
  ds.test_truth = std::vector<int>{3};
  ds.quantize();
  save_dataset(ds, dir / "train.txt", dir / "test.txt");
  EXPECT_EQ(read_file(dir / "train.txt"),
            "#itosr-features v1 n=2 d=2 c=2 truth=0\n"
            "0,1,0.100000001,-2.5\n"
            "1,2,3,1.00000001e-07\n");
  EXPECT_EQ(read_file(dir / "test.txt"),
            "#itosr-features v1 n=1 d=2 c=2 truth=1\n"
            "0,0,0.5,0.25,3\n");
}

TEST(Dataset, BinaryFormatLayout) {
  const auto dir = scratch_dir();
  FeatureTable t;
  t.num_classes = 3;
  t.features = Matrix{{1.0, -2.0}};
  t.labels = {0};
  t.truth = std::vector<int>{4};
  write_feature_table(t, dir / "t.bin", Encoding::kBinary);
  const std::string b = read_file(dir / "t.bin");
  const std::string expected =
      std::string("ITOSRFT1") + std::string("\x01\x00\x00\x00", 4) + std::string("\x02\x00\x00\x00", 4) +
      std::string("\x03\x00\x00\x00", 4) + std::string("\x01", 1) +
      std::string("\x00\x00\x80\x3f", 4) + std::string("\x00\x00\x00\xc0", 4) +
      std::string("\x00\x00\x00\x00", 4) + std::string("\x04\x00\x00\x00", 4);
  EXPECT_EQ(b, expected);
}

DatasetError::Kind load_error_kind(const std::filesystem::path& dir, const std::string& train,
                                   const std::string& test) {
  write_file(dir / "train.txt", train);
  write_file(dir / "test.txt", test);
  try {
    load_dataset(dir / "train.txt", dir / "test.txt");
  } catch (const DatasetError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a DatasetError";
  return DatasetError::Kind::kInvalid;
}

TEST(Dataset, DistinctErrorsForDistinctDefects) {
  const auto dir = scratch_dir();
  const std::string good_train = "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,2\n1,2,3,4\n";
  const std::string good_test = "#itosr-features v1 n=1 d=2 c=2 truth=0\n0,0,1,1\n";
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v2 n=2 d=2 c=2 truth=0\n", good_test),
            DatasetError::Kind::kMalformedHeader);
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,2\n1,2,3\n", good_test),
            DatasetError::Kind::kDimensionMismatch);
  EXPECT_EQ(load_error_kind(dir, good_train, "#itosr-features v1 n=1 d=3 c=2 truth=0\n0,0,1,1,1\n"),
            DatasetError::Kind::kDimensionMismatch);
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,nan\n1,2,3,4\n", good_test),
            DatasetError::Kind::kNonFinite);
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,2\n1,3,3,4\n", good_test),
            DatasetError::Kind::kLabelOutOfRange);
  EXPECT_EQ(load_error_kind(dir, good_train, "#itosr-features v1 n=1 d=2 c=2 truth=1\n0,0,1,1,4\n"),
            DatasetError::Kind::kLabelOutOfRange);
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,x\n1,2,3,4\n", good_test),
            DatasetError::Kind::kMalformedRow);
  // A class with no train rows.
  EXPECT_EQ(load_error_kind(dir, "#itosr-features v1 n=2 d=2 c=2 truth=0\n0,1,1,2\n1,1,3,4\n", good_test),
            DatasetError::Kind::kInvalid);
}

TEST(Dataset, TruncatedBinaryIsRejected) {
  const auto dir = scratch_dir();
  FeatureTable t{Matrix{{1.0, 2.0}}, {1}, std::nullopt, 1};
  write_feature_table(t, dir / "t.bin", Encoding::kBinary);
  std::string b = read_file(dir / "t.bin");
  b.pop_back();
  write_file(dir / "t.bin", b);
  EXPECT_THROW(read_feature_table(dir / "t.bin"), DatasetError);
}

TEST(Synth, CountsMatchConfiguration) {
  SynthConfig cfg;
  cfg.c_known = 6;
  cfg.c_unknown = 4;
  cfg.per_class_n = 50;
  cfg.dim = 16;
  cfg.seed = 7;
  const FeatureDataset ds = synth_openset(cfg);
  EXPECT_EQ(ds.train_size(), 300);
  EXPECT_EQ(ds.test_size(), 500);
  EXPECT_EQ(ds.dim(), 16);
  ASSERT_TRUE(ds.test_truth.has_value());
  EXPECT_EQ(std::count(ds.test_truth->begin(), ds.test_truth->end(), 7), 200);
  for (int k = 1; k <= 6; ++k) {
    EXPECT_EQ(std::count(ds.train_labels.begin(), ds.train_labels.end(), k), 50);
    EXPECT_EQ(std::count(ds.test_truth->begin(), ds.test_truth->end(), k), 50);
  }
}

TEST(Synth, SameSeedSameBytes) {
  const auto dir = scratch_dir();
  SynthConfig cfg;
  cfg.seed = 11;
  save_dataset(synth_openset(cfg), dir / "a1", dir / "b1");
  save_dataset(synth_openset(cfg), dir / "a2", dir / "b2");
  EXPECT_EQ(read_file(dir / "a1"), read_file(dir / "a2"));
  EXPECT_EQ(read_file(dir / "b1"), read_file(dir / "b2"));
  cfg.seed = 12;
  EXPECT_FALSE(synth_openset(cfg) == load_dataset(dir / "a1", dir / "b1"));
}

TEST(Synth, TinyNoiseIsSeparableByNearestCentroid) {
  SynthConfig cfg;
  cfg.noise_sigma = 1e-6;
  cfg.seed = 3;
  const FeatureDataset ds = synth_openset(cfg);
  // Oracle: centroids from train rows, nearest-centroid on known test rows.
  Matrix centroids = Matrix::Zero(ds.num_classes, ds.dim());
  std::vector<int> counts(static_cast<std::size_t>(ds.num_classes), 0);
  for (Eigen::Index r = 0; r < ds.train_size(); ++r) {
    const int l = ds.train_labels[static_cast<std::size_t>(r)];
    centroids.row(l - 1) += ds.train_features.row(r);
    ++counts[static_cast<std::size_t>(l - 1)];
  }
  for (int k = 0; k < ds.num_classes; ++k) centroids.row(k) /= counts[static_cast<std::size_t>(k)];
  int total = 0, hits = 0;
  for (Eigen::Index r = 0; r < ds.test_size(); ++r) {
    const int truth = (*ds.test_truth)[static_cast<std::size_t>(r)];
    if (truth > ds.num_classes) continue;
    Eigen::Index best = 0;
    (centroids.rowwise() - ds.test_features.row(r)).rowwise().squaredNorm().minCoeff(&best);
    ++total;
    hits += best + 1 == truth;
  }
  EXPECT_EQ(hits, total);
}

TEST(Synth, RejectsInvalidConfig) {
  SynthConfig cfg;
  cfg.c_known = 1;
  EXPECT_THROW(synth_openset(cfg), std::invalid_argument);
  cfg = {};
  cfg.noise_sigma = 0.0;
  EXPECT_THROW(synth_openset(cfg), std::invalid_argument);
  cfg = {};
  cfg.per_class_n = 1;
  EXPECT_THROW(synth_openset(cfg), std::invalid_argument);
  cfg = {};
  cfg.c_unknown = 0;
  EXPECT_THROW(synth_openset(cfg), std::invalid_argument);
}

}  // namespace
}  // namespace itosr
