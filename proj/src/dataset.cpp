#include "itosr/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "itosr/random.hpp"

namespace itosr {

namespace {

constexpr std::string_view kTextMagic = "#itosr-features";
constexpr std::array<char, 8> kBinaryMagic = {'I', 'T', 'O', 'S', 'R', 'F', 'T', '1'};

[[noreturn]] void fail(DatasetError::Kind kind, const std::string& msg) {
  throw DatasetError(kind, msg);
}

void check_features(const Matrix& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!std::isfinite(m(r, c))) {
        fail(DatasetError::Kind::kNonFinite,
             what + ": non-finite value at row " + std::to_string(r) +
                 ", column " + std::to_string(c));
      }
    }
  }
}

// ---- binary helpers (explicit little-endian, independent of host order) ----

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  const unsigned char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      fail(DatasetError::Kind::kMalformedRow, path_ + ": truncated binary feature table");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data()) + pos_;
    pos_ += n;
    return p;
  }

  std::uint32_t u32() { return get_u32(take(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

FeatureTable parse_binary(const std::string& bytes, const std::string& path) {
  ByteReader in(bytes, path);
  in.take(kBinaryMagic.size());
  FeatureTable t;
  const std::uint32_t n = in.u32();
  const std::uint32_t d = in.u32();
  const std::uint32_t c = in.u32();
  const unsigned char flag = *in.take(1);
  if (flag > 1) fail(DatasetError::Kind::kMalformedHeader, path + ": bad truth flag");
  if (c > static_cast<std::uint32_t>(INT32_MAX) - 1) {
    fail(DatasetError::Kind::kMalformedHeader, path + ": class count too large");
  }
  const std::size_t payload = static_cast<std::size_t>(n) * d * 4 +
                              static_cast<std::size_t>(n) * 4 * (1 + flag);
  if (bytes.size() != kBinaryMagic.size() + 13 + payload) {
    fail(DatasetError::Kind::kDimensionMismatch,
         path + ": payload size does not match header n/d");
  }
  t.num_classes = static_cast<int>(c);
  t.features.resize(n, d);
  for (std::uint32_t r = 0; r < n; ++r) {
    for (std::uint32_t k = 0; k < d; ++k) t.features(r, k) = in.f32();
  }
  t.labels.resize(n);
  for (auto& l : t.labels) l = in.i32();
  if (flag) {
    t.truth.emplace(n);
    for (auto& l : *t.truth) l = in.i32();
  }
  return t;
}

// ---- text helpers ----

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars rejects a leading '+', so does the writer.
    auto [p, ec] = std::from_chars(first, last, out, std::chars_format::general);
    if (ec == std::errc::result_out_of_range) {
      out = std::numeric_limits<T>::infinity();
      return p == last;
    }
    return ec == std::errc() && p == last;
  } else {
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
  }
}

bool parse_header_field(std::string_view token, std::string_view key, long long& out) {
  if (token.size() <= key.size() + 1 || token.substr(0, key.size()) != key ||
      token[key.size()] != '=') {
    return false;
  }
  return parse_number(token.substr(key.size() + 1), out);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

FeatureTable parse_text(const std::string& bytes, const std::string& path) {
  std::istringstream in(bytes);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split(line, ' ');
  long long n = -1, d = -1, c = -1, truth = -1;
  if (header.size() != 6 || header[0] != kTextMagic || header[1] != "v1" ||
      !parse_header_field(header[2], "n", n) || !parse_header_field(header[3], "d", d) ||
      !parse_header_field(header[4], "c", c) ||
      !parse_header_field(header[5], "truth", truth) || n < 0 || d < 0 || c < 0 ||
      c > INT32_MAX - 1 || (truth != 0 && truth != 1)) {
    fail(DatasetError::Kind::kMalformedHeader, path + ": malformed header '" + line + "'");
  }

  FeatureTable t;
  t.num_classes = static_cast<int>(c);
  t.features.resize(n, d);
  t.labels.resize(static_cast<std::size_t>(n));
  if (truth) t.truth.emplace(static_cast<std::size_t>(n));

  const std::size_t expected_fields = static_cast<std::size_t>(d) + 2 + (truth ? 1 : 0);
  for (long long r = 0; r < n; ++r) {
    if (!std::getline(in, line)) {
      fail(DatasetError::Kind::kDimensionMismatch,
           path + ": expected " + std::to_string(n) + " rows, found " + std::to_string(r));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = split(line, ',');
    const std::string where = path + ": row " + std::to_string(r);
    if (fields.size() != expected_fields) {
      fail(DatasetError::Kind::kDimensionMismatch,
           where + " has " + std::to_string(fields.size()) + " fields, expected " +
               std::to_string(expected_fields));
    }
    long long id = 0;
    if (!parse_number(fields[0], id)) fail(DatasetError::Kind::kMalformedRow, where + ": bad id");
    if (!parse_number(fields[1], t.labels[r])) {
      fail(DatasetError::Kind::kMalformedRow, where + ": bad label");
    }
    for (long long k = 0; k < d; ++k) {
      float v = 0.0f;
      const auto field = fields[static_cast<std::size_t>(k) + 2];
      if (field == "nan" || field == "-nan" || field == "inf" || field == "-inf") {
        v = std::numeric_limits<float>::quiet_NaN();
      } else if (!parse_number(field, v)) {
        fail(DatasetError::Kind::kMalformedRow, where + ": bad feature value");
      }
      t.features(r, k) = v;
    }
    if (truth && !parse_number(fields.back(), (*t.truth)[r])) {
      fail(DatasetError::Kind::kMalformedRow, where + ": bad truth label");
    }
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") {
      fail(DatasetError::Kind::kDimensionMismatch, path + ": more rows than header n");
    }
  }
  return t;
}

std::string format_float(float v) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                               std::chars_format::general, 9);
  return std::string(buf.data(), p);
}

void check_table(const FeatureTable& t, bool train, const std::string& path) {
  check_features(t.features, path);
  for (std::size_t i = 0; i < t.labels.size(); ++i) {
    const int l = t.labels[i];
    const bool ok = train ? (l >= 1 && l <= t.num_classes) : l == 0;
    if (!ok) {
      fail(DatasetError::Kind::kLabelOutOfRange,
           path + ": label " + std::to_string(l) + " out of range at row " + std::to_string(i));
    }
  }
  if (t.truth) {
    for (std::size_t i = 0; i < t.truth->size(); ++i) {
      const int l = (*t.truth)[i];
      if (l < 1 || l > t.num_classes + 1) {
        fail(DatasetError::Kind::kLabelOutOfRange,
             path + ": truth " + std::to_string(l) + " out of range at row " + std::to_string(i));
      }
    }
  }
}

}  // namespace

const char* to_string(DatasetError::Kind kind) {
  switch (kind) {
    case DatasetError::Kind::kIo: return "io";
    case DatasetError::Kind::kMalformedHeader: return "malformed-header";
    case DatasetError::Kind::kMalformedRow: return "malformed-row";
    case DatasetError::Kind::kDimensionMismatch: return "dimension-mismatch";
    case DatasetError::Kind::kNonFinite: return "non-finite";
    case DatasetError::Kind::kLabelOutOfRange: return "label-out-of-range";
    case DatasetError::Kind::kInvalid: return "invalid";
  }
  return "unknown";
}

void FeatureDataset::validate() const {
  if (num_classes < 1) fail(DatasetError::Kind::kInvalid, "dataset has no known classes");
  if (train_features.rows() != static_cast<Eigen::Index>(train_labels.size())) {
    fail(DatasetError::Kind::kDimensionMismatch, "train label count differs from row count");
  }
  if (test_features.cols() != train_features.cols()) {
    fail(DatasetError::Kind::kDimensionMismatch, "train and test feature widths differ");
  }
  if (test_truth && test_truth->size() != static_cast<std::size_t>(test_features.rows())) {
    fail(DatasetError::Kind::kDimensionMismatch, "test truth count differs from row count");
  }
  check_features(train_features, "train");
  check_features(test_features, "test");
  std::vector<int> counts(static_cast<std::size_t>(num_classes) + 1, 0);
  for (int l : train_labels) {
    if (l < 1 || l > num_classes) {
      fail(DatasetError::Kind::kLabelOutOfRange, "train label " + std::to_string(l) + " out of range");
    }
    ++counts[static_cast<std::size_t>(l)];
  }
  for (int k = 1; k <= num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) {
      fail(DatasetError::Kind::kInvalid, "class " + std::to_string(k) + " has no train rows");
    }
  }
  if (test_truth) {
    for (int l : *test_truth) {
      if (l < 1 || l > num_classes + 1) {
        fail(DatasetError::Kind::kLabelOutOfRange, "test truth " + std::to_string(l) + " out of range");
      }
    }
  }
}

void FeatureDataset::quantize() {
  auto round = [](double v) { return static_cast<double>(static_cast<float>(v)); };
  train_features = train_features.unaryExpr(round);
  test_features = test_features.unaryExpr(round);
}

bool FeatureDataset::operator==(const FeatureDataset& other) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
  };
  return num_classes == other.num_classes && train_labels == other.train_labels &&
         test_truth == other.test_truth && same(train_features, other.train_features) &&
         same(test_features, other.test_features);
}

FeatureTable read_feature_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(DatasetError::Kind::kIo, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= kBinaryMagic.size() &&
      std::equal(kBinaryMagic.begin(), kBinaryMagic.end(), bytes.begin())) {
    return parse_binary(bytes, path.string());
  }
  if (bytes.starts_with(kTextMagic)) return parse_text(bytes, path.string());
  fail(DatasetError::Kind::kMalformedHeader, path.string() + ": not a feature table");
}

void write_feature_table(const FeatureTable& t, const std::filesystem::path& path,
                         Encoding encoding) {
  const auto n = static_cast<std::size_t>(t.features.rows());
  std::string out;
  if (encoding == Encoding::kBinary) {
    out.append(kBinaryMagic.begin(), kBinaryMagic.end());
    put_u32(out, static_cast<std::uint32_t>(n));
    put_u32(out, static_cast<std::uint32_t>(t.features.cols()));
    put_u32(out, static_cast<std::uint32_t>(t.num_classes));
    out.push_back(t.truth ? 1 : 0);
    for (Eigen::Index r = 0; r < t.features.rows(); ++r) {
      for (Eigen::Index k = 0; k < t.features.cols(); ++k) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t.features(r, k))));
      }
    }
    for (int l : t.labels) put_u32(out, static_cast<std::uint32_t>(l));
    if (t.truth) {
      for (int l : *t.truth) put_u32(out, static_cast<std::uint32_t>(l));
    }
  } else {
    out = std::string(kTextMagic) + " v1 n=" + std::to_string(n) +
          " d=" + std::to_string(t.features.cols()) + " c=" + std::to_string(t.num_classes) +
          " truth=" + (t.truth ? "1" : "0") + "\n";
    for (std::size_t r = 0; r < n; ++r) {
      out += std::to_string(r);
      out += ',';
      out += std::to_string(t.labels[r]);
      for (Eigen::Index k = 0; k < t.features.cols(); ++k) {
        out += ',';
        out += format_float(static_cast<float>(t.features(static_cast<Eigen::Index>(r), k)));
      }
      if (t.truth) {
        out += ',';
        out += std::to_string((*t.truth)[r]);
      }
      out += '\n';
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(DatasetError::Kind::kIo, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(DatasetError::Kind::kIo, "write failed for " + path.string());
}

FeatureDataset load_dataset(const std::filesystem::path& train_path,
                            const std::filesystem::path& test_path) {
  FeatureTable train = read_feature_table(train_path);
  FeatureTable test = read_feature_table(test_path);
  check_table(train, true, train_path.string());
  check_table(test, false, test_path.string());
  if (train.features.cols() != test.features.cols()) {
    fail(DatasetError::Kind::kDimensionMismatch,
         "feature width differs: train d=" + std::to_string(train.features.cols()) +
             ", test d=" + std::to_string(test.features.cols()));
  }
  if (train.num_classes != test.num_classes) {
    fail(DatasetError::Kind::kDimensionMismatch, "class count differs between train and test");
  }
  FeatureDataset ds;
  ds.num_classes = train.num_classes;
  ds.train_features = std::move(train.features);
  ds.train_labels = std::move(train.labels);
  ds.test_features = std::move(test.features);
  ds.test_truth = std::move(test.truth);
  ds.validate();
  return ds;
}

void save_dataset(const FeatureDataset& ds, const std::filesystem::path& train_path,
                  const std::filesystem::path& test_path, Encoding encoding) {
  ds.validate();
  FeatureTable train{ds.train_features, ds.train_labels, std::nullopt, ds.num_classes};
  FeatureTable test{ds.test_features,
                    std::vector<int>(static_cast<std::size_t>(ds.test_size()), 0),
                    ds.test_truth, ds.num_classes};
  write_feature_table(train, train_path, encoding);
  write_feature_table(test, test_path, encoding);
}

void SynthConfig::validate() const {
  if (c_known < 2) throw std::invalid_argument("synth: c_known must be >= 2");
  if (c_unknown < 1) throw std::invalid_argument("synth: c_unknown must be >= 1");
  if (per_class_n < 2) throw std::invalid_argument("synth: per_class_n must be >= 2");
  if (dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("synth: noise_sigma must be > 0");
  if (!(center_scale >= 0.0)) throw std::invalid_argument("synth: center_scale must be >= 0");
}

FeatureDataset synth_openset(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int total_classes = cfg.c_known + cfg.c_unknown;
  Matrix centers(total_classes, cfg.dim);
  for (int k = 0; k < total_classes; ++k) {
    for (int j = 0; j < cfg.dim; ++j) centers(k, j) = rng.uniform(-cfg.center_scale, cfg.center_scale);
  }
  auto draw = [&](int cls, Matrix& out, Eigen::Index row) {
    for (int j = 0; j < cfg.dim; ++j) out(row, j) = centers(cls, j) + cfg.noise_sigma * rng.normal();
  };

  const int n = cfg.per_class_n;
  FeatureDataset ds;
  ds.num_classes = cfg.c_known;

  std::vector<int> train_order(static_cast<std::size_t>(cfg.c_known) * n);
  for (std::size_t i = 0; i < train_order.size(); ++i) train_order[i] = static_cast<int>(i);
  rng.shuffle(train_order.begin(), train_order.end());
  ds.train_features.resize(static_cast<Eigen::Index>(train_order.size()), cfg.dim);
  ds.train_labels.resize(train_order.size());
  for (std::size_t slot = 0; slot < train_order.size(); ++slot) {
    const int cls = train_order[slot] / n;
    draw(cls, ds.train_features, static_cast<Eigen::Index>(slot));
    ds.train_labels[slot] = cls + 1;
  }

  std::vector<int> test_order(static_cast<std::size_t>(total_classes) * n);
  for (std::size_t i = 0; i < test_order.size(); ++i) test_order[i] = static_cast<int>(i);
  rng.shuffle(test_order.begin(), test_order.end());
  ds.test_features.resize(static_cast<Eigen::Index>(test_order.size()), cfg.dim);
  ds.test_truth.emplace(test_order.size());
  for (std::size_t slot = 0; slot < test_order.size(); ++slot) {
    const int cls = test_order[slot] / n;
    draw(cls, ds.test_features, static_cast<Eigen::Index>(slot));
    (*ds.test_truth)[slot] = cls < cfg.c_known ? cls + 1 : cfg.c_known + 1;
  }
  ds.quantize();
  ds.validate();
  return ds;
}

}  // namespace itosr
