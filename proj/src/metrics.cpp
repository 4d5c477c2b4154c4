#include "itosr/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace itosr {

double auroc(std::span<const double> scores, std::span<const int> is_known) {
  if (scores.size() != is_known.size()) throw std::invalid_argument("auroc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the mid-rank keeps everything in integers.
  std::uint64_t rank_sum_x2 = 0;
  std::uint64_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t mid_x2 = i + 1 + j;  // (i+1) + j = 2 * mean rank of [i+1, j]
    for (std::size_t k = i; k < j; ++k) {
      if (is_known[order[k]]) {
        rank_sum_x2 += mid_x2;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::uint64_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("auroc: needs both known and unknown rows");
  // U = R - n_pos(n_pos+1)/2, AUROC = U / (n_pos n_neg).
  const std::uint64_t u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double top1_acc(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("top1_acc: size mismatch");
  std::size_t total = 0, hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 1 || truth[i] > num_classes) continue;
    ++total;
    hits += predicted[i] == truth[i];
  }
  if (total == 0) throw std::invalid_argument("top1_acc: no known-class rows");
  return static_cast<double>(hits) / static_cast<double>(total);
}

MacroF1 macro_f1(std::span<const int> predicted, std::span<const int> truth, int num_labels) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("macro_f1: size mismatch");
  if (truth.empty()) throw std::invalid_argument("macro_f1: empty input");
  if (num_labels < 1) throw std::invalid_argument("macro_f1: no labels");
  const auto k = static_cast<std::size_t>(num_labels);
  std::vector<long> tp(k, 0), fp(k, 0), fn(k, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 1 || t > num_labels || p < 1 || p > num_labels) {
      throw std::out_of_range("macro_f1: label outside [1, " + std::to_string(num_labels) + "]");
    }
    if (t == p) {
      ++tp[static_cast<std::size_t>(t - 1)];
    } else {
      ++fn[static_cast<std::size_t>(t - 1)];
      ++fp[static_cast<std::size_t>(p - 1)];
    }
  }
  MacroF1 out;
  out.per_class.resize(k, 0.0);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    if (tp[j] + fp[j] + fn[j] == 0) {
      out.undefined_classes.push_back(static_cast<int>(j) + 1);
      continue;
    }
    // 2PR/(P+R) == 2TP / (2TP + FP + FN); zero when TP == 0.
    out.per_class[j] = 2.0 * static_cast<double>(tp[j]) /
                       static_cast<double>(2 * tp[j] + fp[j] + fn[j]);
    sum += out.per_class[j];
  }
  out.value = sum / static_cast<double>(k);
  return out;
}

EvalResult evaluate(std::span<const int> predicted, std::span<const double> confidence,
                    std::span<const int> truth, int num_classes) {
  if (predicted.size() != truth.size() || confidence.size() != truth.size()) {
    throw std::invalid_argument("evaluate: size mismatch");
  }
  EvalResult r;
  const int labels = num_classes + 1;
  r.confusion.assign(static_cast<std::size_t>(labels), std::vector<long>(static_cast<std::size_t>(labels), 0));
  std::vector<int> is_known(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    is_known[i] = truth[i] <= num_classes ? 1 : 0;
    (is_known[i] ? r.n_known : r.n_unknown)++;
  }
  const MacroF1 f1 = macro_f1(predicted, truth, labels);
  r.macro_f1 = f1.value;
  r.undefined_f1_classes = f1.undefined_classes;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[static_cast<std::size_t>(truth[i] - 1)][static_cast<std::size_t>(predicted[i] - 1)];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.acc = r.n_known > 0 ? top1_acc(predicted, truth, num_classes) : nan;
  r.auroc = r.n_known > 0 && r.n_unknown > 0 ? auroc(confidence, is_known) : nan;
  return r;
}

}  // namespace itosr
