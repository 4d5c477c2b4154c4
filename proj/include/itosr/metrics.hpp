#pragma once

#include <span>
#include <vector>

namespace itosr {

// Probability that a random known row outscores a random unknown row, ties
// counted 1/2. Computed from mid-ranks (Mann-Whitney U). Throws when either
// class is absent.
double auroc(std::span<const double> scores, std::span<const int> is_known);

// Fraction of rows whose truth is a known class (<= num_classes) that are
// predicted exactly.
double top1_acc(std::span<const int> predicted, std::span<const int> truth, int num_classes);

struct MacroF1 {
  double value = 0.0;
  std::vector<double> per_class;
  // Classes with neither truth nor predicted rows; their F1 is scored 0.
  std::vector<int> undefined_classes;
};

// Unweighted mean of per-class F1 over labels 1..num_labels.
MacroF1 macro_f1(std::span<const int> predicted, std::span<const int> truth, int num_labels);

struct EvalResult {
  double auroc = 0.0;
  double acc = 0.0;
  double macro_f1 = 0.0;
  std::vector<int> undefined_f1_classes;
  // confusion[t-1][p-1] counts rows with truth t predicted as p.
  std::vector<std::vector<long>> confusion;
  std::size_t n_known = 0;
  std::size_t n_unknown = 0;
};

// Open-set evaluation over c known classes; label c + 1 is unknown. Scores
// are known-class confidences (higher means more likely known). AUROC is NaN
// unless both known and unknown rows are present; ACC is NaN without known
// rows.
EvalResult evaluate(std::span<const int> predicted, std::span<const double> confidence,
                    std::span<const int> truth, int num_classes);

}  // namespace itosr
