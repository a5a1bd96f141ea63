// SPDX-License-Identifier: Apache-2.0
//
// Detection metrics. Label 1 (synthetic) is the positive class; scores are
// the model's synthetic probability.
#pragma once

#include <span>
#include <vector>

namespace handproof {

/// Mann-Whitney AUC from average ranks; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Equal error rate. FAR(t) is the share of positives scoring <= t, FRR(t)
/// the share of negatives scoring > t; t sweeps the unique scores (plus a
/// threshold below all of them) and the crossing is interpolated linearly
/// between adjacent sweep points.
double eer(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  long tp = 0, fn = 0, tn = 0, fp = 0;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);

struct ClassScores {
  double balanced_accuracy = 0.0;
  double f_score = 0.0;
};

/// Balanced accuracy and the F1 score of the positive class.
ClassScores balanced_accuracy_fscore(const Confusion& c);
ClassScores balanced_accuracy_fscore(std::span<const int> predictions, std::span<const int> labels);

/// F1 of each class averaged with class-support weights.
double weighted_fscore(const Confusion& c);

}  // namespace handproof
