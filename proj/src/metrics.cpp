// SPDX-License-Identifier: Apache-2.0
#include "handproof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "handproof/error.hpp"

namespace handproof {

namespace {

struct Counts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

Counts check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  }
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::NonFiniteValue, "non-finite score");
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    (labels[i] == 1 ? c.pos : c.neg) += 1;
  }
  if (c.pos == 0 || c.neg == 0) throw Error(ErrorCode::SingleClass, "scores cover one class only");
  return c;
}

std::vector<std::size_t> sorted_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const Counts n = check_scores(scores, labels);
  const auto order = sorted_order(scores);
  // Twice the rank sum of the positives, so tied ranks stay integral.
  std::int64_t rank_sum2 = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::int64_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      pos_in_group += labels[order[j]];
      ++j;
    }
    // ranks i+1 .. j share the average (i + 1 + j) / 2
    rank_sum2 += pos_in_group * static_cast<std::int64_t>(i + 1 + j);
    i = j;
  }
  const std::int64_t u2 = rank_sum2 - n.pos * (n.pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n.pos) * static_cast<double>(n.neg));
}

double eer(std::span<const double> scores, std::span<const int> labels) {
  const Counts n = check_scores(scores, labels);
  const auto order = sorted_order(scores);
  // Sweep point: positives at or below the threshold, negatives above it.
  std::int64_t pos_below = 0, neg_above = n.neg;
  std::int64_t prev_pos = 0, prev_neg = n.neg;
  auto gap = [&](std::int64_t p, std::int64_t g) { return p * n.neg - g * n.pos; };
  std::size_t i = 0;
  while (i < order.size()) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      if (labels[order[i]] == 1) {
        ++pos_below;
      } else {
        --neg_above;
      }
      ++i;
    }
    if (gap(pos_below, neg_above) >= 0) {
      const std::int64_t num = prev_neg * pos_below - prev_pos * neg_above;
      const std::int64_t den = (pos_below - prev_pos) * n.neg - (neg_above - prev_neg) * n.pos;
      return static_cast<double>(num) / static_cast<double>(den);
    }
    prev_pos = pos_below;
    prev_neg = neg_above;
  }
  return 1.0;  // unreachable: the last sweep point has FAR = 1, FRR = 0
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and labels differ in length");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = predictions[i] == 1;
    if (labels[i] == 1) {
      (pred ? c.tp : c.fn) += 1;
    } else {
      (pred ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

ClassScores balanced_accuracy_fscore(const Confusion& c) {
  if (c.tp + c.fn == 0 || c.tn + c.fp == 0) {
    throw Error(ErrorCode::SingleClass, "labels cover one class only");
  }
  const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  // 2PR / (P + R) == 2 TP / (2 TP + FP + FN); zero when TP is zero.
  const double f1 = c.tp == 0 ? 0.0
                              : 2.0 * static_cast<double>(c.tp) /
                                    static_cast<double>(2 * c.tp + c.fp + c.fn);
  return {(tpr + tnr) / 2.0, f1};
}

ClassScores balanced_accuracy_fscore(std::span<const int> predictions, std::span<const int> labels) {
  return balanced_accuracy_fscore(confusion(predictions, labels));
}

double weighted_fscore(const Confusion& c) {
  const Confusion flipped{c.tn, c.fp, c.tp, c.fn};
  const double pos = static_cast<double>(c.tp + c.fn);
  const double neg = static_cast<double>(c.tn + c.fp);
  return (pos * balanced_accuracy_fscore(c).f_score + neg * balanced_accuracy_fscore(flipped).f_score) /
         (pos + neg);
}

}  // namespace handproof
