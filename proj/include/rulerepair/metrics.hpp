#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rulerepair/error.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/ratio.hpp"

namespace rulerepair {

enum class Denominator {
  kAll,         // every rule (for a datapoint) or every datapoint (for a rule)
  kNonAbstain,  // only the non-abstain entries; 1 when there are none
};

inline Ratio evidence(std::span<const LabelId> row) {
  if (row.empty()) fail(ErrorKind::kInvalidArgument, "evidence of an empty row");
  std::int64_t voted = 0;
  for (const LabelId v : row) voted += v != kAbstain ? 1 : 0;
  return Ratio(voted, static_cast<std::int64_t>(row.size()));
}

namespace detail {

inline Ratio correct_fraction(std::int64_t correct, std::int64_t voted, std::int64_t total, Denominator d) {
  if (d == Denominator::kNonAbstain) return voted == 0 ? Ratio(1) : Ratio(correct, voted);
  return Ratio(correct, total);
}

}  // namespace detail

inline Ratio datapoint_accuracy(std::span<const LabelId> row, LabelId truth, Denominator d = Denominator::kAll) {
  if (row.empty()) fail(ErrorKind::kInvalidArgument, "accuracy of an empty row");
  std::int64_t voted = 0, correct = 0;
  for (const LabelId v : row) {
    if (v == kAbstain) continue;
    ++voted;
    correct += v == truth ? 1 : 0;
  }
  return detail::correct_fraction(correct, voted, static_cast<std::int64_t>(row.size()), d);
}

inline Ratio rule_accuracy(std::span<const LabelId> column, std::span<const LabelId> truth,
                           Denominator d = Denominator::kAll) {
  if (column.empty()) fail(ErrorKind::kInvalidArgument, "accuracy of an empty column");
  if (column.size() != truth.size()) fail(ErrorKind::kShapeMismatch, "column and truth lengths differ");
  std::int64_t voted = 0, correct = 0;
  for (std::size_t i = 0; i < column.size(); ++i) {
    if (column[i] == kAbstain) continue;
    ++voted;
    correct += column[i] == truth[i] ? 1 : 0;
  }
  return detail::correct_fraction(correct, voted, static_cast<std::int64_t>(column.size()), d);
}

// Number of cells on which the two output matrices disagree.
inline std::size_t repair_cost(const LabelMatrix& before, const LabelMatrix& after) {
  if (before.rows() != after.rows() || before.cols() != after.cols()) {
    fail(ErrorKind::kShapeMismatch, "repair_cost of differently shaped matrices");
  }
  std::size_t changed = 0;
  for (std::size_t i = 0; i < before.rows(); ++i) {
    for (std::size_t j = 0; j < before.cols(); ++j) changed += before.at(i, j) != after.at(i, j) ? 1 : 0;
  }
  return changed;
}

// Exact-match accuracy; abstain predictions count as wrong. Empty input is 0.
inline Ratio global_accuracy(std::span<const LabelId> predictions, std::span<const LabelId> truth) {
  if (predictions.size() != truth.size()) fail(ErrorKind::kShapeMismatch, "prediction and truth lengths differ");
  if (predictions.empty()) return Ratio(0);
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predictions[i] == truth[i] ? 1 : 0;
  return Ratio(hits, static_cast<std::int64_t>(truth.size()));
}

struct PredictionDeltas {
  Ratio fix_pct;       // previously wrong, now right / previously wrong
  Ratio preserve_pct;  // previously right, still right / previously right
  Ratio global_before;
  Ratio global_after;
  std::size_t fixed = 0;
  std::size_t broken = 0;
};

inline PredictionDeltas prediction_deltas(std::span<const LabelId> before, std::span<const LabelId> after,
                                          std::span<const LabelId> truth) {
  if (before.size() != truth.size() || after.size() != truth.size()) {
    fail(ErrorKind::kShapeMismatch, "prediction vectors differ in length");
  }
  std::int64_t wrong = 0, right = 0, fixed = 0, kept = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool was = before[i] == truth[i];
    const bool is = after[i] == truth[i];
    if (was) {
      ++right;
      kept += is ? 1 : 0;
    } else {
      ++wrong;
      fixed += is ? 1 : 0;
    }
  }
  PredictionDeltas d;
  d.fix_pct = wrong == 0 ? Ratio(1) : Ratio(fixed, wrong);
  d.preserve_pct = right == 0 ? Ratio(1) : Ratio(kept, right);
  d.global_before = global_accuracy(before, truth);
  d.global_after = global_accuracy(after, truth);
  d.fixed = static_cast<std::size_t>(fixed);
  d.broken = static_cast<std::size_t>(right - kept);
  return d;
}

}  // namespace rulerepair
