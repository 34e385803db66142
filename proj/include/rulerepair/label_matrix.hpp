#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rulerepair/error.hpp"
#include "rulerepair/labels.hpp"

namespace rulerepair {

// Dense row-major n x m matrix of label ids: rows are datapoints, columns rules.
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t rows, std::size_t cols, LabelId fill = kAbstain)
      : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

  static LabelMatrix from_rows(const std::vector<std::vector<LabelId>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    LabelMatrix out(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) fail(ErrorKind::kShapeMismatch, "ragged matrix rows");
      for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = rows[i][j];
    }
    return out;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  LabelId& at(std::size_t i, std::size_t j) { return cells_[i * cols_ + j]; }
  LabelId at(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }

  std::span<const LabelId> row(std::size_t i) const { return {cells_.data() + i * cols_, cols_}; }

  std::vector<LabelId> column(std::size_t j) const {
    std::vector<LabelId> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
    return out;
  }

  LabelMatrix select_rows(std::span<const std::size_t> indices) const {
    LabelMatrix out(indices.size(), cols_);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      for (std::size_t j = 0; j < cols_; ++j) out.at(k, j) = at(indices[k], j);
    }
    return out;
  }

  void check_labels(std::size_t label_count) const {
    for (const LabelId v : cells_) {
      if (v < 0 || static_cast<std::size_t>(v) >= label_count) {
        fail(ErrorKind::kInvalidArgument, "label id " + std::to_string(v) + " out of range");
      }
    }
  }

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<LabelId> cells_;
};

}  // namespace rulerepair
