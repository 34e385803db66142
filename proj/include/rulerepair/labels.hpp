#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rulerepair/error.hpp"

namespace rulerepair {

// Index into a LabelSet. Id 0 is always the abstain label.
using LabelId = int;
inline constexpr LabelId kAbstain = 0;

// Label vocabulary with the abstain label first.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) fail(ErrorKind::kInvalidArgument, "label set must contain the abstain label");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      for (std::size_t j = i + 1; j < names_.size(); ++j) {
        if (names_[i] == names_[j]) fail(ErrorKind::kInvalidArgument, "duplicate label '" + names_[i] + "'");
      }
    }
  }

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  bool contains(LabelId id) const { return id >= 0 && static_cast<std::size_t>(id) < names_.size(); }

  const std::string& name(LabelId id) const {
    if (!contains(id)) fail(ErrorKind::kInvalidArgument, "label id " + std::to_string(id) + " out of range");
    return names_[static_cast<std::size_t>(id)];
  }

  std::optional<LabelId> find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return static_cast<LabelId>(i);
    }
    return std::nullopt;
  }

  LabelId id(std::string_view name) const {
    if (auto found = find(name)) return *found;
    fail(ErrorKind::kInvalidArgument, "unknown label '" + std::string(name) + "'");
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<std::string> names_;
};

}  // namespace rulerepair
