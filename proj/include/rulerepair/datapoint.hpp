#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rulerepair/labels.hpp"

namespace rulerepair {

// Lowercases and splits on every non-alphanumeric byte; empty pieces dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const char ch : text) {
    const auto byte = static_cast<unsigned char>(ch);
    if (std::isalnum(byte)) {
      current.push_back(static_cast<char>(std::tolower(byte)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

class Datapoint {
 public:
  Datapoint() = default;
  Datapoint(std::string id, std::string text, std::map<std::string, std::string> attrs = {},
            std::optional<LabelId> truth = std::nullopt)
      : id_(std::move(id)), text_(std::move(text)), attrs_(std::move(attrs)), truth_(truth) {
    tokens_ = tokenize(text_);
    vocabulary_ = tokens_;
    std::sort(vocabulary_.begin(), vocabulary_.end());
    vocabulary_.erase(std::unique(vocabulary_.begin(), vocabulary_.end()), vocabulary_.end());
  }

  const std::string& id() const { return id_; }
  const std::string& text() const { return text_; }
  // Tokens in text order, duplicates kept.
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Sorted distinct tokens.
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::map<std::string, std::string>& attrs() const { return attrs_; }
  const std::optional<LabelId>& truth() const { return truth_; }

  bool has_token(std::string_view word) const {
    return std::binary_search(vocabulary_.begin(), vocabulary_.end(), word);
  }

  const std::string* attr(std::string_view name) const {
    const auto it = attrs_.find(std::string(name));
    return it == attrs_.end() ? nullptr : &it->second;
  }

  Datapoint with_truth(std::optional<LabelId> truth) const {
    Datapoint copy = *this;
    copy.truth_ = truth;
    return copy;
  }

  // No token or attribute predicate can tell the two apart.
  bool indistinguishable_from(const Datapoint& other) const {
    return vocabulary_ == other.vocabulary_ && attrs_ == other.attrs_;
  }

 private:
  std::string id_;
  std::string text_;
  std::vector<std::string> tokens_;
  std::vector<std::string> vocabulary_;
  std::map<std::string, std::string> attrs_;
  std::optional<LabelId> truth_;
};

}  // namespace rulerepair
