#pragma once

#include <compare>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/labels.hpp"

namespace rulerepair {

// Order matters: it is the canonical predicate order used for tie-breaking.
enum class PredicateKind { kContainsWord = 0, kAttrEquals = 1, kOpaqueEquals = 2 };

inline std::string_view to_string(PredicateKind kind) {
  switch (kind) {
    case PredicateKind::kContainsWord: return "contains-word";
    case PredicateKind::kAttrEquals: return "attr-equals";
    case PredicateKind::kOpaqueEquals: return "opaque-equals";
  }
  return "?";
}

// Atomic boolean test on a datapoint.
//   contains-word: key = word
//   attr-equals:   key = attribute name, value = expected value
//   opaque-equals: key = registered labeler name, label = compared label
struct Predicate {
  PredicateKind kind = PredicateKind::kContainsWord;
  std::string key;
  std::string value;
  LabelId label = kAbstain;

  friend auto operator<=>(const Predicate&, const Predicate&) = default;
  friend bool operator==(const Predicate&, const Predicate&) = default;
};

inline Predicate contains_word(std::string word) {
  return {PredicateKind::kContainsWord, std::move(word), {}, kAbstain};
}

inline Predicate attr_equals(std::string attr, std::string value) {
  return {PredicateKind::kAttrEquals, std::move(attr), std::move(value), kAbstain};
}

inline Predicate opaque_equals(std::string labeler, LabelId label) {
  return {PredicateKind::kOpaqueEquals, std::move(labeler), {}, label};
}

inline std::string describe(const Predicate& p) {
  switch (p.kind) {
    case PredicateKind::kContainsWord: return "'" + p.key + "' in v";
    case PredicateKind::kAttrEquals: return "v." + p.key + " = '" + p.value + "'";
    case PredicateKind::kOpaqueEquals: return p.key + "(v) = " + std::to_string(p.label);
  }
  return "?";
}

using Labeler = std::function<LabelId(const Datapoint&)>;

// Named opaque labelers that opaque-equals predicates resolve against. Each
// entry remembers the size of the label vocabulary it must stay within.
class OpaqueRegistry {
 public:
  void add(const std::string& name, Labeler labeler, std::size_t label_count) {
    if (!labeler) fail(ErrorKind::kInvalidArgument, "empty labeler '" + name + "'");
    entries_[name] = Entry{std::move(labeler), label_count};
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }

  LabelId call(const std::string& name, const Datapoint& x) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) fail(ErrorKind::kUnresolvedPredicate, "no opaque labeler named '" + name + "'");
    const LabelId out = it->second.labeler(x);
    if (out < 0 || static_cast<std::size_t>(out) >= it->second.label_count) {
      fail(ErrorKind::kContractViolation, "labeler '" + name + "' returned label " + std::to_string(out) +
                                              " on datapoint '" + x.id() + "'");
    }
    return out;
  }

  static const OpaqueRegistry& empty() {
    static const OpaqueRegistry registry;
    return registry;
  }

 private:
  struct Entry {
    Labeler labeler;
    std::size_t label_count = 0;
  };
  std::map<std::string, Entry> entries_;
};

inline bool evaluate(const Predicate& p, const Datapoint& x,
                     const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  switch (p.kind) {
    case PredicateKind::kContainsWord:
      return x.has_token(p.key);
    case PredicateKind::kAttrEquals: {
      const std::string* value = x.attr(p.key);
      return value != nullptr && *value == p.value;
    }
    case PredicateKind::kOpaqueEquals:
      return registry.call(p.key, x) == p.label;
  }
  return false;
}

}  // namespace rulerepair
