#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/predicate.hpp"

namespace rulerepair {

// Outcome vector of a predicate over a fixed-order working set. Predicates with
// equal signatures are interchangeable in any repair over that set.
using Signature = std::vector<bool>;

inline Signature signature(const Predicate& p, std::span<const Datapoint> xs,
                           const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  if (xs.empty()) fail(ErrorKind::kInvalidArgument, "signature over an empty set");
  Signature bits(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) bits[i] = evaluate(p, xs[i], registry);
  return bits;
}

inline bool is_constant(const Signature& bits) {
  return std::all_of(bits.begin(), bits.end(), [&](bool b) { return b == bits.front(); });
}

// One contains-word / attr-equals predicate per distinct non-constant signature
// over `xs`. Words are tried in lexicographic order before attributes, so the
// representative of a class is its smallest word. Result is in canonical
// predicate order.
inline std::vector<Predicate> candidate_predicates(std::span<const Datapoint> xs) {
  if (xs.empty()) return {};
  std::set<std::string> words;
  std::set<std::pair<std::string, std::string>> attrs;
  for (const auto& x : xs) {
    words.insert(x.vocabulary().begin(), x.vocabulary().end());
    for (const auto& kv : x.attrs()) attrs.insert(kv);
  }

  std::set<Signature> seen;
  std::vector<Predicate> out;
  auto consider = [&](Predicate p) {
    Signature bits = signature(p, xs);
    if (is_constant(bits)) return;
    if (seen.insert(std::move(bits)).second) out.push_back(std::move(p));
  };
  for (const auto& w : words) consider(contains_word(w));
  for (const auto& [name, value] : attrs) consider(attr_equals(name, value));
  std::sort(out.begin(), out.end());
  return out;
}

// A predicate true on exactly one of the two datapoints: the first token of
// `a` (text order) missing from `b`, else the first token of `b` missing from
// `a`, else the first attribute (name order) on which they differ.
inline Predicate separator_predicate(const Datapoint& a, const Datapoint& b) {
  for (const auto& tok : a.tokens()) {
    if (!b.has_token(tok)) return contains_word(tok);
  }
  for (const auto& tok : b.tokens()) {
    if (!a.has_token(tok)) return contains_word(tok);
  }
  std::set<std::string> names;
  for (const auto& kv : a.attrs()) names.insert(kv.first);
  for (const auto& kv : b.attrs()) names.insert(kv.first);
  for (const auto& name : names) {
    const std::string* va = a.attr(name);
    const std::string* vb = b.attr(name);
    if (va != nullptr && (vb == nullptr || *va != *vb)) return attr_equals(name, *va);
    if (vb != nullptr && va == nullptr) return attr_equals(name, *vb);
  }
  fail(ErrorKind::kNoSeparator, "datapoints '" + a.id() + "' and '" + b.id() + "' are indistinguishable");
}

}  // namespace rulerepair
