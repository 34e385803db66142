#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rulerepair/error.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/predicate.hpp"
#include "rulerepair/rule_tree.hpp"

namespace rulerepair {

// Boolean condition over atomic predicates, combined with and/or.
struct Condition {
  enum class Kind { kAtom, kAll, kAny };

  Kind kind = Kind::kAtom;
  Predicate atom;
  std::vector<Condition> operands;

  static Condition of(Predicate p) { return {Kind::kAtom, std::move(p), {}}; }
  static Condition all_of(std::vector<Condition> ops) { return {Kind::kAll, {}, std::move(ops)}; }
  static Condition any_of(std::vector<Condition> ops) { return {Kind::kAny, {}, std::move(ops)}; }

  friend bool operator==(const Condition&, const Condition&) = default;
};

// Structured labeling function:
//   If(condition, then, else) | Return(label) | Opaque(labeler name)
struct LfExpr {
  enum class Kind { kIf, kReturn, kOpaque };

  Kind kind = Kind::kReturn;
  Condition condition;
  std::vector<LfExpr> branches;  // kIf: {then, else}
  LabelId label = kAbstain;
  std::string labeler;

  static LfExpr if_then_else(Condition c, LfExpr then_branch, LfExpr else_branch) {
    LfExpr e;
    e.kind = Kind::kIf;
    e.condition = std::move(c);
    e.branches.push_back(std::move(then_branch));
    e.branches.push_back(std::move(else_branch));
    return e;
  }

  static LfExpr returns(LabelId y) {
    LfExpr e;
    e.kind = Kind::kReturn;
    e.label = y;
    return e;
  }

  static LfExpr opaque(std::string name) {
    LfExpr e;
    e.kind = Kind::kOpaque;
    e.labeler = std::move(name);
    return e;
  }

  friend bool operator==(const LfExpr&, const LfExpr&) = default;
};

inline bool evaluate(const Condition& c, const Datapoint& x,
                     const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  switch (c.kind) {
    case Condition::Kind::kAtom:
      return evaluate(c.atom, x, registry);
    case Condition::Kind::kAll:
      for (const auto& op : c.operands) {
        if (!evaluate(op, x, registry)) return false;
      }
      return true;
    case Condition::Kind::kAny:
      for (const auto& op : c.operands) {
        if (evaluate(op, x, registry)) return true;
      }
      return false;
  }
  return false;
}

// Direct interpretation of the expression, without building a tree.
inline LabelId evaluate(const LfExpr& e, const Datapoint& x,
                        const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  switch (e.kind) {
    case LfExpr::Kind::kIf:
      return evaluate(evaluate(e.condition, x, registry) ? e.branches.at(0) : e.branches.at(1), x, registry);
    case LfExpr::Kind::kReturn:
      return e.label;
    case LfExpr::Kind::kOpaque:
      return registry.call(e.labeler, x);
  }
  return kAbstain;
}

// Chain of `labeler(v) = y` tests, one per non-abstain label in id order,
// falling through to abstain.
inline RuleTree wrap_blackbox(const std::string& labeler, const LabelSet& labels) {
  if (labels.size() == 0) fail(ErrorKind::kInvalidArgument, "empty label set");
  RuleTree chain = RuleTree::leaf(kAbstain);
  for (auto y = static_cast<LabelId>(labels.size()) - 1; y > kAbstain; --y) {
    chain = RuleTree::inner(opaque_equals(labeler, y), chain, RuleTree::leaf(y));
  }
  return chain;
}

namespace detail {

inline RuleTree condition_to_rule(const Condition& c, std::size_t first, const RuleTree& on_false,
                                  const RuleTree& on_true) {
  switch (c.kind) {
    case Condition::Kind::kAtom:
      return RuleTree::inner(c.atom, on_false, on_true);
    case Condition::Kind::kAny:
    case Condition::Kind::kAll: {
      const std::size_t n = c.operands.size();
      if (n == 0) fail(ErrorKind::kParse, "empty and/or condition");
      const Condition& head = c.operands[first];
      if (first + 1 == n) return condition_to_rule(head, 0, on_false, on_true);
      // a or rest: a true -> on_true, else test rest.
      // a and rest: a false -> on_false, else test rest.
      const RuleTree rest = condition_to_rule(c, first + 1, on_false, on_true);
      if (c.kind == Condition::Kind::kAny) return condition_to_rule(head, 0, rest, on_true);
      return condition_to_rule(head, 0, on_false, rest);
    }
  }
  fail(ErrorKind::kParse, "unknown condition kind");
}

}  // namespace detail

inline RuleTree condition_to_rule(const Condition& c, const RuleTree& on_false, const RuleTree& on_true) {
  return detail::condition_to_rule(c, 0, on_false, on_true);
}

inline RuleTree lf_expr_to_rule(const LfExpr& e, const LabelSet& labels) {
  switch (e.kind) {
    case LfExpr::Kind::kReturn:
      if (!labels.contains(e.label)) {
        fail(ErrorKind::kInvalidArgument, "Return of unknown label id " + std::to_string(e.label));
      }
      return RuleTree::leaf(e.label);
    case LfExpr::Kind::kIf: {
      if (e.branches.size() != 2) fail(ErrorKind::kParse, "If needs exactly two branches");
      const RuleTree on_true = lf_expr_to_rule(e.branches[0], labels);
      const RuleTree on_false = lf_expr_to_rule(e.branches[1], labels);
      return condition_to_rule(e.condition, on_false, on_true);
    }
    case LfExpr::Kind::kOpaque:
      if (e.labeler.empty()) fail(ErrorKind::kParse, "Opaque needs a labeler name");
      return wrap_blackbox(e.labeler, labels);
  }
  fail(ErrorKind::kParse, "unknown expression kind");
}

}  // namespace rulerepair
