#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/predicate.hpp"

namespace rulerepair {

// Immutable binary decision tree: inner nodes test a predicate, leaves carry a
// label. Subtrees are shared between versions, so copies are cheap.
class RuleTree {
 public:
  static RuleTree leaf(LabelId label) {
    auto node = std::make_shared<Node>();
    node->label = label;
    return RuleTree(std::move(node));
  }

  static RuleTree inner(Predicate predicate, RuleTree on_false, RuleTree on_true) {
    auto node = std::make_shared<Node>();
    node->predicate = std::move(predicate);
    node->on_false = std::move(on_false.root_);
    node->on_true = std::move(on_true.root_);
    return RuleTree(std::move(node));
  }

  RuleTree() : RuleTree(leaf(kAbstain)) {}

  bool is_leaf() const { return !root_->predicate.has_value(); }

  LabelId label() const {
    if (!is_leaf()) fail(ErrorKind::kInvalidArgument, "label() on an inner node");
    return root_->label;
  }

  const Predicate& predicate() const {
    if (is_leaf()) fail(ErrorKind::kInvalidArgument, "predicate() on a leaf");
    return *root_->predicate;
  }

  RuleTree on_false() const { return RuleTree(child_or_fail(root_->on_false)); }
  RuleTree on_true() const { return RuleTree(child_or_fail(root_->on_true)); }
  RuleTree child(bool edge) const { return edge ? on_true() : on_false(); }

  std::size_t node_count() const { return count(root_.get(), false); }
  std::size_t inner_count() const { return count(root_.get(), true); }

  // Every leaf label must be a valid id for a vocabulary of `label_count`.
  void validate(std::size_t label_count) const { validate(root_.get(), label_count); }

  friend bool operator==(const RuleTree& a, const RuleTree& b) { return equal(a.root_.get(), b.root_.get()); }

 private:
  struct Node {
    std::optional<Predicate> predicate;
    LabelId label = kAbstain;
    std::shared_ptr<const Node> on_false;
    std::shared_ptr<const Node> on_true;
  };

  explicit RuleTree(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static std::shared_ptr<const Node> child_or_fail(const std::shared_ptr<const Node>& child) {
    if (!child) fail(ErrorKind::kInvalidArgument, "child of a leaf requested");
    return child;
  }

  static std::size_t count(const Node* node, bool inner_only) {
    if (!node->predicate) return inner_only ? 0 : 1;
    return 1 + count(node->on_false.get(), inner_only) + count(node->on_true.get(), inner_only);
  }

  static void validate(const Node* node, std::size_t label_count) {
    if (!node->predicate) {
      if (node->label < 0 || static_cast<std::size_t>(node->label) >= label_count) {
        fail(ErrorKind::kInvalidArgument, "leaf label " + std::to_string(node->label) + " out of range");
      }
      return;
    }
    if (node->predicate->kind == PredicateKind::kOpaqueEquals &&
        (node->predicate->label < 0 || static_cast<std::size_t>(node->predicate->label) >= label_count)) {
      fail(ErrorKind::kInvalidArgument, "opaque predicate compares against out-of-range label");
    }
    validate(node->on_false.get(), label_count);
    validate(node->on_true.get(), label_count);
  }

  static bool equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (a->predicate != b->predicate) return false;
    if (!a->predicate) return a->label == b->label;
    return equal(a->on_false.get(), b->on_false.get()) && equal(a->on_true.get(), b->on_true.get());
  }

  std::shared_ptr<const Node> root_;
};

// Root-to-leaf address as an edge string: '0' = false edge, '1' = true edge.
struct Path {
  std::string bits;

  Path extended(bool edge) const { return Path{bits + (edge ? '1' : '0')}; }
  std::size_t length() const { return bits.size(); }
  bool is_prefix_of(const Path& other) const { return other.bits.compare(0, bits.size(), bits) == 0; }

  friend auto operator<=>(const Path&, const Path&) = default;
  friend bool operator==(const Path&, const Path&) = default;
};

inline LabelId evaluate(const RuleTree& rule, const Datapoint& x,
                        const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  RuleTree node = rule;
  while (!node.is_leaf()) node = node.child(evaluate(node.predicate(), x, registry));
  return node.label();
}

inline Path path_of(const RuleTree& rule, const Datapoint& x,
                    const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  Path path;
  RuleTree node = rule;
  while (!node.is_leaf()) {
    const bool edge = evaluate(node.predicate(), x, registry);
    path.bits.push_back(edge ? '1' : '0');
    node = node.child(edge);
  }
  return path;
}

// Subtree reached by following `path`, or nullopt if the path leaves the tree.
inline std::optional<RuleTree> subtree_at(const RuleTree& rule, const Path& path) {
  RuleTree node = rule;
  for (const char edge : path.bits) {
    if (node.is_leaf() || (edge != '0' && edge != '1')) return std::nullopt;
    node = node.child(edge == '1');
  }
  return node;
}

// lab(P): label of the leaf that `path` ends in.
inline LabelId leaf_label(const RuleTree& rule, const Path& path) {
  const auto node = subtree_at(rule, path);
  if (!node || !node->is_leaf()) fail(ErrorKind::kInvalidStep, "path '" + path.bits + "' does not end at a leaf");
  return node->label();
}

// All root-to-leaf paths in left-to-right (false before true) order.
inline std::vector<Path> leaf_paths(const RuleTree& rule) {
  std::vector<Path> out;
  std::vector<std::pair<RuleTree, Path>> stack{{rule, Path{}}};
  while (!stack.empty()) {
    auto [node, path] = std::move(stack.back());
    stack.pop_back();
    if (node.is_leaf()) {
      out.push_back(path);
      continue;
    }
    stack.emplace_back(node.on_true(), path.extended(true));
    stack.emplace_back(node.on_false(), path.extended(false));
  }
  return out;
}

enum class StepKind { kSplit, kRelabel };

struct RefinementStep {
  StepKind kind = StepKind::kRelabel;
  Path path;
  Predicate predicate;           // split only
  LabelId false_label = kAbstain;  // split only
  LabelId true_label = kAbstain;   // split only
  LabelId new_label = kAbstain;    // relabel only

  static RefinementStep split(Path path, Predicate predicate, LabelId false_label, LabelId true_label) {
    RefinementStep step;
    step.kind = StepKind::kSplit;
    step.path = std::move(path);
    step.predicate = std::move(predicate);
    step.false_label = false_label;
    step.true_label = true_label;
    return step;
  }

  static RefinementStep relabel(Path path, LabelId label) {
    RefinementStep step;
    step.kind = StepKind::kRelabel;
    step.path = std::move(path);
    step.new_label = label;
    return step;
  }

  friend bool operator==(const RefinementStep&, const RefinementStep&) = default;
};

struct RefinementSequence {
  std::vector<RefinementStep> steps;

  // rcost: number of steps, relabels included.
  std::size_t rcost() const { return steps.size(); }
  bool empty() const { return steps.empty(); }

  void append(const RefinementSequence& other) {
    steps.insert(steps.end(), other.steps.begin(), other.steps.end());
  }

  friend bool operator==(const RefinementSequence&, const RefinementSequence&) = default;
};

namespace detail {

inline RuleTree rebuild(const RuleTree& node, const std::string& bits, std::size_t depth,
                        const RefinementStep& step) {
  if (depth == bits.size()) {
    if (!node.is_leaf()) fail(ErrorKind::kInvalidStep, "path '" + bits + "' ends at an inner node");
    if (step.kind == StepKind::kRelabel) return RuleTree::leaf(step.new_label);
    return RuleTree::inner(step.predicate, RuleTree::leaf(step.false_label), RuleTree::leaf(step.true_label));
  }
  if (node.is_leaf()) fail(ErrorKind::kInvalidStep, "path '" + bits + "' runs past a leaf");
  const char edge = bits[depth];
  if (edge == '1') return RuleTree::inner(node.predicate(), node.on_false(), rebuild(node.on_true(), bits, depth + 1, step));
  if (edge == '0') return RuleTree::inner(node.predicate(), rebuild(node.on_false(), bits, depth + 1, step), node.on_true());
  fail(ErrorKind::kInvalidStep, "malformed path '" + bits + "'");
}

}  // namespace detail

// Returns a new tree; untouched subtrees are shared with `rule`.
inline RuleTree apply_refinement(const RuleTree& rule, const RefinementStep& step) {
  return detail::rebuild(rule, step.path.bits, 0, step);
}

inline RuleTree apply_sequence(const RuleTree& rule, const RefinementSequence& sequence) {
  RuleTree current = rule;
  for (const auto& step : sequence.steps) current = apply_refinement(current, step);
  return current;
}

}  // namespace rulerepair
