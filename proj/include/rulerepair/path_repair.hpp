#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/planner.hpp"
#include "rulerepair/predicate.hpp"
#include "rulerepair/predicate_space.hpp"
#include "rulerepair/ratio.hpp"
#include "rulerepair/rule_tree.hpp"

namespace rulerepair {

struct TargetedLabel {
  Datapoint point;
  LabelId label = kAbstain;
};

// Z: datapoints paired with the label a rule should return on them.
using TargetedLabels = std::vector<TargetedLabel>;

enum class PathAlgorithm { kEntropy, kGreedy, kBrute };

inline std::string_view to_string(PathAlgorithm algo) {
  switch (algo) {
    case PathAlgorithm::kEntropy: return "entropy";
    case PathAlgorithm::kGreedy: return "greedy";
    case PathAlgorithm::kBrute: return "brute";
  }
  return "?";
}

inline PathAlgorithm parse_path_algorithm(std::string_view name) {
  if (name == "entropy") return PathAlgorithm::kEntropy;
  if (name == "greedy") return PathAlgorithm::kGreedy;
  if (name == "brute") return PathAlgorithm::kBrute;
  fail(ErrorKind::kInvalidArgument, "unknown path algorithm '" + std::string(name) + "'");
}

inline constexpr std::size_t kBrutePathLimit = 8;

// Gini impurity 1 - sum p(y)^2 of a label multiset, exact.
inline Ratio gini(std::span<const LabelId> labels) {
  if (labels.empty()) fail(ErrorKind::kInvalidArgument, "gini of an empty multiset");
  std::map<LabelId, std::int64_t> counts;
  for (const LabelId y : labels) ++counts[y];
  const auto n = static_cast<std::int64_t>(labels.size());
  std::int64_t squares = 0;
  for (const auto& [y, c] : counts) squares += c * c;
  return Ratio(n * n - squares, n * n);
}

namespace detail {

struct SideCounts {
  std::int64_t size = 0;
  std::int64_t squares = 0;  // sum of squared per-label counts
};

// (|F| I(F) + |T| I(T)) / |Z| where |S| I(S) = (|S|^2 - sum c^2) / |S|.
inline Ratio weighted_impurity(const SideCounts& f, const SideCounts& t) {
  const std::int64_t n = f.size + t.size;
  const std::int64_t a = f.size * f.size - f.squares;
  const std::int64_t b = t.size * t.size - t.squares;
  if (f.size == 0) return Ratio(b, t.size * n);
  if (t.size == 0) return Ratio(a, f.size * n);
  return Ratio(a * t.size + b * f.size, f.size * t.size * n);
}

inline SideCounts side_counts(const std::vector<LabelId>& labels) {
  std::map<LabelId, std::int64_t> counts;
  for (const LabelId y : labels) ++counts[y];
  SideCounts out{static_cast<std::int64_t>(labels.size()), 0};
  for (const auto& kv : counts) out.squares += kv.second * kv.second;
  return out;
}

// Most frequent label; ties go to the smallest id.
inline LabelId majority_label(const std::vector<LabelId>& labels) {
  std::map<LabelId, std::size_t> counts;
  for (const LabelId y : labels) ++counts[y];
  LabelId best = kAbstain;
  std::size_t best_count = 0;
  for (const auto& [y, c] : counts) {
    if (c > best_count) {
      best = y;
      best_count = c;
    }
  }
  return best;
}

inline bool is_pure(const std::vector<LabelId>& labels) {
  return std::all_of(labels.begin(), labels.end(), [&](LabelId y) { return y == labels.front(); });
}

// Working view of Z_P: datapoints, desired labels and, per candidate
// predicate, its outcome on every datapoint.
struct PathProblem {
  std::vector<Datapoint> points;
  std::vector<LabelId> labels;
  std::vector<Predicate> candidates;
  std::vector<std::vector<bool>> outcomes;  // [candidate][point]

  std::vector<LabelId> labels_of(const std::vector<std::size_t>& subset) const {
    std::vector<LabelId> out;
    out.reserve(subset.size());
    for (const std::size_t k : subset) out.push_back(labels[k]);
    return out;
  }
};

inline void require_solvable(const TargetedLabels& z) {
  std::set<std::string> ids;
  for (const auto& t : z) {
    if (!ids.insert(t.point.id()).second) {
      fail(ErrorKind::kInvalidArgument, "datapoint '" + t.point.id() + "' targeted twice");
    }
  }
  for (std::size_t a = 0; a < z.size(); ++a) {
    for (std::size_t b = a + 1; b < z.size(); ++b) {
      if (z[a].label != z[b].label && z[a].point.indistinguishable_from(z[b].point)) {
        fail(ErrorKind::kNoSeparator, "datapoints '" + z[a].point.id() + "' and '" + z[b].point.id() +
                                          "' are indistinguishable but need different labels");
      }
    }
  }
}

inline void require_on_path(const RuleTree& rule, const Path& path, const TargetedLabels& z,
                            const OpaqueRegistry& registry) {
  for (const auto& t : z) {
    if (path_of(rule, t.point, registry) != path) {
      fail(ErrorKind::kInvalidArgument, "datapoint '" + t.point.id() + "' does not follow path '" + path.bits + "'");
    }
  }
}

inline PathProblem make_problem(const TargetedLabels& z, bool with_candidates) {
  PathProblem problem;
  for (const auto& t : z) {
    problem.points.push_back(t.point);
    problem.labels.push_back(t.label);
  }
  if (with_candidates) {
    problem.candidates = candidate_predicates(problem.points);
    for (const auto& p : problem.candidates) problem.outcomes.push_back(signature(p, problem.points));
  }
  return problem;
}

// Shared prologue of the three algorithms: validation plus the pure-set
// short-circuits. Returns true when `out` is already the answer.
inline bool trivial_repair(const RuleTree& rule, const Path& path, const TargetedLabels& z,
                           const OpaqueRegistry& registry, RefinementSequence& out) {
  const LabelId current = leaf_label(rule, path);
  if (z.empty()) return true;
  require_on_path(rule, path, z, registry);
  require_solvable(z);
  std::vector<LabelId> labels;
  for (const auto& t : z) labels.push_back(t.label);
  if (!is_pure(labels)) return false;
  if (labels.front() != current) out.steps.push_back(RefinementStep::relabel(path, labels.front()));
  return true;
}

}  // namespace detail

// Weighted Gini impurity of the two sides `p` splits Z into.
inline Ratio split_score(const TargetedLabels& z, const Predicate& p,
                         const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  if (z.empty()) fail(ErrorKind::kInvalidArgument, "split_score of an empty set");
  std::vector<LabelId> on_false, on_true;
  for (const auto& t : z) (evaluate(p, t.point, registry) ? on_true : on_false).push_back(t.label);
  return detail::weighted_impurity(detail::side_counts(on_false), detail::side_counts(on_true));
}

// Splits on the candidate with the lowest weighted Gini impurity until every
// leaf under `path` is pure. The true child takes the majority label of its
// side. The false child keeps the replaced leaf's label while that label
// still occurs on the false side, otherwise it takes the side's majority.
inline RefinementSequence entropy_path_repair(const RuleTree& rule, const Path& path, const TargetedLabels& z,
                                              const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  RefinementSequence out;
  if (detail::trivial_repair(rule, path, z, registry, out)) return out;
  const detail::PathProblem problem = detail::make_problem(z, true);

  struct Pending {
    Path path;
    std::vector<std::size_t> subset;
    LabelId leaf;
  };
  std::vector<std::size_t> all(z.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  std::deque<Pending> queue{{path, all, leaf_label(rule, path)}};

  while (!queue.empty()) {
    Pending item = std::move(queue.front());
    queue.pop_front();

    std::size_t best = problem.candidates.size();
    Ratio best_score;
    for (std::size_t c = 0; c < problem.candidates.size(); ++c) {
      std::vector<LabelId> f, t;
      for (const std::size_t k : item.subset) (problem.outcomes[c][k] ? t : f).push_back(problem.labels[k]);
      if (f.empty() || t.empty()) continue;
      const Ratio score = detail::weighted_impurity(detail::side_counts(f), detail::side_counts(t));
      if (best == problem.candidates.size() || score < best_score) {
        best = c;
        best_score = score;
      }
    }
    if (best == problem.candidates.size()) {
      fail(ErrorKind::kNoSeparator, "no candidate predicate splits the datapoints at path '" + item.path.bits + "'");
    }

    std::vector<std::size_t> f_subset, t_subset;
    for (const std::size_t k : item.subset) (problem.outcomes[best][k] ? t_subset : f_subset).push_back(k);
    const auto f_labels = problem.labels_of(f_subset);
    const auto t_labels = problem.labels_of(t_subset);
    const LabelId true_label = detail::majority_label(t_labels);
    const bool keeps = std::find(f_labels.begin(), f_labels.end(), item.leaf) != f_labels.end();
    const LabelId false_label = keeps ? item.leaf : detail::majority_label(f_labels);
    out.steps.push_back(RefinementStep::split(item.path, problem.candidates[best], false_label, true_label));

    if (!detail::is_pure(f_labels)) queue.push_back({item.path.extended(false), std::move(f_subset), false_label});
    if (!detail::is_pure(t_labels)) queue.push_back({item.path.extended(true), std::move(t_subset), true_label});
  }
  return out;
}

// Repeatedly separates the first differently-labeled pair (datapoints in id
// order) with a separator predicate; each child is labeled after the member
// of the pair that lands in it.
inline RefinementSequence greedy_path_repair(const RuleTree& rule, const Path& path, const TargetedLabels& z,
                                             const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  RefinementSequence out;
  if (detail::trivial_repair(rule, path, z, registry, out)) return out;

  std::vector<std::size_t> order(z.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a].point.id() < z[b].point.id(); });

  struct Pending {
    Path path;
    std::vector<std::size_t> subset;  // id order
  };
  std::deque<Pending> queue{{path, order}};
  while (!queue.empty()) {
    Pending item = std::move(queue.front());
    queue.pop_front();

    std::size_t a = 0, b = 0;
    bool found = false;
    for (std::size_t u = 0; u < item.subset.size() && !found; ++u) {
      for (std::size_t v = u + 1; v < item.subset.size() && !found; ++v) {
        if (z[item.subset[u]].label != z[item.subset[v]].label) {
          a = item.subset[u];
          b = item.subset[v];
          found = true;
        }
      }
    }
    if (!found) continue;

    const Predicate p = separator_predicate(z[a].point, z[b].point);
    const bool a_side = evaluate(p, z[a].point);
    std::vector<std::size_t> f_subset, t_subset;
    for (const std::size_t k : item.subset) (evaluate(p, z[k].point) ? t_subset : f_subset).push_back(k);
    const LabelId true_label = a_side ? z[a].label : z[b].label;
    const LabelId false_label = a_side ? z[b].label : z[a].label;
    out.steps.push_back(RefinementStep::split(item.path, p, false_label, true_label));
    queue.push_back({item.path.extended(false), std::move(f_subset)});
    queue.push_back({item.path.extended(true), std::move(t_subset)});
  }
  return out;
}

// Minimum number of splits over trees built from the candidate predicates,
// by memoised search over subsets of Z_P.
inline RefinementSequence brute_force_path_repair(const RuleTree& rule, const Path& path, const TargetedLabels& z,
                                                  const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  if (z.size() > kBrutePathLimit) {
    fail(ErrorKind::kSizeGuard, "brute-force path repair limited to " + std::to_string(kBrutePathLimit) +
                                    " datapoints, got " + std::to_string(z.size()));
  }
  RefinementSequence out;
  if (detail::trivial_repair(rule, path, z, registry, out)) return out;
  const detail::PathProblem problem = detail::make_problem(z, true);

  using Mask = std::uint32_t;
  std::vector<Mask> masks;
  for (const auto& bits : problem.outcomes) {
    Mask m = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) m |= bits[k] ? Mask{1} << k : 0;
    masks.push_back(m);
  }
  auto labels_in = [&](Mask s) {
    std::vector<LabelId> out_labels;
    for (std::size_t k = 0; k < z.size(); ++k) {
      if (s & (Mask{1} << k)) out_labels.push_back(problem.labels[k]);
    }
    return out_labels;
  };

  constexpr int kUnsolved = -1;
  constexpr int kImpossible = 1 << 20;
  std::vector<int> memo(std::size_t{1} << z.size(), kUnsolved);
  std::vector<int> choice(memo.size(), -1);
  auto solve = [&](auto&& self, Mask s) -> int {
    if (memo[s] != kUnsolved) return memo[s];
    if (detail::is_pure(labels_in(s))) return memo[s] = 0;
    int best = kImpossible;
    for (std::size_t c = 0; c < masks.size(); ++c) {
      const Mask t = s & masks[c];
      const Mask f = s & ~masks[c];
      if (t == 0 || f == 0) continue;
      const int cost = 1 + self(self, f) + self(self, t);
      if (cost < best) {
        best = cost;
        choice[s] = static_cast<int>(c);
      }
    }
    return memo[s] = best;
  };
  const Mask full = static_cast<Mask>((std::size_t{1} << z.size()) - 1);
  if (solve(solve, full) >= kImpossible) {
    fail(ErrorKind::kNoSeparator, "candidate predicates cannot separate the datapoints at path '" + path.bits + "'");
  }

  auto emit = [&](auto&& self, Mask s, const Path& at) -> void {
    if (memo[s] == 0) return;
    const auto c = static_cast<std::size_t>(choice[s]);
    const Mask t = s & masks[c];
    const Mask f = s & ~masks[c];
    out.steps.push_back(RefinementStep::split(at, problem.candidates[c], detail::majority_label(labels_in(f)),
                                              detail::majority_label(labels_in(t))));
    self(self, f, at.extended(false));
    self(self, t, at.extended(true));
  };
  emit(emit, full, path);
  return out;
}

inline RefinementSequence repair_path(PathAlgorithm algo, const RuleTree& rule, const Path& path,
                                      const TargetedLabels& z, const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  switch (algo) {
    case PathAlgorithm::kEntropy: return entropy_path_repair(rule, path, z, registry);
    case PathAlgorithm::kGreedy: return greedy_path_repair(rule, path, z, registry);
    case PathAlgorithm::kBrute: return brute_force_path_repair(rule, path, z, registry);
  }
  fail(ErrorKind::kInvalidArgument, "unknown path algorithm");
}

// Groups Z by the leaf each datapoint reaches and repairs every leaf
// independently, in path order. Applying the result to `rule` makes it return
// the desired label on every datapoint of Z.
inline RefinementSequence single_rule_refine(const RuleTree& rule, const TargetedLabels& z,
                                             PathAlgorithm algo = PathAlgorithm::kEntropy,
                                             const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  std::map<Path, TargetedLabels> by_path;
  for (const auto& t : z) by_path[path_of(rule, t.point, registry)].push_back(t);
  RefinementSequence out;
  for (const auto& [path, group] : by_path) out.append(repair_path(algo, rule, path, group, registry));
  return out;
}

struct RepairedRules {
  std::vector<RuleTree> rules;
  std::vector<RefinementSequence> sequences;  // one per rule
};

// Realises a plan: rule j is refined so that it returns O[i][j] on xs[i].
inline RepairedRules apply_repair_plan(const std::vector<RuleTree>& rules, const LabelMatrix& target,
                                       std::span<const Datapoint> xs, PathAlgorithm algo = PathAlgorithm::kEntropy,
                                       const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  if (target.cols() != rules.size()) fail(ErrorKind::kShapeMismatch, "plan columns differ from rule count");
  if (target.rows() != xs.size()) fail(ErrorKind::kShapeMismatch, "plan rows differ from datapoint count");
  RepairedRules out;
  for (std::size_t j = 0; j < rules.size(); ++j) {
    TargetedLabels z;
    for (std::size_t i = 0; i < xs.size(); ++i) z.push_back({xs[i], target.at(i, j)});
    RefinementSequence seq = single_rule_refine(rules[j], z, algo, registry);
    out.rules.push_back(apply_sequence(rules[j], seq));
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

inline RepairedRules apply_repair_plan(const std::vector<RuleTree>& rules, const RepairPlan& plan,
                                       std::span<const Datapoint> xs, PathAlgorithm algo = PathAlgorithm::kEntropy,
                                       const OpaqueRegistry& registry = OpaqueRegistry::empty()) {
  return apply_repair_plan(rules, plan.target, xs, algo, registry);
}

}  // namespace rulerepair
