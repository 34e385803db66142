#pragma once

#include <random>
#include <string>
#include <vector>

#include "rulerepair/rulerepair.hpp"

namespace fixtures {

using namespace rulerepair;

inline constexpr LabelId POS = 1;
inline constexpr LabelId NEG = 2;

inline LabelSet sentiment_labels() { return LabelSet({"ABSTAIN", "POS", "NEG"}); }

// 3x3 worked instance: three reviews, three rules, every threshold 1/2.
inline RepairInstance worked_instance() {
  RepairInstance inst;
  inst.votes = LabelMatrix::from_rows({{1, 1, 2}, {0, 1, 0}, {0, 1, 0}});
  inst.truth = {2, 1, 2};
  inst.thresholds = {Ratio(1, 2), Ratio(1, 2), Ratio(1, 2), AccuracyBase::kVoted};
  inst.label_count = 3;
  return inst;
}

// The reference solution for the worked instance, rows = datapoints.
inline LabelMatrix worked_reference_solution() { return LabelMatrix::from_rows({{2, 1, 2}, {0, 1, 1}, {2, 2, 0}}); }

inline RuleTree waste_rule() {
  return RuleTree::inner(contains_word("waste"), RuleTree::leaf(kAbstain), RuleTree::leaf(NEG));
}

inline const char* kAmazonRules = R"({
  "labels": ["ABSTAIN", "POS", "NEG"],
  "rules": [
    {"name": "key_word_star", "lf": {"if": {"or": [{"kind": "contains-word", "word": "star"},
                                                  {"kind": "contains-word", "word": "stars"}]},
                                     "then": {"return": "POS"}, "else": {"return": "ABSTAIN"}}},
    {"name": "key_word_waste", "lf": {"if": {"kind": "contains-word", "word": "waste"},
                                      "then": {"return": "NEG"}, "else": {"return": "ABSTAIN"}}},
    {"name": "key_word_poor", "lf": {"if": {"or": [{"kind": "contains-word", "word": "poorly"},
                                                  {"kind": "contains-word", "word": "useless"},
                                                  {"kind": "contains-word", "word": "horrible"},
                                                  {"kind": "contains-word", "word": "money"}]},
                                     "then": {"return": "NEG"}, "else": {"return": "ABSTAIN"}}}
  ]
})";

inline std::vector<Datapoint> amazon_reviews() {
  return {
      Datapoint("0", "five stars. product works fine", {}, POS),
      Datapoint("1", "one star. rather poorly written needs more content and an editor", {}, NEG),
      Datapoint("2", "five stars. awesome for the price lightweight and sturdy", {}, POS),
      Datapoint("3", "one star. not my subject of interest, too dark", {}, NEG),
      Datapoint("4",
                "yes, get it! the best money on a pool that we have ever spent. really cute and holds up well with "
                "kids constantly playing in it",
                {}, POS),
  };
}

// Single-predicate rule "stars -> NEG" and three reviews, two of which
// should become POS.
inline RuleTree stars_rule() {
  return RuleTree::inner(contains_word("stars"), RuleTree::leaf(kAbstain), RuleTree::leaf(NEG));
}

inline TargetedLabels stars_targets() {
  return {
      {Datapoint("d1", "I rate this one stars. This is bad."), NEG},
      {Datapoint("d2", "I rate this four stars. This is great."), POS},
      {Datapoint("d3", "I rate this five stars. This is great."), POS},
  };
}

// ---- random generators ----------------------------------------------------

inline const std::vector<std::string>& small_vocabulary() {
  static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"};
  return words;
}

inline Datapoint random_datapoint(std::mt19937_64& rng, const std::string& id, std::size_t max_words = 5) {
  const auto& words = small_vocabulary();
  std::string text;
  const std::size_t k = rng() % (max_words + 1);
  for (std::size_t t = 0; t < k; ++t) text += words[rng() % words.size()] + " ";
  return Datapoint(id, text);
}

inline Predicate random_predicate(std::mt19937_64& rng) {
  const auto& words = small_vocabulary();
  return contains_word(words[rng() % words.size()]);
}

inline RuleTree random_rule(std::mt19937_64& rng, std::size_t label_count, std::size_t depth) {
  if (depth == 0 || rng() % 3 == 0) return RuleTree::leaf(static_cast<LabelId>(rng() % label_count));
  return RuleTree::inner(random_predicate(rng), random_rule(rng, label_count, depth - 1),
                         random_rule(rng, label_count, depth - 1));
}

inline Ratio random_theta(std::mt19937_64& rng) {
  static const std::vector<Ratio> choices = {Ratio(0), Ratio(34, 100), Ratio(1, 2), Ratio(67, 100), Ratio(1)};
  return choices[rng() % choices.size()];
}

inline RepairInstance random_instance(std::mt19937_64& rng, std::size_t max_n, std::size_t max_m, std::size_t max_y,
                                      std::size_t max_cells = 1000) {
  RepairInstance inst;
  std::size_t n = 0, m = 0;
  do {
    n = 1 + rng() % max_n;
    m = 1 + rng() % max_m;
  } while (n * m > max_cells);
  inst.label_count = 2 + rng() % (max_y - 1);
  inst.votes = LabelMatrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    inst.truth.push_back(static_cast<LabelId>(1 + rng() % (inst.label_count - 1)));
    for (std::size_t j = 0; j < m; ++j) inst.votes.at(i, j) = static_cast<LabelId>(rng() % inst.label_count);
  }
  inst.thresholds = {random_theta(rng), random_theta(rng), random_theta(rng), AccuracyBase::kVoted};
  return inst;
}

}  // namespace fixtures
