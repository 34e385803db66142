#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "rulerepair/datapoint.hpp"
#include "rulerepair/io.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/predicate.hpp"
#include "rulerepair/rule_tree.hpp"

namespace rulerepair {

// Two-class review corpus with keyword rules whose mistakes are driven by
// negation: a "twisted" review mentions the opposite class's cue words, each
// preceded by "not". Rule j returns POS when its positive cue occurs, else NEG
// when its negative cue occurs, else abstains, so it misfires on most twisted
// reviews.
struct SyntheticSpec {
  std::size_t documents = 500;
  std::size_t rules = 5;
  double twisted_rate = 0.3;    // share of reviews written with negated cues
  double cue_rate = 0.85;       // chance a plain review carries rule j's own cue
  double negated_rate = 0.8;    // chance a twisted review negates rule j's opposite cue
  double own_cue_twisted = 0.2; // chance a twisted review still carries rule j's own cue
  std::size_t filler_min = 4;
  std::size_t filler_max = 8;
  std::uint64_t seed = 1;
};

struct SyntheticBenchmark {
  RuleSet rules;
  std::vector<Datapoint> documents;
};

inline constexpr LabelId kSyntheticPos = 1;
inline constexpr LabelId kSyntheticNeg = 2;

inline SyntheticBenchmark make_synthetic_benchmark(const SyntheticSpec& spec) {
  static const std::vector<std::string> kPositive = {"good", "great", "excellent", "love", "wonderful",
                                                     "superb", "perfect", "nice"};
  static const std::vector<std::string> kNegative = {"bad", "poor", "awful", "hate", "terrible",
                                                     "broken", "junk", "worst"};
  static const std::vector<std::string> kFiller = {
      "the",   "product", "arrived", "box",    "shipping", "price",  "item",   "color",  "size",  "battery",
      "cable", "screen",  "sound",   "weight", "design",   "manual", "store",  "week",   "month", "day",
      "this",  "it",      "was",     "is",     "really",   "quite",  "very",   "after",  "using", "again"};
  if (spec.rules == 0 || spec.rules > kPositive.size()) fail(ErrorKind::kInvalidArgument, "rules must be in [1, 8]");
  if (spec.filler_min > spec.filler_max) fail(ErrorKind::kInvalidArgument, "filler_min exceeds filler_max");

  SyntheticBenchmark bench;
  bench.rules.labels = LabelSet({"ABSTAIN", "POS", "NEG"});
  for (std::size_t j = 0; j < spec.rules; ++j) {
    const RuleTree on_negative =
        RuleTree::inner(contains_word(kNegative[j]), RuleTree::leaf(kAbstain), RuleTree::leaf(kSyntheticNeg));
    bench.rules.rules.push_back({"kw_" + kPositive[j] + "_" + kNegative[j],
                                 RuleTree::inner(contains_word(kPositive[j]), on_negative, RuleTree::leaf(kSyntheticPos))});
  }

  std::mt19937_64 rng(spec.seed);
  auto chance = [&](double p) { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p; };
  auto pick = [&](std::size_t bound) { return static_cast<std::size_t>(rng() % bound); };

  for (std::size_t d = 0; d < spec.documents; ++d) {
    const LabelId truth = d % 2 == 0 ? kSyntheticPos : kSyntheticNeg;
    const auto& own = truth == kSyntheticPos ? kPositive : kNegative;
    const auto& other = truth == kSyntheticPos ? kNegative : kPositive;
    const bool twisted = chance(spec.twisted_rate);

    std::vector<std::string> phrases;
    const std::size_t fillers = spec.filler_min + pick(spec.filler_max - spec.filler_min + 1);
    for (std::size_t k = 0; k < fillers; ++k) phrases.push_back(kFiller[pick(kFiller.size())]);
    for (std::size_t j = 0; j < spec.rules; ++j) {
      if (twisted) {
        if (chance(spec.negated_rate)) phrases.push_back("not " + other[j]);
        if (chance(spec.own_cue_twisted)) phrases.push_back(own[j]);
      } else if (chance(spec.cue_rate)) {
        phrases.push_back(own[j]);
      }
    }
    for (std::size_t k = phrases.size(); k > 1; --k) std::swap(phrases[k - 1], phrases[pick(k)]);
    std::string text;
    for (const auto& p : phrases) text += (text.empty() ? "" : " ") + p;
    char id[16];
    std::snprintf(id, sizeof id, "doc%04zu", d);
    bench.documents.emplace_back(id, text, std::map<std::string, std::string>{}, truth);
  }
  return bench;
}

}  // namespace rulerepair
