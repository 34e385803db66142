#pragma once

// Umbrella header for the rule repair library.

#include "rulerepair/datapoint.hpp"
#include "rulerepair/error.hpp"
#include "rulerepair/io.hpp"
#include "rulerepair/label_matrix.hpp"
#include "rulerepair/label_models.hpp"
#include "rulerepair/labels.hpp"
#include "rulerepair/metrics.hpp"
#include "rulerepair/path_repair.hpp"
#include "rulerepair/pipeline.hpp"
#include "rulerepair/planner.hpp"
#include "rulerepair/predicate.hpp"
#include "rulerepair/predicate_space.hpp"
#include "rulerepair/ratio.hpp"
#include "rulerepair/rule_tree.hpp"
#include "rulerepair/synthetic.hpp"
#include "rulerepair/translate.hpp"
