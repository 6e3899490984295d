#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kdisc/cut.hpp"
#include "kdisc/declare.hpp"
#include "kdisc/event_log.hpp"
#include "kdisc/process_tree.hpp"

namespace kdisc {

struct DiscoveryParams {
  double sup = 0.2;
  std::size_t max_depth = 256;
  // Discharging response/precedence at a sequence cut also injects existence
  // of the discharged side's activity. Off by default.
  bool strict_discharge = false;
  // Threads used for cut scoring. The result does not depend on it.
  std::size_t workers = 1;
  // Alphabets up to this size get every bipartition as candidate.
  std::size_t exhaustive_limit = 12;
};

/// Candidate cuts for all four operators. Exhaustive for small alphabets,
/// connectivity-guided above `exhaustive_limit`. Order: operator, then sigma1
/// by sorted label list. Throws AlphabetTooSmall for fewer than two labels.
std::vector<Cut> enumerate_cuts(const Dfg& dfg, std::size_t exhaustive_limit = 12);

/// True when every refinement of the cut's two sides yields a trace violating
/// `rule`. Throws LabelNotInScope if a rule label is on neither side.
bool forces_violation(const DeclareRule& rule, const Cut& cut);

/// Deviating plus sup-weighted missing edges. Throws InvalidPartition.
double cut_cost(const Cut& cut, const Dfg& dfg, double sup);

/// Rules whose labels all belong to `alphabet`.
std::vector<DeclareRule> rules_in_scope(const std::vector<DeclareRule>& rules, const LabelSet& alphabet);

/// Minimum-cost candidate not forced to violate an in-scope rule. Ties go to
/// operator order (seq < xor < par < loop), then the smallest sigma1.
std::optional<Cut> select_cut(const std::vector<Cut>& candidates, const Dfg& dfg,
                              const std::vector<DeclareRule>& rules, double sup, std::size_t workers = 1);

std::pair<std::vector<DeclareRule>, std::vector<DeclareRule>> pass_down_rules(const std::vector<DeclareRule>& rules,
                                                                               const Cut& cut,
                                                                               bool strict_discharge = false);

/// Most permissive model over the labels: loop(xor(a, b, ...), tau).
ProcessTree flower_model(const LabelSet& labels);

struct DiscoveryStep {
  std::size_t depth = 0;
  LabelSet alphabet;
  std::optional<Cut> cut;
  double cost = 0.0;
  std::string note;  // base case or fall-through description
};

struct DiscoveryResult {
  ProcessTree tree;
  std::vector<DiscoveryStep> steps;  // pre-order
};

/// Throws DepthLimitExceeded when the recursion exceeds params.max_depth.
ProcessTree discover(const EventLog& log, const std::vector<DeclareRule>& rules, const DiscoveryParams& params = {});
DiscoveryResult discover_with_steps(const EventLog& log, const std::vector<DeclareRule>& rules,
                                    const DiscoveryParams& params = {});

}  // namespace kdisc
