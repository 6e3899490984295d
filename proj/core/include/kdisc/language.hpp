#pragma once

#include <cstddef>
#include <optional>
#include <set>

#include "kdisc/declare.hpp"
#include "kdisc/process_tree.hpp"

namespace kdisc {

/// Exact language membership (no unrolling bound).
bool accepts(const ProcessTree& tree, const Trace& trace);

struct BoundedLanguage {
  std::set<Trace> traces;
  std::size_t loop_bound = 0;
  std::size_t max_len = 0;
  // True when the tree is loop-free and no trace was cut by max_len.
  bool exact = false;
};

inline constexpr std::size_t kDefaultLanguageCap = 1'000'000;

/// Traces derivable with at most `loop_bound` redo iterations per loop node and
/// length <= max_len. Throws ExplosionGuard when more than `cap` traces arise.
BoundedLanguage enumerate_language(const ProcessTree& tree, std::size_t loop_bound, std::size_t max_len,
                                   std::size_t cap = kDefaultLanguageCap);

struct ModelVerdict {
  bool holds = true;
  std::optional<Trace> witness;  // first violating trace, length-lexicographic
  bool exact = false;            // verdict covers the full language
};

ModelVerdict model_satisfies(const DeclareRule& rule, const ProcessTree& tree, std::size_t loop_bound,
                             std::size_t max_len, std::size_t cap = kDefaultLanguageCap);

/// Length-lexicographic order on traces.
bool shortlex_less(const Trace& a, const Trace& b);

}  // namespace kdisc
