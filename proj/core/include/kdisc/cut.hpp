#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kdisc {

using Label = std::string;
using Trace = std::vector<Label>;
using LabelSet = std::set<Label>;

// Declaration order is the tie-break order used by cut selection.
enum class Operator { Sequence, Xor, Parallel, Loop };

std::string_view to_string(Operator op);

// Binary cut of an alphabet. For Sequence sigma1 precedes sigma2; for Loop sigma1
// is the body and sigma2 the redo part. Xor and Parallel are symmetric and kept in
// canonical orientation (see canonical()).
struct Cut {
  Operator op = Operator::Sequence;
  LabelSet sigma1;
  LabelSet sigma2;

  bool operator==(const Cut&) const = default;
};

// Orders the two sides of a symmetric cut: the smaller side first, ties broken
// by the lexicographically smaller sorted label list. Ordered operators are
// returned unchanged.
Cut canonical(Cut cut);

// Throws InvalidPartition unless sigma1/sigma2 are nonempty, disjoint and
// together equal `alphabet`.
void require_partition(const Cut& cut, const LabelSet& alphabet);

std::string to_string(const Cut& cut);

}  // namespace kdisc
