#include "kdisc/cut.hpp"

#include <algorithm>

#include "kdisc/error.hpp"

namespace kdisc {

std::string_view to_string(Operator op) {
  switch (op) {
    case Operator::Sequence: return "seq";
    case Operator::Xor: return "xor";
    case Operator::Parallel: return "par";
    case Operator::Loop: return "loop";
  }
  return "?";
}

Cut canonical(Cut cut) {
  if (cut.op == Operator::Sequence || cut.op == Operator::Loop) return cut;
  const bool swap = cut.sigma2.size() < cut.sigma1.size() ||
                    (cut.sigma2.size() == cut.sigma1.size() &&
                     std::lexicographical_compare(cut.sigma2.begin(), cut.sigma2.end(), cut.sigma1.begin(),
                                                  cut.sigma1.end()));
  if (swap) std::swap(cut.sigma1, cut.sigma2);
  return cut;
}

void require_partition(const Cut& cut, const LabelSet& alphabet) {
  if (cut.sigma1.empty() || cut.sigma2.empty())
    throw Error(ErrorKind::InvalidPartition, "both sides of a cut must be nonempty");
  for (const auto& label : cut.sigma1) {
    if (cut.sigma2.count(label)) throw Error(ErrorKind::InvalidPartition, "label on both sides: " + label);
    if (!alphabet.count(label)) throw Error(ErrorKind::InvalidPartition, "label outside alphabet: " + label);
  }
  for (const auto& label : cut.sigma2)
    if (!alphabet.count(label)) throw Error(ErrorKind::InvalidPartition, "label outside alphabet: " + label);
  if (cut.sigma1.size() + cut.sigma2.size() != alphabet.size())
    throw Error(ErrorKind::InvalidPartition, "cut does not cover the alphabet");
}

namespace {
std::string join(const LabelSet& labels) {
  std::string out = "{";
  bool first = true;
  for (const auto& label : labels) {
    if (!first) out += ", ";
    out += label;
    first = false;
  }
  return out + "}";
}
}  // namespace

std::string to_string(const Cut& cut) {
  return std::string(to_string(cut.op)) + "(" + join(cut.sigma1) + ", " + join(cut.sigma2) + ")";
}

}  // namespace kdisc
