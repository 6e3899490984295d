#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/cut.hpp"

namespace kdisc {

enum class NodeKind { Activity, Silent, Sequence, Xor, Parallel, Loop };

/// Block-structured process model. Operator nodes have at least two children;
/// loop nodes have exactly two (body, redo).
struct ProcessTree {
  NodeKind kind = NodeKind::Silent;
  Label label;
  std::vector<ProcessTree> children;

  static ProcessTree activity(Label label);
  static ProcessTree silent();
  /// Throws MalformedTree when the child count is invalid for the operator.
  static ProcessTree node(Operator op, std::vector<ProcessTree> children);

  bool is_leaf() const noexcept { return kind == NodeKind::Activity || kind == NodeKind::Silent; }
  std::optional<Operator> op() const noexcept;

  bool operator==(const ProcessTree&) const = default;
};

NodeKind node_kind(Operator op);

/// Flattens directly nested sequence/xor/parallel nodes of the same operator.
ProcessTree normalize(ProcessTree tree);

/// Activity labels in left-to-right leaf order (duplicates kept).
std::vector<Label> leaf_labels(const ProcessTree& tree);
LabelSet tree_alphabet(const ProcessTree& tree);
bool is_loop_free(const ProcessTree& tree);

/// Text form: seq|xor|par|loop '(' child (',' child)* ')', labels in single
/// quotes (backslash escapes quote and backslash), `tau` for silent leaves.
std::string to_tree_text(const ProcessTree& tree);
/// Throws MalformedTree.
ProcessTree parse_tree_text(std::string_view text);

void to_json(nlohmann::json& j, const ProcessTree& tree);
void from_json(const nlohmann::json& j, ProcessTree& tree);

}  // namespace kdisc
