#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kdisc/process_tree.hpp"

namespace kdisc {

struct NetTransition {
  std::optional<Label> label;  // nullopt = silent
  std::vector<std::size_t> inputs;
  std::vector<std::size_t> outputs;
};

/// Petri net with a unique source and sink place. Places are numbered
/// 0..place_count-1.
struct WorkflowNet {
  std::size_t place_count = 0;
  std::vector<NetTransition> transitions;
  std::size_t source = 0;
  std::size_t sink = 0;

  std::size_t arc_count() const;
};

/// Standard block-wise translation; loops get silent entry/exit transitions and
/// parallel blocks silent split/join transitions.
WorkflowNet to_workflow_net(const ProcessTree& tree);

/// True when the trace leads from [source] to [sink], silent moves allowed.
/// Throws ExplosionGuard if the explored marking space exceeds `max_states`.
bool replay(const WorkflowNet& net, const Trace& trace, std::size_t max_states = 200'000);

std::string to_dot(const WorkflowNet& net);
std::string to_pnml(const WorkflowNet& net, std::string_view name = "discovered");

enum class ExportFormat { TreeText, TreeJson, Dot, Pnml };

/// Accepts tree-text, tree-json, dot, pnml.
std::optional<ExportFormat> parse_export_format(std::string_view name);
std::string export_model(const ProcessTree& tree, ExportFormat format);

}  // namespace kdisc
