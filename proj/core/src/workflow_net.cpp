#include "kdisc/workflow_net.hpp"

#include <deque>
#include <set>
#include <sstream>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

class NetBuilder {
 public:
  WorkflowNet build(const ProcessTree& tree) {
    net_.source = fresh();
    net_.sink = fresh();
    translate(tree, net_.source, net_.sink);
    return std::move(net_);
  }

 private:
  std::size_t fresh() { return net_.place_count++; }

  void transition(std::optional<Label> label, std::vector<std::size_t> in, std::vector<std::size_t> out) {
    net_.transitions.push_back(NetTransition{std::move(label), std::move(in), std::move(out)});
  }

  void translate(const ProcessTree& tree, std::size_t in, std::size_t out) {
    switch (tree.kind) {
      case NodeKind::Activity: transition(tree.label, {in}, {out}); return;
      case NodeKind::Silent: transition(std::nullopt, {in}, {out}); return;
      case NodeKind::Xor:
        for (const auto& child : tree.children) translate(child, in, out);
        return;
      case NodeKind::Sequence: {
        std::size_t from = in;
        for (std::size_t i = 0; i < tree.children.size(); ++i) {
          const std::size_t to = i + 1 == tree.children.size() ? out : fresh();
          translate(tree.children[i], from, to);
          from = to;
        }
        return;
      }
      case NodeKind::Parallel: {
        std::vector<std::size_t> starts, ends;
        for (std::size_t i = 0; i < tree.children.size(); ++i) {
          starts.push_back(fresh());
          ends.push_back(fresh());
        }
        transition(std::nullopt, {in}, starts);
        for (std::size_t i = 0; i < tree.children.size(); ++i) translate(tree.children[i], starts[i], ends[i]);
        transition(std::nullopt, ends, {out});
        return;
      }
      case NodeKind::Loop: {
        const std::size_t enter = fresh();
        const std::size_t leave = fresh();
        transition(std::nullopt, {in}, {enter});
        translate(tree.children[0], enter, leave);
        translate(tree.children[1], leave, enter);
        transition(std::nullopt, {leave}, {out});
        return;
      }
    }
  }

  WorkflowNet net_;
};

using Marking = std::vector<unsigned>;

bool enabled(const NetTransition& t, const Marking& m) {
  std::vector<unsigned> need(m.size(), 0);
  for (std::size_t p : t.inputs) ++need[p];
  for (std::size_t p : t.inputs)
    if (m[p] < need[p]) return false;
  return true;
}

Marking fire(const NetTransition& t, Marking m) {
  for (std::size_t p : t.inputs) --m[p];
  for (std::size_t p : t.outputs) ++m[p];
  return m;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::size_t WorkflowNet::arc_count() const {
  std::size_t n = 0;
  for (const auto& t : transitions) n += t.inputs.size() + t.outputs.size();
  return n;
}

WorkflowNet to_workflow_net(const ProcessTree& tree) { return NetBuilder().build(tree); }

bool replay(const WorkflowNet& net, const Trace& trace, std::size_t max_states) {
  std::size_t explored = 0;
  auto closure = [&](std::set<Marking> frontier) {
    std::deque<Marking> queue(frontier.begin(), frontier.end());
    while (!queue.empty()) {
      Marking m = std::move(queue.front());
      queue.pop_front();
      for (const auto& t : net.transitions) {
        if (t.label || !enabled(t, m)) continue;
        Marking next = fire(t, m);
        if (frontier.insert(next).second) {
          if (++explored > max_states) throw Error(ErrorKind::ExplosionGuard, "replay state space too large");
          queue.push_back(std::move(next));
        }
      }
    }
    return frontier;
  };

  Marking initial(net.place_count, 0);
  initial[net.source] = 1;
  std::set<Marking> current = closure({initial});
  for (const auto& label : trace) {
    std::set<Marking> next;
    for (const auto& m : current)
      for (const auto& t : net.transitions)
        if (t.label && *t.label == label && enabled(t, m)) next.insert(fire(t, m));
    if (next.empty()) return false;
    current = closure(std::move(next));
  }
  Marking final_marking(net.place_count, 0);
  final_marking[net.sink] = 1;
  return current.count(final_marking) > 0;
}

std::string to_dot(const WorkflowNet& net) {
  std::ostringstream out;
  out << "digraph workflow_net {\n  rankdir=LR;\n";
  for (std::size_t p = 0; p < net.place_count; ++p) {
    out << "  p" << p << " [shape=circle,label=\"\"";
    if (p == net.source) out << ",style=filled,fillcolor=\"#b7e4c7\"";
    if (p == net.sink) out << ",shape=doublecircle,style=filled,fillcolor=\"#f4a3a3\"";
    out << "];\n";
  }
  for (std::size_t i = 0; i < net.transitions.size(); ++i) {
    const auto& t = net.transitions[i];
    if (t.label)
      out << "  t" << i << " [shape=box,label=\"" << dot_escape(*t.label) << "\"];\n";
    else
      out << "  t" << i << " [shape=box,style=filled,fillcolor=black,label=\"\",width=0.15];\n";
  }
  for (std::size_t i = 0; i < net.transitions.size(); ++i) {
    for (std::size_t p : net.transitions[i].inputs) out << "  p" << p << " -> t" << i << ";\n";
    for (std::size_t p : net.transitions[i].outputs) out << "  t" << i << " -> p" << p << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_pnml(const WorkflowNet& net, std::string_view name) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<pnml>\n  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">\n"
      << "    <name><text>" << xml_escape(name) << "</text></name>\n    <page id=\"page1\">\n";
  for (std::size_t p = 0; p < net.place_count; ++p) {
    out << "      <place id=\"p" << p << "\"><name><text>"
        << (p == net.source ? "source" : p == net.sink ? "sink" : "p" + std::to_string(p)) << "</text></name>";
    if (p == net.source) out << "<initialMarking><text>1</text></initialMarking>";
    out << "</place>\n";
  }
  for (std::size_t i = 0; i < net.transitions.size(); ++i) {
    const auto& t = net.transitions[i];
    out << "      <transition id=\"t" << i << "\"><name><text>" << (t.label ? xml_escape(*t.label) : "tau")
        << "</text></name>";
    if (!t.label) out << "<toolspecific tool=\"ProM\" version=\"6.4\" activity=\"$invisible$\"/>";
    out << "</transition>\n";
  }
  std::size_t arc = 0;
  for (std::size_t i = 0; i < net.transitions.size(); ++i) {
    for (std::size_t p : net.transitions[i].inputs)
      out << "      <arc id=\"a" << arc++ << "\" source=\"p" << p << "\" target=\"t" << i << "\"/>\n";
    for (std::size_t p : net.transitions[i].outputs)
      out << "      <arc id=\"a" << arc++ << "\" source=\"t" << i << "\" target=\"p" << p << "\"/>\n";
  }
  out << "    </page>\n    <finalmarkings><marking><place idref=\"p" << net.sink
      << "\"><text>1</text></place></marking></finalmarkings>\n  </net>\n</pnml>\n";
  return out.str();
}

std::optional<ExportFormat> parse_export_format(std::string_view name) {
  if (name == "tree-text") return ExportFormat::TreeText;
  if (name == "tree-json") return ExportFormat::TreeJson;
  if (name == "dot") return ExportFormat::Dot;
  if (name == "pnml") return ExportFormat::Pnml;
  return std::nullopt;
}

std::string export_model(const ProcessTree& tree, ExportFormat format) {
  switch (format) {
    case ExportFormat::TreeText: return to_tree_text(tree) + "\n";
    case ExportFormat::TreeJson: return nlohmann::json(tree).dump(2) + "\n";
    case ExportFormat::Dot: return to_dot(to_workflow_net(tree));
    case ExportFormat::Pnml: return to_pnml(to_workflow_net(tree));
  }
  return {};
}

}  // namespace kdisc
