#include "kdisc/process_tree.hpp"

#include <cctype>

#include "kdisc/error.hpp"

namespace kdisc {

ProcessTree ProcessTree::activity(Label label) {
  ProcessTree t;
  t.kind = NodeKind::Activity;
  t.label = std::move(label);
  return t;
}

ProcessTree ProcessTree::silent() { return ProcessTree{}; }

ProcessTree ProcessTree::node(Operator op, std::vector<ProcessTree> children) {
  if (children.size() < 2) throw Error(ErrorKind::MalformedTree, "operator nodes need at least two children");
  if (op == Operator::Loop && children.size() != 2)
    throw Error(ErrorKind::MalformedTree, "loop nodes have exactly two children (body, redo)");
  ProcessTree t;
  t.kind = node_kind(op);
  t.children = std::move(children);
  return t;
}

std::optional<Operator> ProcessTree::op() const noexcept {
  switch (kind) {
    case NodeKind::Sequence: return Operator::Sequence;
    case NodeKind::Xor: return Operator::Xor;
    case NodeKind::Parallel: return Operator::Parallel;
    case NodeKind::Loop: return Operator::Loop;
    default: return std::nullopt;
  }
}

NodeKind node_kind(Operator op) {
  switch (op) {
    case Operator::Sequence: return NodeKind::Sequence;
    case Operator::Xor: return NodeKind::Xor;
    case Operator::Parallel: return NodeKind::Parallel;
    case Operator::Loop: return NodeKind::Loop;
  }
  return NodeKind::Silent;
}

ProcessTree normalize(ProcessTree tree) {
  if (tree.is_leaf()) return tree;
  std::vector<ProcessTree> children;
  for (auto& child : tree.children) {
    ProcessTree c = normalize(std::move(child));
    if (tree.kind != NodeKind::Loop && c.kind == tree.kind) {
      for (auto& grandchild : c.children) children.push_back(std::move(grandchild));
    } else {
      children.push_back(std::move(c));
    }
  }
  tree.children = std::move(children);
  return tree;
}

namespace {

void collect_labels(const ProcessTree& tree, std::vector<Label>& out) {
  if (tree.kind == NodeKind::Activity) out.push_back(tree.label);
  for (const auto& child : tree.children) collect_labels(child, out);
}

std::string quote(const Label& label) {
  std::string out = "'";
  for (char c : label) {
    if (c == '\'' || c == '\\') out += '\\';
    out += c;
  }
  return out + "'";
}

void write_text(const ProcessTree& tree, std::string& out) {
  switch (tree.kind) {
    case NodeKind::Activity: out += quote(tree.label); return;
    case NodeKind::Silent: out += "tau"; return;
    default: break;
  }
  out += to_string(*tree.op());
  out += '(';
  for (std::size_t i = 0; i < tree.children.size(); ++i) {
    if (i) out += ", ";
    write_text(tree.children[i], out);
  }
  out += ')';
}

class TreeTextParser {
 public:
  explicit TreeTextParser(std::string_view text) : text_(text) {}

  ProcessTree parse() {
    ProcessTree tree = parse_node();
    skip_space();
    if (pos_ != text_.size()) fail("trailing input");
    return tree;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::MalformedTree, what + " at offset " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ProcessTree parse_node() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == '\'') return ProcessTree::activity(parse_label());
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word == "tau") return ProcessTree::silent();
    Operator op;
    if (word == "seq") op = Operator::Sequence;
    else if (word == "xor") op = Operator::Xor;
    else if (word == "par") op = Operator::Parallel;
    else if (word == "loop") op = Operator::Loop;
    else fail("unknown operator '" + std::string(word) + "'");
    if (!consume('(')) fail("expected '('");
    std::vector<ProcessTree> children;
    do {
      children.push_back(parse_node());
    } while (consume(','));
    if (!consume(')')) fail("expected ')'");
    return ProcessTree::node(op, std::move(children));
  }

  Label parse_label() {
    ++pos_;  // opening quote
    Label label;
    while (pos_ < text_.size() && text_[pos_] != '\'') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      label += text_[pos_++];
    }
    if (pos_ >= text_.size()) fail("unterminated label");
    ++pos_;
    return label;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Activity: return "activity";
    case NodeKind::Silent: return "tau";
    case NodeKind::Sequence: return "seq";
    case NodeKind::Xor: return "xor";
    case NodeKind::Parallel: return "par";
    case NodeKind::Loop: return "loop";
  }
  return "?";
}

}  // namespace

std::vector<Label> leaf_labels(const ProcessTree& tree) {
  std::vector<Label> out;
  collect_labels(tree, out);
  return out;
}

LabelSet tree_alphabet(const ProcessTree& tree) {
  const auto labels = leaf_labels(tree);
  return LabelSet(labels.begin(), labels.end());
}

bool is_loop_free(const ProcessTree& tree) {
  if (tree.kind == NodeKind::Loop) return false;
  for (const auto& child : tree.children)
    if (!is_loop_free(child)) return false;
  return true;
}

std::string to_tree_text(const ProcessTree& tree) {
  std::string out;
  write_text(tree, out);
  return out;
}

ProcessTree parse_tree_text(std::string_view text) { return TreeTextParser(text).parse(); }

void to_json(nlohmann::json& j, const ProcessTree& tree) {
  j = nlohmann::json{{"type", kind_name(tree.kind)}};
  if (tree.kind == NodeKind::Activity) j["label"] = tree.label;
  if (!tree.is_leaf()) j["children"] = tree.children;
}

void from_json(const nlohmann::json& j, ProcessTree& tree) {
  const auto type = j.at("type").get<std::string>();
  if (type == "activity") {
    tree = ProcessTree::activity(j.at("label").get<std::string>());
    return;
  }
  if (type == "tau") {
    tree = ProcessTree::silent();
    return;
  }
  std::optional<Operator> op;
  for (Operator candidate : {Operator::Sequence, Operator::Xor, Operator::Parallel, Operator::Loop})
    if (type == to_string(candidate)) op = candidate;
  if (!op) throw Error(ErrorKind::MalformedTree, "unknown node type '" + type + "'");
  tree = ProcessTree::node(*op, j.at("children").get<std::vector<ProcessTree>>());
}

}  // namespace kdisc
