#include "kdisc/language.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

using Word = std::vector<int>;

class Matcher {
 public:
  explicit Matcher(const ProcessTree& tree) {
    for (const auto& label : tree_alphabet(tree)) ids_.emplace(label, static_cast<int>(ids_.size()));
    root_ = flatten(tree);
  }

  bool accepts(const Trace& trace) {
    Word word;
    word.reserve(trace.size());
    for (const auto& label : trace) {
      const auto it = ids_.find(label);
      if (it == ids_.end()) return false;
      word.push_back(it->second);
    }
    return match(root_, word);
  }

 private:
  struct Node {
    NodeKind kind;
    int label = -1;
    std::vector<int> children;
    std::vector<char> alphabet;  // indexed by label id
  };

  int flatten(const ProcessTree& tree) {
    Node node;
    node.kind = tree.kind;
    node.alphabet.assign(ids_.size(), 0);
    if (tree.kind == NodeKind::Activity) {
      node.label = ids_.at(tree.label);
      node.alphabet[node.label] = 1;
    }
    for (const auto& child : tree.children) {
      const int id = flatten(child);
      node.children.push_back(id);
      for (std::size_t i = 0; i < ids_.size(); ++i) node.alphabet[i] |= nodes_[id].alphabet[i];
    }
    nodes_.push_back(std::move(node));
    return static_cast<int>(nodes_.size()) - 1;
  }

  bool match(int id, const Word& w) {
    const auto key = std::make_pair(id, w);
    if (const auto it = memo_.find(key); it != memo_.end()) return it->second;
    const bool result = compute(id, w);
    memo_.emplace(key, result);
    return result;
  }

  bool match_range(int id, const Word& w, std::size_t from, std::size_t to) {
    return match(id, Word(w.begin() + static_cast<std::ptrdiff_t>(from), w.begin() + static_cast<std::ptrdiff_t>(to)));
  }

  bool compute(int id, const Word& w) {
    const Node& node = nodes_[id];
    for (int symbol : w)
      if (!node.alphabet[symbol]) return false;
    const std::size_t n = w.size();
    switch (node.kind) {
      case NodeKind::Activity: return n == 1 && w[0] == node.label;
      case NodeKind::Silent: return n == 0;
      case NodeKind::Xor:
        for (int child : node.children)
          if (match(child, w)) return true;
        return false;
      case NodeKind::Sequence: {
        std::vector<char> reach(n + 1, 0);
        reach[0] = 1;
        for (int child : node.children) {
          std::vector<char> next(n + 1, 0);
          for (std::size_t i = 0; i <= n; ++i) {
            if (!reach[i]) continue;
            for (std::size_t j = i; j <= n; ++j)
              if (!next[j] && match_range(child, w, i, j)) next[j] = 1;
          }
          reach = std::move(next);
        }
        return reach[n] != 0;
      }
      case NodeKind::Loop: {
        const int body = node.children[0];
        const int redo = node.children[1];
        std::vector<char> after_body(n + 1, 0);
        std::vector<std::size_t> frontier;
        for (std::size_t j = 0; j <= n; ++j)
          if (match_range(body, w, 0, j)) {
            after_body[j] = 1;
            frontier.push_back(j);
          }
        std::vector<char> expanded(n + 1, 0);
        while (!frontier.empty()) {
          const std::size_t p = frontier.back();
          frontier.pop_back();
          if (expanded[p]) continue;
          expanded[p] = 1;
          for (std::size_t q = p; q <= n; ++q) {
            if (!match_range(redo, w, p, q)) continue;
            for (std::size_t r = q; r <= n; ++r)
              if (!after_body[r] && match_range(body, w, q, r)) {
                after_body[r] = 1;
                frontier.push_back(r);
              }
          }
        }
        return after_body[n] != 0;
      }
      case NodeKind::Parallel: return match_parallel(node, w);
    }
    return false;
  }

  bool match_parallel(const Node& node, const Word& w) {
    bool disjoint = true;
    std::vector<int> owner(ids_.size(), -1);
    for (std::size_t c = 0; c < node.children.size() && disjoint; ++c) {
      const auto& alpha = nodes_[node.children[c]].alphabet;
      for (std::size_t s = 0; s < alpha.size(); ++s) {
        if (!alpha[s]) continue;
        if (owner[s] >= 0) {
          disjoint = false;
          break;
        }
        owner[s] = static_cast<int>(c);
      }
    }
    if (disjoint) {
      std::vector<Word> parts(node.children.size());
      for (int symbol : w) parts[owner[symbol]].push_back(symbol);
      for (std::size_t c = 0; c < node.children.size(); ++c)
        if (!match(node.children[c], parts[c])) return false;
      return true;
    }
    // Overlapping alphabets: try every assignment of events to children.
    if (w.size() > 16) throw Error(ErrorKind::ExplosionGuard, "parallel membership with shared labels on a long trace");
    std::vector<Word> parts(node.children.size());
    return assign(node, w, 0, parts);
  }

  bool assign(const Node& node, const Word& w, std::size_t pos, std::vector<Word>& parts) {
    if (pos == w.size()) {
      for (std::size_t c = 0; c < node.children.size(); ++c)
        if (!match(node.children[c], parts[c])) return false;
      return true;
    }
    for (std::size_t c = 0; c < node.children.size(); ++c) {
      if (!nodes_[node.children[c]].alphabet[w[pos]]) continue;
      parts[c].push_back(w[pos]);
      const bool ok = assign(node, w, pos + 1, parts);
      parts[c].pop_back();
      if (ok) return true;
    }
    return false;
  }

  std::map<Label, int> ids_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::map<std::pair<int, Word>, bool> memo_;
};

class Enumerator {
 public:
  Enumerator(std::size_t loop_bound, std::size_t max_len, std::size_t cap)
      : loop_bound_(loop_bound), max_len_(max_len), cap_(cap) {}

  std::set<Trace> run(const ProcessTree& tree) {
    switch (tree.kind) {
      case NodeKind::Activity:
        if (max_len_ == 0) {
          truncated_ = true;
          return {};
        }
        return {Trace{tree.label}};
      case NodeKind::Silent: return {Trace{}};
      case NodeKind::Xor: {
        std::set<Trace> out;
        for (const auto& child : tree.children) {
          auto part = run(child);
          out.insert(part.begin(), part.end());
          guard(out);
        }
        return out;
      }
      case NodeKind::Sequence: {
        std::set<Trace> out{Trace{}};
        for (const auto& child : tree.children) out = concat(out, run(child));
        return out;
      }
      case NodeKind::Parallel: {
        std::set<Trace> out{Trace{}};
        for (const auto& child : tree.children) out = shuffle(out, run(child));
        return out;
      }
      case NodeKind::Loop: {
        const auto body = run(tree.children[0]);
        const auto redo = run(tree.children[1]);
        std::set<Trace> out = body;
        std::set<Trace> current = body;
        for (std::size_t k = 0; k < loop_bound_ && !current.empty(); ++k) {
          current = concat(concat(current, redo), body);
          out.insert(current.begin(), current.end());
          guard(out);
        }
        return out;
      }
    }
    return {};
  }

  bool truncated() const { return truncated_; }

 private:
  void guard(const std::set<Trace>& s) const {
    if (s.size() > cap_)
      throw Error(ErrorKind::ExplosionGuard, "bounded language exceeds " + std::to_string(cap_) + " traces");
  }

  std::set<Trace> concat(const std::set<Trace>& left, const std::set<Trace>& right) {
    std::set<Trace> out;
    for (const auto& l : left)
      for (const auto& r : right) {
        if (l.size() + r.size() > max_len_) {
          truncated_ = true;
          continue;
        }
        Trace t = l;
        t.insert(t.end(), r.begin(), r.end());
        out.insert(std::move(t));
        guard(out);
      }
    return out;
  }

  std::set<Trace> shuffle(const std::set<Trace>& left, const std::set<Trace>& right) {
    std::set<Trace> out;
    Trace buffer;
    for (const auto& l : left)
      for (const auto& r : right) {
        if (l.size() + r.size() > max_len_) {
          truncated_ = true;
          continue;
        }
        interleave(l, 0, r, 0, buffer, out);
      }
    return out;
  }

  void interleave(const Trace& l, std::size_t i, const Trace& r, std::size_t j, Trace& buffer, std::set<Trace>& out) {
    if (i == l.size() && j == r.size()) {
      out.insert(buffer);
      guard(out);
      return;
    }
    if (i < l.size()) {
      buffer.push_back(l[i]);
      interleave(l, i + 1, r, j, buffer, out);
      buffer.pop_back();
    }
    if (j < r.size()) {
      buffer.push_back(r[j]);
      interleave(l, i, r, j + 1, buffer, out);
      buffer.pop_back();
    }
  }

  std::size_t loop_bound_;
  std::size_t max_len_;
  std::size_t cap_;
  bool truncated_ = false;
};

}  // namespace

bool accepts(const ProcessTree& tree, const Trace& trace) { return Matcher(tree).accepts(trace); }

BoundedLanguage enumerate_language(const ProcessTree& tree, std::size_t loop_bound, std::size_t max_len,
                                   std::size_t cap) {
  Enumerator e(loop_bound, max_len, cap);
  BoundedLanguage lang;
  lang.traces = e.run(tree);
  lang.loop_bound = loop_bound;
  lang.max_len = max_len;
  lang.exact = is_loop_free(tree) && !e.truncated();
  return lang;
}

bool shortlex_less(const Trace& a, const Trace& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

ModelVerdict model_satisfies(const DeclareRule& rule, const ProcessTree& tree, std::size_t loop_bound,
                             std::size_t max_len, std::size_t cap) {
  const auto lang = enumerate_language(tree, loop_bound, max_len, cap);
  std::vector<Trace> ordered(lang.traces.begin(), lang.traces.end());
  std::sort(ordered.begin(), ordered.end(), shortlex_less);
  ModelVerdict verdict;
  verdict.exact = lang.exact;
  for (const auto& trace : ordered) {
    if (!check_trace(rule, trace)) {
      verdict.holds = false;
      verdict.witness = trace;
      break;
    }
  }
  return verdict;
}

}  // namespace kdisc
