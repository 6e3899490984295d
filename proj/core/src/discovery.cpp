#include "kdisc/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <thread>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

// Side membership of each label (by index into the sorted alphabet): 1 = sigma1.
using Membership = std::vector<char>;

struct Candidate {
  Operator op;
  Membership in1;
};

bool sigma1_less(const Membership& a, const Membership& b) {
  // Lexicographic comparison of the sorted index lists of sigma1.
  std::size_t i = 0, j = 0;
  const std::size_t n = a.size();
  while (true) {
    while (i < n && !a[i]) ++i;
    while (j < n && !b[j]) ++j;
    if (i == n || j == n) return i == n && j != n;
    if (i != j) return i < j;
    ++i;
    ++j;
  }
}

bool candidate_less(const Candidate& a, const Candidate& b) {
  if (a.op != b.op) return a.op < b.op;
  return sigma1_less(a.in1, b.in1);
}

std::size_t count_sigma1(const Membership& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }

Membership complement(const Membership& m) {
  Membership out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = !m[i];
  return out;
}

// Symmetric operators keep the smaller side (ties: smaller label list) as sigma1.
Membership canonical_symmetric(const Membership& m) {
  const Membership other = complement(m);
  const std::size_t left = count_sigma1(m);
  const std::size_t right = m.size() - left;
  if (right < left || (right == left && sigma1_less(other, m))) return other;
  return m;
}

class CostModel {
 public:
  explicit CostModel(const Dfg& dfg) : labels_(dfg.alphabet.begin(), dfg.alphabet.end()) {
    const std::size_t n = labels_.size();
    for (std::size_t i = 0; i < n; ++i) index_.emplace(labels_[i], i);
    freq_.assign(n * n, 0);
    start_.assign(n, 0);
    end_.assign(n, 0);
    std::uint64_t sum = 0;
    std::uint64_t positive = 0;
    for (const auto& [edge, f] : dfg.edges) {
      const auto x = index_.find(edge.first);
      const auto y = index_.find(edge.second);
      if (x == index_.end() || y == index_.end() || f == 0) continue;
      freq_[x->second * n + y->second] = f;
      sum += f;
      ++positive;
    }
    for (const auto& [label, f] : dfg.start_freq)
      if (auto it = index_.find(label); it != index_.end()) start_[it->second] = f;
    for (const auto& [label, f] : dfg.end_freq)
      if (auto it = index_.find(label); it != index_.end()) end_[it->second] = f;
    mean_edge_ = positive == 0 ? 0.0 : std::ceil(static_cast<double>(sum) / static_cast<double>(positive));
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<Label>& labels() const { return labels_; }
  std::optional<std::size_t> index(const Label& label) const {
    const auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double cost(Operator op, const Membership& in1, double sup) const {
    const std::size_t n = labels_.size();
    auto f = [&](std::size_t x, std::size_t y) { return freq_[x * n + y]; };
    std::uint64_t dev = 0;
    std::uint64_t missing = 0;
    switch (op) {
      case Operator::Sequence:
        for (std::size_t x = 0; x < n; ++x) {
          if (in1[x]) {
            dev += end_[x];
            std::uint64_t forward = 0;
            for (std::size_t y = 0; y < n; ++y)
              if (!in1[y]) forward += f(x, y);
            if (forward == 0 && end_[x] == 0) ++missing;
          } else {
            dev += start_[x];
            for (std::size_t y = 0; y < n; ++y)
              if (in1[y]) dev += f(x, y);
          }
        }
        break;
      case Operator::Xor:
        for (std::size_t x = 0; x < n; ++x)
          for (std::size_t y = 0; y < n; ++y)
            if (in1[x] != in1[y]) dev += f(x, y);
        break;
      case Operator::Parallel:
        for (std::size_t x = 0; x < n; ++x)
          for (std::size_t y = 0; y < n; ++y)
            if (in1[x] != in1[y] && f(x, y) == 0) ++missing;
        break;
      case Operator::Loop:
        for (std::size_t x = 0; x < n; ++x) {
          if (in1[x]) continue;
          dev += start_[x] + end_[x];
          std::uint64_t out = 0, in = 0;
          for (std::size_t y = 0; y < n; ++y) {
            if (!in1[y]) continue;
            out += f(x, y);
            in += f(y, x);
          }
          missing += (out == 0) + (in == 0);
        }
        break;
    }
    return static_cast<double>(dev) + sup * mean_edge_ * static_cast<double>(missing);
  }

  std::uint64_t freq(std::size_t x, std::size_t y) const { return freq_[x * labels_.size() + y]; }
  std::uint64_t start(std::size_t x) const { return start_[x]; }
  std::uint64_t end(std::size_t x) const { return end_[x]; }
  double mean_edge() const { return mean_edge_; }

 private:
  std::vector<Label> labels_;
  std::map<Label, std::size_t> index_;
  std::vector<std::uint64_t> freq_;
  std::vector<std::uint64_t> start_;
  std::vector<std::uint64_t> end_;
  double mean_edge_ = 0.0;
};

// Sides: 1 = sigma1 (sequence first part / loop body), 2 = sigma2.
bool forbidden(Template t, Operator op, int side_a, int side_b) {
  switch (t) {
    case Template::Existence: return op == Operator::Xor || (op == Operator::Loop && side_a == 2);
    case Template::AtMost: return op == Operator::Loop;
    default: break;
  }
  if (side_a == side_b) {
    // Two loop iterations place a and b in one trace, a before b.
    return op == Operator::Loop && (t == Template::NotCoExistence || t == Template::NotSuccession);
  }
  switch (t) {
    case Template::Response:
      switch (op) {
        case Operator::Xor:
        case Operator::Parallel: return true;
        case Operator::Sequence: return side_a == 2;
        case Operator::Loop: return side_a == 1;
      }
      break;
    case Template::Precedence:
      switch (op) {
        case Operator::Xor:
        case Operator::Parallel: return true;
        case Operator::Sequence: return side_b == 1;
        case Operator::Loop: return side_b == 1;
      }
      break;
    case Template::CoExistence: return op == Operator::Xor || op == Operator::Loop;
    case Template::NotCoExistence: return op != Operator::Xor;
    case Template::NotSuccession:
      switch (op) {
        case Operator::Xor: return false;
        case Operator::Sequence: return side_a == 1;
        case Operator::Parallel:
        case Operator::Loop: return true;
      }
      break;
    case Template::RespondedExistence: return op == Operator::Xor || (op == Operator::Loop && side_a == 1);
    default: break;
  }
  return false;
}

struct CompiledRule {
  Template t;
  std::size_t a;
  std::optional<std::size_t> b;
};

std::vector<CompiledRule> compile(const std::vector<DeclareRule>& rules, const CostModel& model) {
  std::vector<CompiledRule> out;
  for (const auto& rule : rules) {
    const auto a = model.index(rule.a());
    if (!a) continue;
    std::optional<std::size_t> b;
    if (!rule.is_unary()) {
      b = model.index(rule.b());
      if (!b) continue;
    }
    out.push_back({rule.kind(), *a, b});
  }
  return out;
}

bool survives(const Candidate& c, const std::vector<CompiledRule>& rules) {
  for (const auto& r : rules) {
    const int side_a = c.in1[r.a] ? 1 : 2;
    const int side_b = r.b ? (c.in1[*r.b] ? 1 : 2) : side_a;
    if (forbidden(r.t, c.op, side_a, side_b)) return false;
  }
  return true;
}

struct Selection {
  std::size_t index;
  double cost;
};

std::optional<Selection> select_candidate(const std::vector<Candidate>& candidates, const CostModel& model,
                                          const std::vector<CompiledRule>& rules, double sup, std::size_t workers) {
  std::vector<double> costs(candidates.size());
  std::vector<char> alive(candidates.size(), 0);
  auto score = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      if (!survives(candidates[i], rules)) continue;
      alive[i] = 1;
      costs[i] = model.cost(candidates[i].op, candidates[i].in1, sup);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, candidates.size()));
  if (workers == 1) {
    score(0, candidates.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (candidates.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(candidates.size(), begin + chunk);
      if (begin < end) pool.emplace_back(score, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  // Total order: cost, operator, sigma1. Sequential so the winner is schedule-independent.
  std::optional<Selection> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!alive[i]) continue;
    if (!best || costs[i] < best->cost ||
        (costs[i] == best->cost && candidate_less(candidates[i], candidates[best->index])))
      best = Selection{i, costs[i]};
  }
  return best;
}

Cut to_cut(const Candidate& c, const std::vector<Label>& labels) {
  Cut cut;
  cut.op = c.op;
  for (std::size_t i = 0; i < labels.size(); ++i) (c.in1[i] ? cut.sigma1 : cut.sigma2).insert(labels[i]);
  return cut;
}

Candidate from_cut(const Cut& cut, const CostModel& model) {
  require_partition(cut, LabelSet(model.labels().begin(), model.labels().end()));
  Candidate c{cut.op, Membership(model.size(), 0)};
  for (const auto& label : cut.sigma1) c.in1[*model.index(label)] = 1;
  return c;
}

// Connected components of an undirected graph given as adjacency predicate.
std::vector<Membership> components(std::size_t n, const std::vector<char>& active,
                                   const std::function<bool(std::size_t, std::size_t)>& linked) {
  std::vector<int> comp(n, -1);
  std::vector<Membership> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (!active[s] || comp[s] >= 0) continue;
    Membership m(n, 0);
    std::vector<std::size_t> stack{s};
    comp[s] = static_cast<int>(out.size());
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      m[x] = 1;
      for (std::size_t y = 0; y < n; ++y) {
        if (!active[y] || comp[y] >= 0 || !linked(x, y)) continue;
        comp[y] = comp[s];
        stack.push_back(y);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

// Unions of groups: all of them when few, otherwise each group on its own.
void add_unions(const std::vector<Membership>& groups, std::size_t n, std::set<Membership>& out) {
  if (groups.size() < 2) return;
  if (groups.size() <= 10) {
    const std::size_t k = groups.size();
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << k); ++mask) {
      Membership m(n, 0);
      for (std::size_t g = 0; g < k; ++g)
        if (mask >> g & 1)
          for (std::size_t i = 0; i < n; ++i) m[i] |= groups[g][i];
      out.insert(std::move(m));
    }
  } else {
    for (const auto& g : groups) out.insert(g);
  }
}

// Strongly connected components in reverse topological order (Tarjan).
std::vector<std::vector<std::size_t>> strongly_connected(std::size_t n,
                                                         const std::function<bool(std::size_t, std::size_t)>& edge) {
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> sccs;
  int counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (std::size_t w = 0; w < n; ++w) {
      if (!edge(v, w)) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> scc;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        scc.push_back(w);
      } while (w != v);
      sccs.push_back(std::move(scc));
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return sccs;
}

std::set<Membership> guided_partitions(const CostModel& model) {
  const std::size_t n = model.size();
  std::set<Membership> parts;
  for (std::size_t i = 0; i < n; ++i) {
    Membership m(n, 0);
    m[i] = 1;
    parts.insert(complement(m));
    parts.insert(std::move(m));
  }
  const std::vector<char> all(n, 1);
  for (double theta : {0.0, 0.05, 0.1, 0.25, 0.5, 1.0}) {
    const double cutoff = theta * model.mean_edge();
    auto strong = [&](std::size_t x, std::size_t y) { return x != y && model.freq(x, y) > cutoff; };

    add_unions(components(n, all, [&](std::size_t x, std::size_t y) { return strong(x, y) || strong(y, x); }), n,
               parts);
    add_unions(components(n, all, [&](std::size_t x, std::size_t y) { return x != y && !(strong(x, y) && strong(y, x)); }),
               n, parts);

    // Sequence: prefixes of a topological order of the SCC condensation.
    auto sccs = strongly_connected(n, strong);
    std::reverse(sccs.begin(), sccs.end());
    Membership prefix(n, 0);
    for (std::size_t k = 0; k + 1 < sccs.size(); ++k) {
      for (std::size_t v : sccs[k]) prefix[v] = 1;
      parts.insert(prefix);
    }
    // Each SCC with everything that reaches it.
    for (const auto& scc : sccs) {
      Membership reach(n, 0);
      std::vector<std::size_t> stack(scc.begin(), scc.end());
      for (std::size_t v : scc) reach[v] = 1;
      while (!stack.empty()) {
        const std::size_t y = stack.back();
        stack.pop_back();
        for (std::size_t x = 0; x < n; ++x)
          if (!reach[x] && strong(x, y)) {
            reach[x] = 1;
            stack.push_back(x);
          }
      }
      if (count_sigma1(reach) < n) parts.insert(std::move(reach));
    }

    // Loop: redo candidates among activities that neither start nor end traces.
    std::vector<char> inner(n, 0);
    bool any_inner = false;
    for (std::size_t x = 0; x < n; ++x) {
      inner[x] = model.start(x) == 0 && model.end(x) == 0;
      any_inner |= inner[x] != 0;
    }
    if (any_inner) {
      Membership body(n, 0);
      for (std::size_t x = 0; x < n; ++x) body[x] = !inner[x];
      if (count_sigma1(body) > 0) parts.insert(body);
      for (const auto& redo : components(n, inner, [&](std::size_t x, std::size_t y) {
             return strong(x, y) || strong(y, x);
           }))
        parts.insert(complement(redo));
    }
  }
  std::erase_if(parts, [n](const Membership& m) {
    const std::size_t k = count_sigma1(m);
    return k == 0 || k == n;
  });
  return parts;
}

std::vector<Candidate> candidates_for(const CostModel& model, std::size_t exhaustive_limit) {
  const std::size_t n = model.size();
  if (n < 2) throw Error(ErrorKind::AlphabetTooSmall, "cuts need at least two activities");
  std::vector<Membership> parts;
  if (n <= exhaustive_limit && n < 63) {
    const std::uint64_t limit = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t mask = 1; mask < limit; ++mask) {
      Membership m(n, 0);
      for (std::size_t i = 0; i < n; ++i) m[i] = (mask >> i) & 1;
      parts.push_back(std::move(m));
    }
  } else {
    const auto guided = guided_partitions(model);
    parts.assign(guided.begin(), guided.end());
  }
  std::set<Membership> symmetric;
  for (const auto& m : parts) symmetric.insert(canonical_symmetric(m));

  std::vector<Candidate> out;
  out.reserve(parts.size() * 2 + symmetric.size() * 2);
  for (const auto& m : parts) out.push_back({Operator::Sequence, m});
  for (const auto& m : symmetric) out.push_back({Operator::Xor, m});
  for (const auto& m : symmetric) out.push_back({Operator::Parallel, m});
  for (const auto& m : parts) out.push_back({Operator::Loop, m});
  std::sort(out.begin(), out.end(), candidate_less);
  return out;
}

class Discoverer {
 public:
  explicit Discoverer(const DiscoveryParams& params) : params_(params) {
    if (!(params.sup >= 0.0 && params.sup <= 1.0)) throw Error(ErrorKind::InvalidArgument, "sup must lie in [0, 1]");
  }

  ProcessTree run(const EventLog& log, const LabelSet& alphabet, const std::vector<DeclareRule>& rules,
                  std::size_t depth) {
    if (depth > params_.max_depth)
      throw Error(ErrorKind::DepthLimitExceeded, "recursion deeper than " + std::to_string(params_.max_depth));
    if (alphabet.empty()) {
      note(depth, alphabet, "empty alphabet");
      return ProcessTree::silent();
    }
    const auto scoped = rules_in_scope(rules, alphabet);
    if (alphabet.size() == 1) return base_case(log, *alphabet.begin(), scoped, depth);

    const std::uint64_t empties = log.empty_traces();
    EventLog::VariantMap nonempty = log.variants();
    nonempty.erase(Trace{});
    const EventLog cleaned(std::move(nonempty));

    Dfg dfg = build_dfg(cleaned);
    dfg.alphabet = alphabet;
    const CostModel model(dfg);
    const auto candidates = candidates_for(model, params_.exhaustive_limit);
    const auto selection = select_candidate(candidates, model, compile(scoped, model), params_.sup, params_.workers);

    ProcessTree result;
    if (!selection) {
      note(depth, alphabet, "fall-through: flower model");
      result = flower_model(alphabet);
    } else {
      const Cut cut = to_cut(candidates[selection->index], model.labels());
      steps_.push_back(DiscoveryStep{depth, alphabet, cut, selection->cost, {}});
      auto [left_log, right_log] = split_log(cleaned, cut, alphabet);
      auto [left_rules, right_rules] = pass_down_rules(scoped, cut, params_.strict_discharge);
      ProcessTree left = run(left_log, cut.sigma1, left_rules, depth + 1);
      ProcessTree right = run(right_log, cut.sigma2, right_rules, depth + 1);
      result = ProcessTree::node(cut.op, {std::move(left), std::move(right)});
    }
    if (empties > 0) result = ProcessTree::node(Operator::Xor, {ProcessTree::silent(), std::move(result)});
    return result;
  }

  std::vector<DiscoveryStep> take_steps() { return std::move(steps_); }

 private:
  ProcessTree base_case(const EventLog& log, const Label& a, const std::vector<DeclareRule>& rules,
                        std::size_t depth) {
    bool observed = false;
    bool repeated = false;
    const bool has_empty = log.empty_traces() > 0;
    for (const auto& [trace, count] : log.variants()) {
      observed |= !trace.empty();
      repeated |= trace.size() > 1;
    }
    const bool at_most = std::any_of(rules.begin(), rules.end(),
                                     [](const DeclareRule& r) { return r.kind() == Template::AtMost; });
    auto optional_a = [&] { return ProcessTree::node(Operator::Xor, {ProcessTree::silent(), ProcessTree::activity(a)}); };
    if (!observed) {
      note(depth, {a}, "unobserved activity");
      return optional_a();
    }
    if (repeated) {
      if (at_most) {
        note(depth, {a}, "repetitions under at-most");
        return optional_a();
      }
      note(depth, {a}, "repeated activity");
      ProcessTree loop = ProcessTree::node(Operator::Loop, {ProcessTree::activity(a), ProcessTree::silent()});
      if (has_empty) return ProcessTree::node(Operator::Xor, {ProcessTree::silent(), std::move(loop)});
      return loop;
    }
    if (has_empty) {
      note(depth, {a}, "optional activity");
      return optional_a();
    }
    note(depth, {a}, "single activity");
    return ProcessTree::activity(a);
  }

  void note(std::size_t depth, LabelSet alphabet, std::string what) {
    steps_.push_back(DiscoveryStep{depth, std::move(alphabet), std::nullopt, 0.0, std::move(what)});
  }

  const DiscoveryParams& params_;
  std::vector<DiscoveryStep> steps_;
};

}  // namespace

std::vector<Cut> enumerate_cuts(const Dfg& dfg, std::size_t exhaustive_limit) {
  const CostModel model(dfg);
  std::vector<Cut> out;
  for (const auto& c : candidates_for(model, exhaustive_limit)) out.push_back(to_cut(c, model.labels()));
  return out;
}

bool forces_violation(const DeclareRule& rule, const Cut& cut) {
  auto side = [&](const Label& label) {
    if (cut.sigma1.count(label)) return 1;
    if (cut.sigma2.count(label)) return 2;
    throw Error(ErrorKind::LabelNotInScope, "'" + label + "' is on neither side of " + to_string(cut));
  };
  const int side_a = side(rule.a());
  const int side_b = rule.is_unary() ? side_a : side(rule.b());
  return forbidden(rule.kind(), cut.op, side_a, side_b);
}

double cut_cost(const Cut& cut, const Dfg& dfg, double sup) {
  const CostModel model(dfg);
  return model.cost(cut.op, from_cut(cut, model).in1, sup);
}

std::vector<DeclareRule> rules_in_scope(const std::vector<DeclareRule>& rules, const LabelSet& alphabet) {
  std::vector<DeclareRule> out;
  for (const auto& rule : rules) {
    const auto& args = rule.args();
    if (std::all_of(args.begin(), args.end(), [&](const Label& l) { return alphabet.count(l) > 0; }))
      out.push_back(rule);
  }
  return out;
}

std::optional<Cut> select_cut(const std::vector<Cut>& candidates, const Dfg& dfg,
                              const std::vector<DeclareRule>& rules, double sup, std::size_t workers) {
  const CostModel model(dfg);
  std::vector<Candidate> compiled;
  compiled.reserve(candidates.size());
  for (const auto& cut : candidates) compiled.push_back(from_cut(cut, model));
  const auto selection =
      select_candidate(compiled, model, compile(rules_in_scope(rules, dfg.alphabet), model), sup, workers);
  if (!selection) return std::nullopt;
  return candidates[selection->index];
}

std::pair<std::vector<DeclareRule>, std::vector<DeclareRule>> pass_down_rules(const std::vector<DeclareRule>& rules,
                                                                               const Cut& cut,
                                                                               bool strict_discharge) {
  std::vector<DeclareRule> left, right;
  auto add_unique = [](std::vector<DeclareRule>& into, DeclareRule rule) {
    if (std::find(into.begin(), into.end(), rule) == into.end()) into.push_back(std::move(rule));
  };
  for (const auto& rule : rules) {
    const bool a_left = cut.sigma1.count(rule.a()) > 0;
    const bool a_right = cut.sigma2.count(rule.a()) > 0;
    if (!a_left && !a_right) continue;
    if (rule.is_unary()) {
      add_unique(a_left ? left : right, rule);
      continue;
    }
    const bool b_left = cut.sigma1.count(rule.b()) > 0;
    const bool b_right = cut.sigma2.count(rule.b()) > 0;
    if (!b_left && !b_right) continue;
    if (a_left == b_left) {
      add_unique(a_left ? left : right, rule);
      continue;
    }
    if (strict_discharge && cut.op == Operator::Sequence && a_left && b_right) {
      if (rule.kind() == Template::Response) add_unique(right, DeclareRule::unary(Template::Existence, rule.b()));
      if (rule.kind() == Template::Precedence) add_unique(left, DeclareRule::unary(Template::Existence, rule.a()));
    }
  }
  return {std::move(left), std::move(right)};
}

ProcessTree flower_model(const LabelSet& labels) {
  std::vector<ProcessTree> leaves;
  for (const auto& label : labels) leaves.push_back(ProcessTree::activity(label));
  ProcessTree choice = leaves.size() == 1 ? std::move(leaves.front()) : ProcessTree::node(Operator::Xor, std::move(leaves));
  return ProcessTree::node(Operator::Loop, {std::move(choice), ProcessTree::silent()});
}

ProcessTree discover(const EventLog& log, const std::vector<DeclareRule>& rules, const DiscoveryParams& params) {
  return discover_with_steps(log, rules, params).tree;
}

DiscoveryResult discover_with_steps(const EventLog& log, const std::vector<DeclareRule>& rules,
                                    const DiscoveryParams& params) {
  Discoverer discoverer(params);
  ProcessTree tree = discoverer.run(log, log.alphabet(), rules, 0);
  return DiscoveryResult{normalize(std::move(tree)), discoverer.take_steps()};
}

}  // namespace kdisc
