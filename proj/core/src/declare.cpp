#include "kdisc/declare.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t occurrences(const Trace& trace, const Label& label) {
  return static_cast<std::size_t>(std::count(trace.begin(), trace.end(), label));
}

template <typename Pred>
double weighted_fraction(const EventLog& log, Pred pred) {
  std::uint64_t hits = 0;
  for (const auto& [trace, count] : log.variants())
    if (pred(trace)) hits += count;
  return static_cast<double>(hits) / static_cast<double>(log.total_traces());
}

bool activated(const DeclareRule& rule, const Trace& trace) {
  switch (rule.kind()) {
    case Template::AtMost:
    case Template::Existence: return true;
    case Template::Precedence: return occurrences(trace, rule.b()) > 0;
    case Template::CoExistence: return occurrences(trace, rule.a()) > 0 || occurrences(trace, rule.b()) > 0;
    case Template::Response:
    case Template::NotCoExistence:
    case Template::NotSuccession:
    case Template::RespondedExistence: return occurrences(trace, rule.a()) > 0;
  }
  return true;
}

}  // namespace

std::string_view template_name(Template t) {
  switch (t) {
    case Template::AtMost: return "at-most";
    case Template::Existence: return "existence";
    case Template::Response: return "response";
    case Template::Precedence: return "precedence";
    case Template::CoExistence: return "co-existence";
    case Template::NotCoExistence: return "not-co-existence";
    case Template::NotSuccession: return "not-succession";
    case Template::RespondedExistence: return "responded-existence";
  }
  return "?";
}

std::optional<Template> template_from_name(std::string_view name) {
  for (Template t : kAllTemplates)
    if (template_name(t) == name) return t;
  return std::nullopt;
}

std::size_t arity(Template t) { return (t == Template::AtMost || t == Template::Existence) ? 1 : 2; }

std::string_view template_semantics(Template t) {
  switch (t) {
    case Template::AtMost: return "a occurs at most once.";
    case Template::Existence: return "a occurs at least once.";
    case Template::Response: return "If a occurs, then b occurs after a.";
    case Template::Precedence: return "b occurs only if preceded by a.";
    case Template::CoExistence: return "a and b occur together.";
    case Template::NotCoExistence: return "a and b never occur together.";
    case Template::NotSuccession: return "b cannot occur after a.";
    case Template::RespondedExistence: return "If a occurs in the trace, then b occurs as well.";
  }
  return "";
}

DeclareRule::DeclareRule(Template t, std::vector<Label> args) : template_(t), args_(std::move(args)) {
  if (args_.size() != arity(t))
    throw Error(ErrorKind::ArityMismatch, std::string(template_name(t)) + " takes " + std::to_string(arity(t)) +
                                              " activit" + (arity(t) == 1 ? "y" : "ies") + ", got " +
                                              std::to_string(args_.size()));
  if (args_.size() == 2 && args_[0] == args_[1])
    throw Error(ErrorKind::IdenticalArguments,
                std::string(template_name(t)) + " needs two different activities, got '" + args_[0] + "' twice");
}

std::string format_rule(const DeclareRule& rule) {
  std::string out(template_name(rule.kind()));
  out += '(';
  out += rule.a();
  if (!rule.is_unary()) {
    out += ", ";
    out += rule.b();
  }
  out += ')';
  return out;
}

std::string format_rules(const std::vector<DeclareRule>& rules) {
  std::string out;
  for (const auto& rule : rules) {
    out += format_rule(rule);
    out += '\n';
  }
  return out;
}

bool check_trace(const DeclareRule& rule, const Trace& trace) {
  const Label& a = rule.a();
  switch (rule.kind()) {
    case Template::AtMost: return occurrences(trace, a) <= 1;
    case Template::Existence: return occurrences(trace, a) >= 1;
    case Template::Response: {
      // the last a must be followed by some b
      bool pending = false;
      for (const auto& label : trace) {
        if (label == a) pending = true;
        else if (label == rule.b()) pending = false;
      }
      return !pending;
    }
    case Template::Precedence: {
      for (const auto& label : trace) {
        if (label == a) return true;
        if (label == rule.b()) return false;
      }
      return true;
    }
    case Template::CoExistence: return (occurrences(trace, a) > 0) == (occurrences(trace, rule.b()) > 0);
    case Template::NotCoExistence: return !(occurrences(trace, a) > 0 && occurrences(trace, rule.b()) > 0);
    case Template::NotSuccession: {
      bool seen_a = false;
      for (const auto& label : trace) {
        if (label == a) seen_a = true;
        else if (label == rule.b() && seen_a) return false;
      }
      return true;
    }
    case Template::RespondedExistence: return occurrences(trace, a) == 0 || occurrences(trace, rule.b()) > 0;
  }
  return true;
}

double confidence(const DeclareRule& rule, const EventLog& log) {
  if (log.total_traces() == 0) throw Error(ErrorKind::EmptyLog, "confidence needs at least one trace");
  return weighted_fraction(log, [&](const Trace& t) { return check_trace(rule, t); });
}

double activation_confidence(const DeclareRule& rule, const EventLog& log) {
  if (log.total_traces() == 0) throw Error(ErrorKind::EmptyLog, "confidence needs at least one trace");
  std::uint64_t active = 0;
  std::uint64_t satisfied = 0;
  for (const auto& [trace, count] : log.variants()) {
    if (!activated(rule, trace)) continue;
    active += count;
    if (check_trace(rule, trace)) satisfied += count;
  }
  return active == 0 ? 1.0 : static_cast<double>(satisfied) / static_cast<double>(active);
}

std::vector<DeclareRule> mine_rules(const EventLog& log, double min_confidence) {
  if (!(min_confidence > 0.0 && min_confidence <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "min_confidence must lie in (0, 1]");
  if (log.total_traces() == 0) throw Error(ErrorKind::EmptyLog, "cannot mine rules from an empty log");
  // Compare hit counts rather than ratios so min_confidence = 1 means "no violation".
  const auto total = static_cast<double>(log.total_traces());
  std::vector<DeclareRule> mined;
  auto consider = [&](DeclareRule rule) {
    std::uint64_t hits = 0;
    for (const auto& [trace, count] : log.variants())
      if (check_trace(rule, trace)) hits += count;
    if (static_cast<double>(hits) >= min_confidence * total - 1e-9 * total) mined.push_back(std::move(rule));
  };
  for (Template t : kAllTemplates) {
    for (const auto& a : log.alphabet()) {
      if (arity(t) == 1) {
        consider(DeclareRule::unary(t, a));
        continue;
      }
      for (const auto& b : log.alphabet())
        if (a != b) consider(DeclareRule::binary(t, a, b));
    }
  }
  return mined;
}

DeclareRule parse_rule(std::string_view text) {
  const std::string_view line = trim(text);
  const auto open = line.find('(');
  if (line.empty() || open == std::string_view::npos || line.back() != ')')
    throw Error(ErrorKind::MalformedLine, "expected template(arg) or template(arg1, arg2): '" + std::string(line) + "'");
  const std::string_view name = trim(line.substr(0, open));
  const auto t = template_from_name(name);
  if (!t) throw Error(ErrorKind::UnknownTemplate, "unknown template '" + std::string(name) + "'");
  const std::string_view inner = line.substr(open + 1, line.size() - open - 2);
  if (inner.find_first_of("()") != std::string_view::npos)
    throw Error(ErrorKind::MalformedLine, "nested parentheses in '" + std::string(line) + "'");
  std::vector<Label> args;
  std::string_view rest = inner;
  while (true) {
    const auto comma = rest.find(',');
    const std::string_view arg = trim(rest.substr(0, comma));
    if (arg.empty()) throw Error(ErrorKind::MalformedLine, "empty activity label in '" + std::string(line) + "'");
    args.emplace_back(arg);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return DeclareRule(*t, std::move(args));
}

std::vector<DeclareRule> parse_rules(std::istream& in) {
  std::vector<DeclareRule> rules;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    try {
      rules.push_back(parse_rule(line));
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return rules;
}

std::vector<DeclareRule> parse_rules(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_rules(in);
}

LenientParse parse_rules_lenient(std::string_view text) {
  LenientParse out;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t ordinal = 0;
  auto take = [&](std::string_view segment) {
    segment = trim(segment);
    // LLMs like bullets and trailing punctuation.
    if (!segment.empty() && (segment.front() == '-' || segment.front() == '*')) segment = trim(segment.substr(1));
    if (!segment.empty() && segment.back() == '.') segment = trim(segment.substr(0, segment.size() - 1));
    if (segment.empty()) return;
    ++ordinal;
    try {
      out.rules.push_back(parse_rule(segment));
      out.lines.emplace_back(segment);
    } catch (const Error& e) {
      ValidationItem item;
      item.index = ordinal - 1;
      item.severity = Severity::Error;
      item.kind = std::string(to_string(e.kind()));
      item.message = e.what();
      item.line = std::string(segment);
      out.report.items.push_back(std::move(item));
    }
  };
  while (std::getline(in, raw)) {
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    // Several rules may share a line, separated by ',' or ';' outside parentheses.
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '(') ++depth;
      else if (line[i] == ')') depth = std::max(0, depth - 1);
      else if (depth == 0 && (line[i] == ',' || line[i] == ';')) {
        take(line.substr(start, i - start));
        start = i + 1;
      }
    }
    take(line.substr(start));
  }
  return out;
}

bool ValidationReport::passed() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const auto& i) { return i.severity == Severity::Error; }));
}

std::size_t ValidationReport::warning_count() const { return items.size() - error_count(); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::optional<Label> nearest_label(const Label& label, const LabelSet& alphabet, std::size_t max_distance) {
  std::optional<Label> best;
  std::size_t best_distance = max_distance + 1;
  for (const auto& candidate : alphabet) {
    const std::size_t d = edit_distance(label, candidate);
    if (d < best_distance) {
      best_distance = d;
      best = candidate;
    }
  }
  return best;
}

ValidationReport validate_rules(const std::vector<DeclareRule>& rules, const LabelSet& alphabet) {
  ValidationReport report;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    for (const auto& label : rules[i].args()) {
      if (alphabet.count(label)) continue;
      ValidationItem item;
      item.index = i;
      item.kind = "UnknownActivity";
      item.message = "'" + label + "' is not an activity of the event log";
      item.suggestion = nearest_label(label, alphabet);
      if (item.suggestion) item.message += "; did you mean '" + *item.suggestion + "'?";
      item.line = format_rule(rules[i]);
      report.items.push_back(std::move(item));
    }
  }

  auto warn = [&](std::size_t index, std::string kind, std::string message) {
    ValidationItem item;
    item.index = index;
    item.severity = Severity::Warning;
    item.kind = std::move(kind);
    item.message = std::move(message);
    item.line = format_rule(rules[index]);
    report.items.push_back(std::move(item));
  };

  std::set<DeclareRule> seen;
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (!seen.insert(rules[i]).second) warn(i, "DuplicateRule", "rule listed more than once");

  auto unordered = [](const DeclareRule& r) { return std::minmax(r.a(), r.b()); };
  auto has_existence = [&](const Label& l) { return seen.count(DeclareRule::unary(Template::Existence, l)) > 0; };
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (r.kind() != Template::NotCoExistence) continue;
    for (std::size_t j = 0; j < rules.size(); ++j) {
      if (rules[j].kind() == Template::CoExistence && unordered(rules[j]) == unordered(r))
        warn(i, "ContradictoryPair", "contradicts " + format_rule(rules[j]));
    }
    if (has_existence(r.a()) && has_existence(r.b()))
      warn(i, "ContradictoryPair", "both activities are required by existence rules but may never occur together");
  }
  return report;
}

namespace {
std::string_view severity_name(Severity s) { return s == Severity::Error ? "error" : "warning"; }
}  // namespace

void to_json(nlohmann::json& j, const ValidationItem& item) {
  j = nlohmann::json{{"index", item.index},
                     {"severity", severity_name(item.severity)},
                     {"kind", item.kind},
                     {"message", item.message},
                     {"suggestion", item.suggestion ? nlohmann::json(*item.suggestion) : nlohmann::json(nullptr)},
                     {"line", item.line}};
}

void from_json(const nlohmann::json& j, ValidationItem& item) {
  item.index = j.at("index").get<std::size_t>();
  item.severity = j.at("severity").get<std::string>() == "error" ? Severity::Error : Severity::Warning;
  item.kind = j.at("kind").get<std::string>();
  item.message = j.at("message").get<std::string>();
  item.suggestion.reset();
  if (j.contains("suggestion") && !j["suggestion"].is_null()) item.suggestion = j["suggestion"].get<std::string>();
  item.line = j.value("line", "");
}

void to_json(nlohmann::json& j, const ValidationReport& report) {
  j = nlohmann::json{{"verdict", report.passed() ? "pass" : "fail"}, {"items", report.items}};
}

void from_json(const nlohmann::json& j, ValidationReport& report) {
  report.items = j.at("items").get<std::vector<ValidationItem>>();
}

}  // namespace kdisc
