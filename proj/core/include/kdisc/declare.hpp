#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/event_log.hpp"

namespace kdisc {

// Declaration order is the canonical template order (mining output, catalog).
enum class Template {
  AtMost,
  Existence,
  Response,
  Precedence,
  CoExistence,
  NotCoExistence,
  NotSuccession,
  RespondedExistence,
};

inline constexpr std::array<Template, 8> kAllTemplates = {
    Template::AtMost,        Template::Existence,      Template::Response,      Template::Precedence,
    Template::CoExistence,   Template::NotCoExistence, Template::NotSuccession, Template::RespondedExistence,
};

std::string_view template_name(Template t);
std::optional<Template> template_from_name(std::string_view name);
std::size_t arity(Template t);
// Natural-language semantics with placeholders a and b.
std::string_view template_semantics(Template t);

class DeclareRule {
 public:
  /// Throws ArityMismatch or IdenticalArguments when the invariants fail.
  DeclareRule(Template t, std::vector<Label> args);

  static DeclareRule unary(Template t, Label a) { return DeclareRule(t, {std::move(a)}); }
  static DeclareRule binary(Template t, Label a, Label b) { return DeclareRule(t, {std::move(a), std::move(b)}); }

  Template kind() const noexcept { return template_; }
  const std::vector<Label>& args() const noexcept { return args_; }
  const Label& a() const { return args_[0]; }
  const Label& b() const { return args_.at(1); }
  bool is_unary() const noexcept { return args_.size() == 1; }

  auto operator<=>(const DeclareRule&) const = default;

 private:
  Template template_;
  std::vector<Label> args_;
};

std::string format_rule(const DeclareRule& rule);
std::string format_rules(const std::vector<DeclareRule>& rules);

bool check_trace(const DeclareRule& rule, const Trace& trace);

/// Trace-weighted fraction of traces satisfying the rule (vacuous satisfaction
/// counts). Throws EmptyLog.
double confidence(const DeclareRule& rule, const EventLog& log);
/// Fraction of satisfying traces among traces that activate the rule. Returns
/// 1 when no trace activates it. Throws EmptyLog.
double activation_confidence(const DeclareRule& rule, const EventLog& log);

/// All rules over the log alphabet with confidence >= min_confidence, ordered
/// by template then label order. Throws EmptyLog or InvalidArgument.
std::vector<DeclareRule> mine_rules(const EventLog& log, double min_confidence);

/// Strict parser: throws UnknownTemplate, ArityMismatch, MalformedLine or
/// IdenticalArguments with the 1-based line number.
std::vector<DeclareRule> parse_rules(std::istream& in);
std::vector<DeclareRule> parse_rules(std::string_view text);

/// Parses a single rule (no comments, no trailing separators).
DeclareRule parse_rule(std::string_view text);

enum class Severity { Error, Warning };

struct ValidationItem {
  std::size_t index = 0;  // rule index, or line index for parse problems
  Severity severity = Severity::Error;
  std::string kind;
  std::string message;
  std::optional<Label> suggestion;  // only for UnknownActivity
  std::string line;                 // offending rule text, when known

  bool operator==(const ValidationItem&) const = default;
};

struct ValidationReport {
  std::vector<ValidationItem> items;

  bool passed() const;
  std::size_t error_count() const;
  std::size_t warning_count() const;
  bool operator==(const ValidationReport&) const = default;
};

/// Rules parsed leniently: every line that parses becomes a rule, every other
/// line becomes an error item in `report`. Used for LLM output.
struct LenientParse {
  std::vector<DeclareRule> rules;
  std::vector<std::string> lines;  // source text of each rule
  ValidationReport report;
};
LenientParse parse_rules_lenient(std::string_view text);

std::size_t edit_distance(std::string_view a, std::string_view b);

/// Nearest alphabet label with edit distance <= max_distance; ties go to the
/// label that sorts first.
std::optional<Label> nearest_label(const Label& label, const LabelSet& alphabet, std::size_t max_distance = 3);

ValidationReport validate_rules(const std::vector<DeclareRule>& rules, const LabelSet& alphabet);

void to_json(nlohmann::json& j, const ValidationItem& item);
void from_json(const nlohmann::json& j, ValidationItem& item);
void to_json(nlohmann::json& j, const ValidationReport& report);
void from_json(const nlohmann::json& j, ValidationReport& report);

}  // namespace kdisc
