#include "kdisc/session.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace kdisc {

namespace {

std::string_view trim_view(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::size_t> find_all(std::string_view text, std::string_view needle) {
  std::vector<std::size_t> out;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + needle.size()))
    out.push_back(pos);
  return out;
}

std::optional<std::string> block(std::string_view text, std::string_view open, std::string_view close,
                                 std::string_view kind) {
  const auto opens = find_all(text, open);
  const auto closes = find_all(text, close);
  if (opens.empty() && closes.empty()) return std::nullopt;
  if (opens.size() != closes.size())
    throw Error(ErrorKind::UnbalancedTags, std::string(opens.size() > closes.size() ? open : close) + " without its partner");
  if (opens.size() > 1) throw Error(ErrorKind::MultipleBlocks, std::string(kind) + " block appears " + std::to_string(opens.size()) + " times");
  if (closes[0] < opens[0]) throw Error(ErrorKind::UnbalancedTags, std::string(close) + " before " + std::string(open));
  const auto begin = opens[0] + open.size();
  return std::string(trim_view(text.substr(begin, closes[0] - begin)));
}

ValidationItem tag_item(const Error& e) {
  ValidationItem item;
  item.severity = Severity::Error;
  item.kind = std::string(to_string(e.kind()));
  item.message = e.what();
  return item;
}

void append(ValidationReport& into, const ValidationReport& from) {
  into.items.insert(into.items.end(), from.items.begin(), from.items.end());
}

}  // namespace

TaggedBlocks extract_tagged(std::string_view text) {
  TaggedBlocks out;
  out.rules = block(text, kRulesOpen, kRulesClose, "RULES");
  out.questions = block(text, kQuestionsOpen, kQuestionsClose, "QUESTIONS");
  return out;
}

std::vector<std::string> split_questions(std::string_view block) {
  std::vector<std::string> out;
  std::istringstream in{std::string(block)};
  std::string raw;
  while (std::getline(in, raw)) {
    std::string_view line = trim_view(raw);
    if (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim_view(line.substr(1));
    // "1." / "2)" enumerations
    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')'))
      line = trim_view(line.substr(digits + 1));
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Init: return "init";
    case SessionState::ContextGiven: return "context-given";
    case SessionState::AwaitingAnswers: return "awaiting-answers";
    case SessionState::RulesProposed: return "rules-proposed";
    case SessionState::Repairing: return "repairing";
    case SessionState::Validated: return "validated";
  }
  return "init";
}

SessionState session_state_from_string(std::string_view s) {
  for (auto st : {SessionState::Init, SessionState::ContextGiven, SessionState::AwaitingAnswers,
                  SessionState::RulesProposed, SessionState::Repairing, SessionState::Validated})
    if (to_string(st) == s) return st;
  throw Error(ErrorKind::InvalidArgument, "unknown session state '" + std::string(s) + "'");
}

std::string repair_message(const ValidationReport& report) {
  std::ostringstream out;
  out << "Your last answer could not be used. Problems found:\n";
  for (const auto& item : report.items) {
    if (item.severity != Severity::Error) continue;
    out << "- " << item.kind;
    if (!item.line.empty()) out << " in \"" << item.line << "\"";
    out << ": " << item.message;
    if (item.suggestion && item.message.find(*item.suggestion) == std::string::npos)
      out << " (suggested: " << *item.suggestion << ")";
    out << '\n';
  }
  out << "Reply with the complete corrected list of constraints between " << kRulesOpen << " and " << kRulesClose
      << " and no additional text.";
  return out.str();
}

RefinementSession::RefinementSession(std::string id, std::string log_ref, LabelSet alphabet, std::size_t max_repairs,
                                     PromptBundle bundle)
    : id_(std::move(id)),
      log_ref_(std::move(log_ref)),
      alphabet_(std::move(alphabet)),
      max_repairs_(max_repairs),
      bundle_(std::move(bundle)) {}

std::vector<ChatMessage> RefinementSession::conversation(const std::vector<ChatMessage>& transcript) const {
  auto messages = build_task_prompt(std::vector<Label>(alphabet_.begin(), alphabet_.end()), bundle_);
  messages.insert(messages.end(), transcript.begin(), transcript.end());
  return messages;
}

ProposalOutcome RefinementSession::propose_rules(ChatTransport& transport, const std::string& expert_text) {
  if (state_ != SessionState::Init && state_ != SessionState::ContextGiven && state_ != SessionState::AwaitingAnswers)
    throw Error(ErrorKind::InvalidState, "cannot propose rules in state " + std::string(to_string(state_)));
  const bool additive = state_ == SessionState::AwaitingAnswers && feedback_pending_;
  return run_turn(transport, {ChatMessage{Speaker::Expert, expert_text}}, additive);
}

ProposalOutcome RefinementSession::integrate_feedback(ChatTransport& transport, const std::string& feedback_text) {
  if (state_ != SessionState::Validated || models_.empty())
    throw Error(ErrorKind::InvalidState, "feedback needs a validated rule set and a discovered model");
  std::ostringstream grounding;
  grounding << "Model discovered with the current constraints (process tree):\n" << to_tree_text(models_.back().tree)
            << "\nCurrent constraints:\n";
  for (const auto& r : rules_) grounding << format_rule(r.rule) << (r.enabled ? "" : " (disabled)") << '\n';
  grounding << "Answer the feedback with the additional constraints only.";
  return run_turn(transport,
                  {ChatMessage{Speaker::System, grounding.str()}, ChatMessage{Speaker::Expert, feedback_text}}, true);
}

ProposalOutcome RefinementSession::run_turn(ChatTransport& transport, std::vector<ChatMessage> new_messages,
                                            bool additive) {
  // Everything is staged on copies; members change only once the turn ends.
  auto transcript = transcript_;
  transcript.insert(transcript.end(), new_messages.begin(), new_messages.end());
  std::vector<ValidationReport> reports;
  ProposalOutcome outcome;

  for (std::size_t attempt = 0;; ++attempt) {
    const std::string response = transport.send(conversation(transcript));
    transcript.push_back(ChatMessage{Speaker::Assistant, response});

    ValidationReport report;
    std::vector<DeclareRule> proposed;
    try {
      const auto blocks = extract_tagged(response);
      if (!blocks.rules && blocks.questions && attempt == 0) {
        outcome.questions = split_questions(*blocks.questions);
        transcript_ = std::move(transcript);
        state_ = SessionState::AwaitingAnswers;
        feedback_pending_ = additive;
        return outcome;
      }
      if (!blocks.rules) {
        ValidationItem item;
        item.kind = "MissingRulesBlock";
        item.message = "no " + std::string(kRulesOpen) + " block in the answer";
        report.items.push_back(std::move(item));
      } else {
        auto parsed = parse_rules_lenient(*blocks.rules);
        report = std::move(parsed.report);
        proposed = std::move(parsed.rules);
        std::vector<DeclareRule> combined;
        if (additive)
          for (const auto& r : rules_) combined.push_back(r.rule);
        combined.insert(combined.end(), proposed.begin(), proposed.end());
        append(report, validate_rules(combined, alphabet_));
      }
    } catch (const Error& e) {
      report.items.push_back(tag_item(e));
    }
    reports.push_back(report);

    if (report.passed()) {
      std::vector<SessionRule> next = additive ? rules_ : std::vector<SessionRule>{};
      std::set<DeclareRule> seen;
      for (const auto& r : next) seen.insert(r.rule);
      for (const auto& r : proposed)
        if (seen.insert(r).second) next.push_back(SessionRule{r, true, round_ + 1});
      transcript_ = std::move(transcript);
      history_.insert(history_.end(), reports.begin(), reports.end());
      rules_ = std::move(next);
      ++round_;
      state_ = SessionState::Validated;
      feedback_pending_ = false;
      outcome.rules = std::move(proposed);
      outcome.report = std::move(report);
      outcome.repairs = attempt;
      return outcome;
    }

    if (attempt == max_repairs_) {
      transcript_ = std::move(transcript);
      history_.insert(history_.end(), reports.begin(), reports.end());
      state_ = round_ > 0 ? SessionState::Validated : SessionState::ContextGiven;
      throw RepairExhaustedError("output still invalid after " + std::to_string(max_repairs_) + " repair rounds",
                                 std::move(report));
    }
    transcript.push_back(ChatMessage{Speaker::System, repair_message(report)});
  }
}

const ModelIteration& RefinementSession::record_model(double sup, ProcessTree tree) {
  models_.push_back(ModelIteration{enabled_rules(), sup, std::move(tree)});
  return models_.back();
}

void RefinementSession::set_rule_enabled(std::size_t index, bool enabled) {
  if (index >= rules_.size()) throw Error(ErrorKind::NotFound, "no rule at index " + std::to_string(index));
  rules_[index].enabled = enabled;
}

ValidationReport RefinementSession::replace_rules(std::vector<SessionRule> rules) {
  if (state_ == SessionState::Repairing) throw Error(ErrorKind::InvalidState, "session is repairing");
  std::vector<DeclareRule> plain;
  for (const auto& r : rules) plain.push_back(r.rule);
  auto report = validate_rules(plain, alphabet_);
  history_.push_back(report);
  if (!report.passed()) return report;
  std::set<DeclareRule> seen;
  std::vector<SessionRule> kept;
  for (auto& r : rules)
    if (seen.insert(r.rule).second) kept.push_back(std::move(r));
  rules_ = std::move(kept);
  if (round_ == 0) round_ = 1;
  state_ = SessionState::Validated;
  feedback_pending_ = false;
  return report;
}

std::vector<DeclareRule> RefinementSession::enabled_rules() const {
  std::vector<DeclareRule> out;
  for (const auto& r : rules_)
    if (r.enabled) out.push_back(r.rule);
  return out;
}

nlohmann::json RefinementSession::to_json() const {
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : rules_) rules.push_back({{"rule", format_rule(r.rule)}, {"enabled", r.enabled}, {"round", r.round}});
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : models_) {
    nlohmann::json snapshot = nlohmann::json::array();
    for (const auto& r : m.rules) snapshot.push_back(format_rule(r));
    models.push_back({{"rules", snapshot}, {"sup", m.sup}, {"tree", to_tree_text(m.tree)}});
  }
  return {{"id", id_},
          {"log", log_ref_},
          {"alphabet", alphabet_},
          {"max_repairs", max_repairs_},
          {"state", to_string(state_)},
          {"round", round_},
          {"feedback_pending", feedback_pending_},
          {"transcript", transcript_},
          {"rules", rules},
          {"validation_history", history_},
          {"model_iterations", models}};
}

RefinementSession RefinementSession::from_json(const nlohmann::json& j) {
  RefinementSession s(j.at("id").get<std::string>(), j.at("log").get<std::string>(),
                      j.at("alphabet").get<LabelSet>(), j.value("max_repairs", kDefaultMaxRepairs));
  s.state_ = session_state_from_string(j.at("state").get<std::string>());
  s.round_ = j.value("round", std::size_t{0});
  s.feedback_pending_ = j.value("feedback_pending", false);
  s.transcript_ = j.at("transcript").get<std::vector<ChatMessage>>();
  for (const auto& r : j.at("rules"))
    s.rules_.push_back(SessionRule{parse_rule(r.at("rule").get<std::string>()), r.at("enabled").get<bool>(),
                                   r.value("round", std::size_t{0})});
  s.history_ = j.at("validation_history").get<std::vector<ValidationReport>>();
  for (const auto& m : j.at("model_iterations")) {
    ModelIteration it;
    for (const auto& r : m.at("rules")) it.rules.push_back(parse_rule(r.get<std::string>()));
    it.sup = m.at("sup").get<double>();
    it.tree = parse_tree_text(m.at("tree").get<std::string>());
    s.models_.push_back(std::move(it));
  }
  return s;
}

}  // namespace kdisc
