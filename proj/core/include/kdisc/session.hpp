#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/declare.hpp"
#include "kdisc/error.hpp"
#include "kdisc/process_tree.hpp"
#include "kdisc/prompt.hpp"
#include "kdisc/transport.hpp"

namespace kdisc {

struct TaggedBlocks {
  std::optional<std::string> rules;
  std::optional<std::string> questions;
};

/// Content between the [RULES] and [QUESTIONS] markers. Throws UnbalancedTags
/// or MultipleBlocks.
TaggedBlocks extract_tagged(std::string_view text);

/// Non-empty lines of a questions block, list markers removed.
std::vector<std::string> split_questions(std::string_view block);

enum class SessionState { Init, ContextGiven, AwaitingAnswers, RulesProposed, Repairing, Validated };

std::string_view to_string(SessionState s);
SessionState session_state_from_string(std::string_view s);

struct SessionRule {
  DeclareRule rule;
  bool enabled = true;
  std::size_t round = 0;  // proposal round that introduced the rule
};

struct ModelIteration {
  std::vector<DeclareRule> rules;
  double sup = 0.2;
  ProcessTree tree;
};

struct ProposalOutcome {
  std::vector<std::string> questions;
  std::vector<DeclareRule> rules;  // rules returned this round
  ValidationReport report;
  std::size_t repairs = 0;

  bool asked_questions() const { return !questions.empty(); }
};

/// Thrown when the repair budget is spent; carries the last report.
class RepairExhaustedError : public Error {
 public:
  RepairExhaustedError(const std::string& message, ValidationReport report)
      : Error(ErrorKind::RepairExhausted, message), report_(std::move(report)) {}
  const ValidationReport& report() const noexcept { return report_; }

 private:
  ValidationReport report_;
};

/// Text sent to the LLM after a failed validation.
std::string repair_message(const ValidationReport& report);

class RefinementSession {
 public:
  static constexpr std::size_t kDefaultMaxRepairs = 3;

  RefinementSession(std::string id, std::string log_ref, LabelSet alphabet,
                    std::size_t max_repairs = kDefaultMaxRepairs, PromptBundle bundle = default_bundle());

  /// Business context or answers to the assistant's questions. Context rounds
  /// replace the current rule set; answers to questions raised during a
  /// feedback round extend it.
  ProposalOutcome propose_rules(ChatTransport& transport, const std::string& expert_text);

  /// Feedback on the latest model. Returned rules are added to the current set.
  ProposalOutcome integrate_feedback(ChatTransport& transport, const std::string& feedback_text);

  const ModelIteration& record_model(double sup, ProcessTree tree);

  void set_rule_enabled(std::size_t index, bool enabled);
  /// Manual edit: replaces the rule set when it validates without errors.
  ValidationReport replace_rules(std::vector<SessionRule> rules);

  std::vector<DeclareRule> enabled_rules() const;

  const std::string& id() const noexcept { return id_; }
  const std::string& log_ref() const noexcept { return log_ref_; }
  const LabelSet& alphabet() const noexcept { return alphabet_; }
  SessionState state() const noexcept { return state_; }
  const std::vector<ChatMessage>& transcript() const noexcept { return transcript_; }
  const std::vector<SessionRule>& rules() const noexcept { return rules_; }
  const std::vector<ValidationReport>& validation_history() const noexcept { return history_; }
  const std::vector<ModelIteration>& model_iterations() const noexcept { return models_; }
  std::size_t max_repairs() const noexcept { return max_repairs_; }
  std::size_t round() const noexcept { return round_; }

  nlohmann::json to_json() const;
  static RefinementSession from_json(const nlohmann::json& j);

 private:
  ProposalOutcome run_turn(ChatTransport& transport, std::vector<ChatMessage> new_messages, bool additive);
  std::vector<ChatMessage> conversation(const std::vector<ChatMessage>& transcript) const;

  std::string id_;
  std::string log_ref_;
  LabelSet alphabet_;
  std::size_t max_repairs_;
  PromptBundle bundle_;
  SessionState state_ = SessionState::Init;
  std::vector<ChatMessage> transcript_;
  std::vector<SessionRule> rules_;
  std::vector<ValidationReport> history_;
  std::vector<ModelIteration> models_;
  std::size_t round_ = 0;
  bool feedback_pending_ = false;  // questions raised during a feedback round
};

}  // namespace kdisc
