#include "kdisc/prompt.hpp"

#include <sstream>

#include "kdisc/error.hpp"

namespace kdisc {

std::string_view to_string(Speaker s) {
  switch (s) {
    case Speaker::System: return "system";
    case Speaker::Expert: return "expert";
    case Speaker::Assistant: return "assistant";
  }
  return "expert";
}

Speaker speaker_from_string(std::string_view s) {
  if (s == "system") return Speaker::System;
  if (s == "expert") return Speaker::Expert;
  if (s == "assistant") return Speaker::Assistant;
  throw Error(ErrorKind::InvalidArgument, "unknown speaker '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
  j = nlohmann::json{{"speaker", to_string(m.speaker)}, {"text", m.text}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
  m.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  m.text = j.at("text").get<std::string>();
}

std::vector<CatalogEntry> template_catalog() {
  std::vector<CatalogEntry> out;
  for (Template t : kAllTemplates)
    out.push_back(CatalogEntry{t, std::string(template_name(t)), arity(t), std::string(template_semantics(t))});
  return out;
}

PromptBundle default_bundle() {
  PromptBundle b;
  b.role_statement =
      "You translate what a domain expert says about a business process into declarative constraints "
      "that a process discovery algorithm uses to shape the model it builds from an event log. "
      "You only use the constraint templates listed below and only the activity names listed below. "
      "When the description leaves the behaviour of some activities unclear, ask the expert instead of guessing.";
  b.catalog = template_catalog();
  b.output_contract =
      "Write every constraint on its own line as template(activity) or template(activity, activity), "
      "copying activity names exactly. Put the constraints between [RULES] and [/RULES]. "
      "If you need clarification first, put your numbered questions between [QUESTIONS] and [/QUESTIONS] "
      "and give no constraints in that answer. Do not write any additional text outside the tags.";
  b.few_shots = {
      FewShot{"Every order is registered first. An order is either shipped or refunded, never both, "
              "and shipping always requires that the payment was received beforehand.",
              {"existence(Register order)", "not-co-existence(Ship order, Refund order)",
               "precedence(Receive payment, Ship order)"}},
      FewShot{"Each ticket is closed exactly once. Whenever an escalation happens, a manager review follows.",
              {"existence(Close ticket)", "at-most(Close ticket)", "response(Escalate, Manager review)"}},
  };
  b.negative_examples = {
      NegativeExample{"Sure, here are the rules: response(Pay, Ship)",
                      "text outside the tags and no [RULES] block"},
      NegativeExample{"[RULES]\nsuccession(Pay, Ship)\n[/RULES]", "succession is not one of the supported templates"},
      NegativeExample{"[RULES]\nresponse(Pay)\n[/RULES]", "response needs two activities"},
      NegativeExample{"[RULES]\nexistence(Payment)\n[/RULES]",
                      "Payment is not an activity of the log; use the exact listed name"},
  };
  return b;
}

namespace {

std::string rules_block(const std::vector<std::string>& rules) {
  std::string out(kRulesOpen);
  out += '\n';
  for (const auto& r : rules) out += r + '\n';
  out += kRulesClose;
  return out;
}

}  // namespace

std::vector<ChatMessage> render(const PromptBundle& bundle) {
  std::ostringstream sys;
  sys << bundle.role_statement << "\n\nConstraint templates:\n";
  for (const auto& entry : bundle.catalog) {
    sys << "- " << entry.name << (entry.arity == 1 ? "(a)" : "(a, b)") << ": " << entry.semantics << '\n';
  }
  sys << "\nOutput format:\n" << bundle.output_contract << '\n';
  if (!bundle.negative_examples.empty()) {
    sys << "\nNever answer like this:\n";
    for (const auto& neg : bundle.negative_examples) sys << "---\n" << neg.output << "\n(wrong: " << neg.note << ")\n";
    sys << "---\n";
  }
  if (bundle.activities.empty()) {
    sys << "\nThe expert will name the activities of the process. Use their names verbatim.\n";
  } else {
    sys << "\nActivities of the event log:\n";
    for (const auto& a : bundle.activities) sys << "- " << a << '\n';
  }

  std::vector<ChatMessage> out;
  out.push_back(ChatMessage{Speaker::System, sys.str()});
  for (const auto& shot : bundle.few_shots) {
    out.push_back(ChatMessage{Speaker::Expert, shot.description});
    out.push_back(ChatMessage{Speaker::Assistant, rules_block(shot.rules)});
  }
  return out;
}

std::vector<ChatMessage> build_task_prompt(const std::vector<Label>& activities, PromptBundle bundle) {
  bundle.activities = activities;
  return render(bundle);
}

}  // namespace kdisc
