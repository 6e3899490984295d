#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/declare.hpp"

namespace kdisc {

enum class Speaker { System, Expert, Assistant };

std::string_view to_string(Speaker s);
Speaker speaker_from_string(std::string_view s);

struct ChatMessage {
  Speaker speaker = Speaker::Expert;
  std::string text;

  bool operator==(const ChatMessage&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);

inline constexpr std::string_view kRulesOpen = "[RULES]";
inline constexpr std::string_view kRulesClose = "[/RULES]";
inline constexpr std::string_view kQuestionsOpen = "[QUESTIONS]";
inline constexpr std::string_view kQuestionsClose = "[/QUESTIONS]";

struct CatalogEntry {
  Template kind;
  std::string name;
  std::size_t arity = 0;
  std::string semantics;
};

struct FewShot {
  std::string description;
  std::vector<std::string> rules;
};

struct NegativeExample {
  std::string output;
  std::string note;
};

struct PromptBundle {
  std::string role_statement;
  std::vector<CatalogEntry> catalog;
  std::string output_contract;
  std::vector<FewShot> few_shots;
  std::vector<NegativeExample> negative_examples;
  std::vector<Label> activities;
};

/// Catalog of all eight templates with their semantics sentences.
std::vector<CatalogEntry> template_catalog();
PromptBundle default_bundle();

/// System message followed by the few-shot exchanges. Deterministic.
std::vector<ChatMessage> render(const PromptBundle& bundle);

/// Injects `activities` into `bundle` and renders it. An empty list switches
/// the prompt to expert-supplied activity names.
std::vector<ChatMessage> build_task_prompt(const std::vector<Label>& activities,
                                           PromptBundle bundle = default_bundle());

}  // namespace kdisc
