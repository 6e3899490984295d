#include <filesystem>
#include <fstream>
#include <algorithm>
#include <functional>
#include <sstream>

#include <gtest/gtest.h>

#include "kdisc/session.hpp"
#include "kdisc/transport.hpp"

using namespace kdisc;

namespace {

std::string fixture(const std::string& name) { return std::string(KDISC_FIXTURES) + "/" + name; }

std::string slurp(const std::string& name) {
  std::ifstream in(fixture(name));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabelSet labels_of(const std::vector<DeclareRule>& rules) {
  LabelSet out;
  for (const auto& r : rules) out.insert(r.args().begin(), r.args().end());
  return out;
}

LabelSet loan_alphabet() {
  return {"A-created", "A-canceled", "A-accepted", "A-rejected", "Doc-checked", "Hist-checked"};
}

std::vector<DeclareRule> plain(const std::vector<SessionRule>& rules) {
  std::vector<DeclareRule> out;
  for (const auto& r : rules) out.push_back(r.rule);
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no kdisc::Error thrown";
  return ErrorKind::Io;
}

class FailingTransport : public ChatTransport {
 public:
  std::string send(const std::vector<ChatMessage>&) override {
    throw Error(ErrorKind::TransportFailure, "connection refused");
  }
};

class CapturingTransport : public ChatTransport {
 public:
  explicit CapturingTransport(std::string reply) : reply_(std::move(reply)) {}
  std::string send(const std::vector<ChatMessage>& messages) override {
    last = messages;
    return reply_;
  }
  std::vector<ChatMessage> last;

 private:
  std::string reply_;
};

}  // namespace

TEST(Prompt, CatalogCoversTemplates) {
  const auto catalog = template_catalog();
  ASSERT_EQ(catalog.size(), kAllTemplates.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    EXPECT_EQ(catalog[i].kind, kAllTemplates[i]);
    EXPECT_EQ(catalog[i].name, template_name(kAllTemplates[i]));
    EXPECT_EQ(catalog[i].arity, arity(kAllTemplates[i]));
  }
}

TEST(Prompt, RenderedContent) {
  const auto msgs = build_task_prompt({"A-created", "Doc-checked"});
  ASSERT_GE(msgs.size(), 5u);
  EXPECT_EQ(msgs[0].speaker, Speaker::System);
  const auto& sys = msgs[0].text;
  for (auto t : kAllTemplates) EXPECT_NE(sys.find(std::string(template_name(t)) + "("), std::string::npos);
  EXPECT_NE(sys.find("[RULES]"), std::string::npos);
  EXPECT_NE(sys.find("[QUESTIONS]"), std::string::npos);
  EXPECT_NE(sys.find("Never answer like this"), std::string::npos);
  EXPECT_NE(sys.find("- A-created\n"), std::string::npos);
  EXPECT_EQ(msgs[1].speaker, Speaker::Expert);
  EXPECT_EQ(msgs[2].speaker, Speaker::Assistant);
  EXPECT_NE(msgs[2].text.find("[RULES]"), std::string::npos);
  EXPECT_EQ(build_task_prompt({"A-created", "Doc-checked"}), msgs);

  const auto open = build_task_prompt({});
  EXPECT_EQ(open[0].text.find("- A-created"), std::string::npos);
  EXPECT_NE(open[0].text.find("verbatim"), std::string::npos);
}

TEST(Prompt, FewShotRulesAreValid) {
  for (const auto& shot : default_bundle().few_shots) {
    std::string joined;
    for (const auto& r : shot.rules) joined += r + "\n";
    const auto parsed = parse_rules_lenient(joined);
    EXPECT_TRUE(parsed.report.passed());
    EXPECT_EQ(parsed.rules.size(), shot.rules.size());
  }
}

TEST(Tags, Extraction) {
  const auto both = extract_tagged("hi\n[QUESTIONS]\n- a?\n[/QUESTIONS]\n[RULES]\n at-most(a) \n[/RULES] bye");
  EXPECT_EQ(both.rules, "at-most(a)");
  EXPECT_EQ(both.questions, "- a?");
  const auto none = extract_tagged("no tags here");
  EXPECT_FALSE(none.rules);
  EXPECT_FALSE(none.questions);
  EXPECT_EQ(extract_tagged("[RULES][/RULES]").rules, "");
  EXPECT_EQ(kind_of([] { extract_tagged("[RULES]\nat-most(a)"); }), ErrorKind::UnbalancedTags);
  EXPECT_EQ(kind_of([] { extract_tagged("[/RULES]x[RULES]"); }), ErrorKind::UnbalancedTags);
  EXPECT_EQ(kind_of([] { extract_tagged("[RULES]a[/RULES][RULES]b[/RULES]"); }), ErrorKind::MultipleBlocks);
}

TEST(Tags, QuestionSplitting) {
  EXPECT_EQ(split_questions("1. First?\n2) Second?\n\n- Third?\n* Fourth?\nFifth?"),
            (std::vector<std::string>{"First?", "Second?", "Third?", "Fourth?", "Fifth?"}));
}

TEST(Transport, DigestIsStable) {
  const std::vector<ChatMessage> a{{Speaker::System, "s"}, {Speaker::Expert, "x"}};
  const auto d = request_digest(a);
  EXPECT_EQ(d.size(), 64u);
  EXPECT_EQ(d, request_digest(a));
  EXPECT_NE(d, request_digest({{Speaker::System, "s"}, {Speaker::Assistant, "x"}}));
  // sha256 of the literal "[]"
  EXPECT_EQ(request_digest({}), "4f53cda18c2baa0c0354bb5f9a3ecbe5ed12ab4d8e11ba873c2f11161202b945");
}

TEST(Transport, ScriptedStrictAndWildcard) {
  const std::vector<ChatMessage> req{{Speaker::Expert, "hello"}};
  ScriptedTransport t({{request_digest(req), "one"}, {"*", "two"}, {"deadbeef", "three"}});
  EXPECT_EQ(t.send(req), "one");
  EXPECT_EQ(t.send({{Speaker::Expert, "anything"}}), "two");
  EXPECT_EQ(kind_of([&] { t.send(req); }), ErrorKind::TransportFailure);
  EXPECT_EQ(t.consumed(), 2u);
  EXPECT_EQ(t.remaining(), 1u);
  ScriptedTransport empty({});
  EXPECT_EQ(kind_of([&] { empty.send(req); }), ErrorKind::TransportFailure);
}

TEST(Transport, TranscriptFiles) {
  const auto records = load_transcript(fixture("claims_session.json"));
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].digest, "*");
  const auto path = std::filesystem::temp_directory_path() / "kdisc_transcript_roundtrip.json";
  save_transcript(path, records);
  EXPECT_EQ(load_transcript(path), records);
  std::filesystem::remove(path);
  EXPECT_EQ(kind_of([] { load_transcript("/nonexistent/t.json"); }), ErrorKind::Io);
}

TEST(Transport, HttpWireFormat) {
  const auto body = HttpChatTransport::request_body(
      "m1", {{Speaker::System, "s"}, {Speaker::Expert, "e"}, {Speaker::Assistant, "a"}});
  EXPECT_EQ(body["model"], "m1");
  EXPECT_EQ(body["temperature"], 0);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][2]["role"], "assistant");
  EXPECT_EQ(body["messages"][1]["content"], "e");
  EXPECT_EQ(HttpChatTransport::parse_response(R"({"choices":[{"message":{"role":"assistant","content":"ok"}}]})"),
            "ok");
  EXPECT_EQ(kind_of([] { HttpChatTransport::parse_response("{}"); }), ErrorKind::TransportFailure);
  EXPECT_EQ(kind_of([] { HttpChatTransport::parse_response("not json"); }), ErrorKind::TransportFailure);
  EXPECT_EQ(kind_of([] { HttpChatTransport(HttpTransportConfig{"localhost:1", "", "", {}}); }),
            ErrorKind::InvalidArgument);
}

TEST(Transport, UnreachableEndpointIsTransportFailure) {
  HttpTransportConfig c;
  c.endpoint = "http://127.0.0.1:9/v1/chat/completions";
  c.timeout = std::chrono::seconds(2);
  HttpChatTransport t(c);
  EXPECT_EQ(kind_of([&] { t.send({{Speaker::Expert, "x"}}); }), ErrorKind::TransportFailure);
}

TEST(Session, CaseStudyTwoRounds) {
  const auto initial = parse_rules(slurp("claims_rules_initial.txt"));
  const auto extra = parse_rules(slurp("claims_rules_feedback.txt"));
  auto all = initial;
  all.insert(all.end(), extra.begin(), extra.end());
  ASSERT_EQ(initial.size(), 17u);
  ASSERT_EQ(extra.size(), 5u);

  ScriptedTransport t(load_transcript(fixture("claims_session.json")));
  RefinementSession s("claims", "claims", labels_of(all));
  const auto q = s.propose_rules(t, slurp("claims_context.txt"));
  EXPECT_TRUE(q.asked_questions());
  EXPECT_EQ(q.questions.size(), 3u);
  EXPECT_EQ(s.state(), SessionState::AwaitingAnswers);
  EXPECT_TRUE(s.rules().empty());

  const auto r1 = s.propose_rules(t, slurp("claims_answers.txt"));
  EXPECT_EQ(r1.rules, initial);
  EXPECT_EQ(r1.repairs, 0u);
  EXPECT_EQ(s.state(), SessionState::Validated);
  EXPECT_EQ(plain(s.rules()), initial);
  EXPECT_EQ(s.round(), 1u);

  EXPECT_EQ(kind_of([&] { s.integrate_feedback(t, "x"); }), ErrorKind::InvalidState);
  s.record_model(0.2, ProcessTree::activity("Receive Claim"));
  const auto r2 = s.integrate_feedback(t, slurp("claims_feedback.txt"));
  EXPECT_EQ(r2.rules, extra);
  EXPECT_EQ(plain(s.rules()), all);
  EXPECT_EQ(s.rules().back().round, 2u);
  EXPECT_EQ(s.rules().front().round, 1u);
  EXPECT_EQ(t.remaining(), 0u);
  EXPECT_TRUE(validate_rules(all, labels_of(all)).passed());

  const auto& tr = s.transcript();
  const auto grounding = std::find_if(tr.begin(), tr.end(), [](const ChatMessage& m) {
    return m.speaker == Speaker::System && m.text.find("'Receive Claim'") != std::string::npos;
  });
  EXPECT_NE(grounding, tr.end());
}

TEST(Session, DuplicateFeedbackWarnsAndDedups) {
  const auto rules = parse_rules(slurp("loan_rules.txt"));
  ScriptedTransport t({{"*", "[RULES]\n" + format_rules(rules) + "[/RULES]"},
                       {"*", "[RULES]\nresponse(Doc-checked, Hist-checked)\n[/RULES]"}});
  RefinementSession s("d", "log", loan_alphabet());
  s.propose_rules(t, "ctx");
  s.record_model(0.2, ProcessTree::activity("A-created"));
  const auto out = s.integrate_feedback(t, "again");
  EXPECT_TRUE(out.report.passed());
  EXPECT_EQ(out.report.error_count(), 0u);
  ASSERT_EQ(out.report.items.size(), 1u);
  EXPECT_EQ(out.report.items[0].kind, "DuplicateRule");
  EXPECT_EQ(s.rules().size(), 4u);
}

TEST(Session, RepairLoopTwoRounds) {
  ScriptedTransport t(load_transcript(fixture("loan_repair.json")));
  RefinementSession s("r", "log", loan_alphabet());
  const auto out = s.propose_rules(t, slurp("loan_feedback.txt"));
  EXPECT_EQ(out.repairs, 2u);
  EXPECT_EQ(s.state(), SessionState::Validated);
  EXPECT_EQ(plain(s.rules()), parse_rules(slurp("loan_rules.txt")));
  ASSERT_EQ(s.validation_history().size(), 3u);
  EXPECT_EQ(s.validation_history()[0].items.at(0).kind, "UnknownTemplate");
  const auto& second = s.validation_history()[1];
  EXPECT_FALSE(second.passed());
  EXPECT_EQ(second.items.at(0).kind, "UnknownActivity");
  EXPECT_EQ(second.items.at(0).suggestion, "A-canceled");
  // the repair prompt carries the suggestion back to the model
  const auto& tr = s.transcript();
  const auto repair = std::find_if(tr.rbegin(), tr.rend(), [](const ChatMessage& m) { return m.speaker == Speaker::System; });
  ASSERT_NE(repair, tr.rend());
  EXPECT_NE(repair->text.find("A-canceled"), std::string::npos);
}

TEST(Session, RepairExhaustedAtThirdRepair) {
  ScriptedTransport t(load_transcript(fixture("loan_exhausted.json")));
  RefinementSession s("x", "log", loan_alphabet());
  try {
    s.propose_rules(t, "ctx");
    FAIL() << "expected RepairExhausted";
  } catch (const RepairExhaustedError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RepairExhausted);
    EXPECT_FALSE(e.report().passed());
  }
  EXPECT_EQ(t.consumed(), 4u);
  EXPECT_EQ(t.remaining(), 1u);
  EXPECT_EQ(s.validation_history().size(), 4u);
  EXPECT_EQ(s.validation_history()[0].items.at(0).kind, "MissingRulesBlock");
  EXPECT_EQ(s.state(), SessionState::ContextGiven);
  EXPECT_TRUE(s.rules().empty());
}

TEST(Session, ZeroRepairBudget) {
  ScriptedTransport t(load_transcript(fixture("loan_repair.json")));
  RefinementSession s("z", "log", loan_alphabet(), 0);
  EXPECT_EQ(kind_of([&] { s.propose_rules(t, "ctx"); }), ErrorKind::RepairExhausted);
  EXPECT_EQ(t.consumed(), 1u);
}

TEST(Session, TransportFailureLeavesSessionUntouched) {
  RefinementSession s("f", "log", loan_alphabet());
  FailingTransport fail;
  const auto before = s.to_json();
  EXPECT_EQ(kind_of([&] { s.propose_rules(fail, "ctx"); }), ErrorKind::TransportFailure);
  EXPECT_EQ(s.to_json(), before);

  ScriptedTransport t(load_transcript(fixture("loan_session.json")));
  s.propose_rules(t, slurp("loan_context.txt"));
  s.record_model(0.2, ProcessTree::activity("A-created"));
  const auto validated = s.to_json();
  EXPECT_EQ(kind_of([&] { s.integrate_feedback(fail, "more"); }), ErrorKind::TransportFailure);
  EXPECT_EQ(s.to_json(), validated);
}

TEST(Session, ConversationCarriesHistory) {
  CapturingTransport cap("[RULES]\nat-most(A-created)\n[/RULES]");
  RefinementSession s("c", "log", loan_alphabet());
  s.propose_rules(cap, "first context");
  const auto alphabet = loan_alphabet();
  const auto prompt_len = build_task_prompt({alphabet.begin(), alphabet.end()}).size();
  ASSERT_EQ(cap.last.size(), prompt_len + 1);
  EXPECT_EQ(cap.last.back().text, "first context");
  s.record_model(0.2, ProcessTree::activity("A-created"));
  s.integrate_feedback(cap, "feedback");
  EXPECT_EQ(cap.last.size(), prompt_len + 4);
  EXPECT_EQ(cap.last[prompt_len + 1].speaker, Speaker::Assistant);
  EXPECT_EQ(kind_of([&] { s.propose_rules(cap, "ctx"); }), ErrorKind::InvalidState);
}

TEST(Session, ManualEditsAndJsonRoundTrip) {
  ScriptedTransport t(load_transcript(fixture("loan_session.json")));
  RefinementSession s("j", "log-1", loan_alphabet());
  s.propose_rules(t, slurp("loan_context.txt"));
  s.set_rule_enabled(0, false);
  EXPECT_EQ(s.enabled_rules().size(), 2u);
  EXPECT_EQ(kind_of([&] { s.set_rule_enabled(9, true); }), ErrorKind::NotFound);
  s.record_model(0.3, parse_tree_text("seq('A-created', xor('A-canceled', 'A-accepted'))"));

  const auto back = RefinementSession::from_json(s.to_json());
  EXPECT_EQ(back.to_json(), s.to_json());
  EXPECT_EQ(back.state(), SessionState::Validated);
  EXPECT_EQ(back.model_iterations().at(0).tree, s.model_iterations().at(0).tree);
  EXPECT_FALSE(back.rules().at(0).enabled);

  auto bad = s.rules();
  bad.push_back(SessionRule{DeclareRule::unary(Template::AtMost, "A-cancelled"), true, 0});
  const auto report = s.replace_rules(bad);
  EXPECT_FALSE(report.passed());
  EXPECT_EQ(s.rules().size(), 3u);
  bad.pop_back();
  bad.push_back(bad.front());
  EXPECT_TRUE(s.replace_rules(bad).passed());
  EXPECT_EQ(s.rules().size(), 3u);
}

TEST(Session, RecordThenReplayWithDigests) {
  ScriptedTransport wildcard(load_transcript(fixture("claims_session.json")));
  RecordingTransport rec(wildcard);
  const auto all_labels = labels_of(parse_rules(slurp("claims_rules_initial.txt") + slurp("claims_rules_feedback.txt")));
  RefinementSession live("live", "claims", all_labels);
  live.propose_rules(rec, slurp("claims_context.txt"));
  live.propose_rules(rec, slurp("claims_answers.txt"));
  const auto records = rec.records();
  ASSERT_EQ(records.size(), 2u);
  for (const auto& r : records) EXPECT_NE(r.digest, "*");

  ScriptedTransport strict(records);
  RefinementSession replayed("live", "claims", all_labels);
  replayed.propose_rules(strict, slurp("claims_context.txt"));
  replayed.propose_rules(strict, slurp("claims_answers.txt"));
  EXPECT_EQ(replayed.to_json(), live.to_json());

  ScriptedTransport strict2(records);
  RefinementSession diverged("live", "claims", all_labels);
  EXPECT_EQ(kind_of([&] { diverged.propose_rules(strict2, "different context"); }), ErrorKind::TransportFailure);
}
