#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "kdisc/declare.hpp"
#include "kdisc/error.hpp"
#include "oracles.hpp"

using namespace kdisc;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(KDISC_FIXTURES) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EventLog loan_log() { return parse_variants(slurp("loan_log.variants")); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no kdisc::Error thrown";
  return ErrorKind::Io;
}

std::vector<DeclareRule> all_rules(const std::vector<Label>& labels) {
  std::vector<DeclareRule> out;
  for (auto t : kAllTemplates) {
    for (const auto& a : labels) {
      if (arity(t) == 1) {
        out.push_back(DeclareRule::unary(t, a));
        continue;
      }
      for (const auto& b : labels)
        if (a != b) out.push_back(DeclareRule::binary(t, a, b));
    }
  }
  return out;
}

}  // namespace

TEST(Templates, CatalogSentences) {
  EXPECT_EQ(template_semantics(Template::AtMost), "a occurs at most once.");
  EXPECT_EQ(template_semantics(Template::Existence), "a occurs at least once.");
  EXPECT_EQ(template_semantics(Template::Response), "If a occurs, then b occurs after a.");
  EXPECT_EQ(template_semantics(Template::Precedence), "b occurs only if preceded by a.");
  EXPECT_EQ(template_semantics(Template::CoExistence), "a and b occur together.");
  EXPECT_EQ(template_semantics(Template::NotCoExistence), "a and b never occur together.");
  EXPECT_EQ(template_semantics(Template::NotSuccession), "b cannot occur after a.");
  EXPECT_EQ(template_semantics(Template::RespondedExistence), "If a occurs in the trace, then b occurs as well.");
  for (auto t : kAllTemplates) EXPECT_EQ(template_from_name(template_name(t)), t);
  EXPECT_FALSE(template_from_name("succession"));
}

TEST(Rule, Invariants) {
  EXPECT_EQ(kind_of([] { DeclareRule(Template::Response, {"a"}); }), ErrorKind::ArityMismatch);
  EXPECT_EQ(kind_of([] { DeclareRule(Template::Existence, {"a", "b"}); }), ErrorKind::ArityMismatch);
  EXPECT_EQ(kind_of([] { DeclareRule::binary(Template::Response, "a", "a"); }), ErrorKind::IdenticalArguments);
}

TEST(CheckTrace, Examples) {
  EXPECT_FALSE(check_trace(DeclareRule::binary(Template::Response, "Doc-checked", "Hist-checked"),
                           {"A-created", "Hist-checked", "Doc-checked", "A-accepted"}));
  EXPECT_FALSE(check_trace(DeclareRule::binary(Template::NotCoExistence, "A-accepted", "A-rejected"),
                           {"A-created", "Doc-checked", "Hist-checked", "A-rejected", "A-accepted"}));
  EXPECT_TRUE(check_trace(DeclareRule::binary(Template::Precedence, "Block Claim 1", "Unblock Claim 1"), {}));
}

TEST(CheckTrace, AgreesWithQuantifierOracle) {
  const std::vector<Label> labels{"a", "b", "c", "d", "e"};
  const auto rules = all_rules(labels);
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<int> len(0, 12), lab(0, 4);
  std::size_t mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    Trace t;
    for (int k = len(rng); k > 0; --k) t.push_back(labels[lab(rng)]);
    for (const auto& r : rules)
      if (check_trace(r, t) != oracle::holds(r, t)) ++mismatches;
  }
  EXPECT_EQ(mismatches, 0u);
}

TEST(Confidence, LoanLog) {
  const auto log = loan_log();
  EXPECT_EQ(confidence(DeclareRule::binary(Template::NotCoExistence, "A-accepted", "A-rejected"), log), 0.965);
  EXPECT_EQ(confidence(DeclareRule::binary(Template::Response, "Doc-checked", "Hist-checked"), log), 0.870);
  EXPECT_EQ(confidence(DeclareRule::unary(Template::Existence, "A-created"), log), 1.0);
  // activation: 665 traces contain Doc-checked, 535 of them have a later Hist-checked
  EXPECT_DOUBLE_EQ(activation_confidence(DeclareRule::binary(Template::Response, "Doc-checked", "Hist-checked"), log),
                   535.0 / 665.0);
  EXPECT_EQ(kind_of([] { confidence(DeclareRule::unary(Template::Existence, "a"), EventLog{}); }),
            ErrorKind::EmptyLog);
}

TEST(Confidence, MonotoneInSatisfyingAndViolatingVariants) {
  const auto rule = DeclareRule::binary(Template::Response, "a", "b");
  const auto base = parse_variants("3;a,b\n2;a\n");
  const auto more_sat = parse_variants("3;a,b\n2;a\n4;c\n");
  const auto more_bad = parse_variants("3;a,b\n2;a\n4;b,a\n");
  EXPECT_GT(confidence(rule, more_sat), confidence(rule, base));
  EXPECT_LT(confidence(rule, more_bad), confidence(rule, base));
}

TEST(Mine, LoanLog) {
  const auto log = loan_log();
  const auto mined = mine_rules(log, 1.0);
  auto has = [&](const DeclareRule& r) { return std::find(mined.begin(), mined.end(), r) != mined.end(); };
  EXPECT_TRUE(has(DeclareRule::unary(Template::Existence, "A-created")));
  EXPECT_TRUE(has(DeclareRule::binary(Template::Precedence, "A-created", "A-canceled")));
  EXPECT_FALSE(has(DeclareRule::binary(Template::Response, "Doc-checked", "Hist-checked")));
  // exactly the confidence-1 rules, in catalog then label order
  std::vector<DeclareRule> expected;
  for (const auto& r : all_rules(std::vector<Label>(log.alphabet().begin(), log.alphabet().end())))
    if (confidence(r, log) == 1.0) expected.push_back(r);
  EXPECT_EQ(mined, expected);
  EXPECT_EQ(kind_of([&] { mine_rules(log, 1.2); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { mine_rules(log, 0.0); }), ErrorKind::InvalidArgument);
}

TEST(Mine, SingleVariant) {
  const auto mined = mine_rules(parse_variants("1;a\n"), 1.0);
  EXPECT_NE(std::find(mined.begin(), mined.end(), DeclareRule::unary(Template::AtMost, "a")), mined.end());
  EXPECT_NE(std::find(mined.begin(), mined.end(), DeclareRule::unary(Template::Existence, "a")), mined.end());
}

TEST(Parse, Examples) {
  EXPECT_EQ(parse_rule("not-succession(Withdraw Claim, Payment Order)"),
            DeclareRule::binary(Template::NotSuccession, "Withdraw Claim", "Payment Order"));
  EXPECT_TRUE(parse_rule("at-most(Correct Claim)").is_unary());
  EXPECT_EQ(kind_of([] { parse_rules("response(a)\n"); }), ErrorKind::ArityMismatch);
  EXPECT_EQ(kind_of([] { parse_rules("succession(a, b)\n"); }), ErrorKind::UnknownTemplate);
  EXPECT_EQ(kind_of([] { parse_rules("response a b\n"); }), ErrorKind::MalformedLine);
  try {
    parse_rules("# c\nexistence(a)\n\nresponse(a)\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Parse, RoundTrip) {
  for (const char* name : {"claims_rules_initial.txt", "claims_rules_feedback.txt", "loan_rules.txt"}) {
    const auto text = slurp(name);
    const auto rules = parse_rules(text);
    EXPECT_EQ(format_rules(rules), text) << name;
    EXPECT_EQ(parse_rules(format_rules(rules)), rules);
  }
  const auto every = all_rules({"x y", "z"});
  EXPECT_EQ(parse_rules(format_rules(every)), every);
}

TEST(Lenient, BoxStyle) {
  const auto parsed = parse_rules_lenient(
      "not-co-existence(A-cancelled,A-accepted),\nnot-co-existence(A-cancelled,A-rejected),\n"
      "- not-co-existence(A-accepted,A-rejected), response(Doc-checked,Hist-checked).\nfoo(bar)\n");
  EXPECT_EQ(parsed.rules.size(), 4u);
  ASSERT_EQ(parsed.report.items.size(), 1u);
  EXPECT_EQ(parsed.report.items[0].kind, "UnknownTemplate");
  EXPECT_EQ(parsed.report.items[0].line, "foo(bar)");
}

TEST(Validate, UnknownActivitySuggestion) {
  const auto log = loan_log();
  const auto report = validate_rules(parse_rules(slurp("loan_rules_misspelled.txt")), log.alphabet());
  EXPECT_FALSE(report.passed());
  ASSERT_EQ(report.error_count(), 2u);
  EXPECT_EQ(report.items[0].kind, "UnknownActivity");
  EXPECT_EQ(report.items[0].suggestion, Label("A-canceled"));
  EXPECT_NE(report.items[0].message.find("A-cancelled"), std::string::npos);
  EXPECT_TRUE(validate_rules(parse_rules(slurp("loan_rules.txt")), log.alphabet()).passed());
}

TEST(Validate, NoSuggestionBeyondDistanceThree) {
  const auto report = validate_rules({DeclareRule::unary(Template::Existence, "Zebra")}, {"A-created"});
  ASSERT_EQ(report.items.size(), 1u);
  EXPECT_FALSE(report.items[0].suggestion);
  EXPECT_EQ(edit_distance("A-cancelled", "A-canceled"), 1u);
}

TEST(Validate, CaseStudyRulesPass) {
  auto rules = parse_rules(slurp("claims_rules_initial.txt"));
  LabelSet alphabet;
  for (const auto& r : rules) alphabet.insert(r.args().begin(), r.args().end());
  EXPECT_TRUE(validate_rules(rules, alphabet).passed());
  EXPECT_EQ(validate_rules(rules, alphabet).items.size(), 0u);
}

TEST(Validate, Warnings) {
  const auto a = DeclareRule::binary(Template::CoExistence, "a", "b");
  const auto b = DeclareRule::binary(Template::NotCoExistence, "b", "a");
  auto report = validate_rules({a, b}, {"a", "b"});
  EXPECT_TRUE(report.passed());
  ASSERT_EQ(report.warning_count(), 1u);
  EXPECT_EQ(report.items[0].kind, "ContradictoryPair");

  report = validate_rules({DeclareRule::unary(Template::Existence, "a"), DeclareRule::unary(Template::Existence, "b"),
                           DeclareRule::binary(Template::NotCoExistence, "a", "b")},
                          {"a", "b"});
  EXPECT_EQ(report.warning_count(), 1u);

  report = validate_rules({a, a}, {"a", "b"});
  ASSERT_EQ(report.warning_count(), 1u);
  EXPECT_EQ(report.items[0].kind, "DuplicateRule");
  EXPECT_EQ(report.items[0].index, 1u);
}

TEST(Validate, JsonRoundTrip) {
  const auto report = validate_rules(parse_rules(slurp("loan_rules_misspelled.txt")), loan_log().alphabet());
  const nlohmann::json j = report;
  EXPECT_EQ(j.at("verdict"), "fail");
  EXPECT_EQ(j.at("items").at(0).at("suggestion"), "A-canceled");
  EXPECT_EQ(j.get<ValidationReport>(), report);
}
