#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "cli.hpp"
#include "kdisc/service.hpp"

using namespace kdisc;
namespace fs = std::filesystem;

namespace {

std::string fixture(const std::string& name) { return std::string(KDISC_FIXTURES) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("kdisc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Scripted {
  std::map<std::string, std::unique_ptr<ScriptedTransport>> by_session;
  std::string transcript;
  TransportProvider provider() {
    return [this](const std::string& id) -> ChatTransport& {
      auto& slot = by_session[id];
      if (!slot) slot = std::make_unique<ScriptedTransport>(load_transcript(fixture(transcript)));
      return *slot;
    };
  }
};

ServiceRequest req(std::string method, std::string path, nlohmann::json body = nullptr, std::string key = "") {
  ServiceRequest r;
  r.method = std::move(method);
  r.path = std::move(path);
  if (!body.is_null()) r.body = body.dump();
  r.idempotency_key = std::move(key);
  return r;
}

std::string upload_loans(Service& svc) {
  ServiceRequest r = req("POST", "/logs");
  r.body = slurp(fixture("loan_log.variants"));
  r.query["name"] = "loans";
  const auto res = svc.handle(r);
  EXPECT_EQ(res.status, 201) << res.body;
  return res.json().at("id").get<std::string>();
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::vector<std::string>& args, const std::string& stdin_text = "",
                  ChatTransport* transport = nullptr) {
  std::istringstream in(stdin_text);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err, transport);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST(Store, ArtifactsPersist) {
  TempDir dir;
  std::string log_id, session_id;
  {
    Store store(dir.path());
    const auto info = store.put_log(parse_variants("3;a,b\n1;b\n"), "small");
    log_id = info.id;
    EXPECT_EQ(info.kind, ArtifactKind::Log);
    EXPECT_EQ(log_id.rfind("log-", 0), 0u);
    RefinementSession s(store.new_id(ArtifactKind::Session), log_id, {"a", "b"});
    session_id = s.id();
    store.create_session(s, {{"sup", 0.4}});
    const auto model = store.put_model({{"tree_text", "'a'"}});
    EXPECT_EQ(store.get_model(model.id).at("tree_text"), "'a'");
  }
  Store reopened(dir.path());
  EXPECT_EQ(reopened.get_log(log_id), parse_variants("3;a,b\n1;b\n"));
  EXPECT_EQ(reopened.log_info(log_id).name, "small");
  EXPECT_EQ(reopened.get_session(session_id).log_ref(), log_id);
  EXPECT_EQ(reopened.session_meta(session_id).at("sup"), 0.4);
  EXPECT_EQ(reopened.list(ArtifactKind::Log).size(), 1u);
  EXPECT_EQ(reopened.list(ArtifactKind::Model).size(), 1u);
  try {
    reopened.get_log("log-missing");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFound);
  }
  EXPECT_THROW(reopened.get_log("../etc/passwd"), Error);
  EXPECT_FALSE(reopened.recall("tok"));
  reopened.remember("tok", {{"x", 1}});
  EXPECT_EQ(reopened.recall("tok"), (nlohmann::json{{"x", 1}}));
  for (const auto& entry : fs::recursive_directory_iterator(dir.path()))
    EXPECT_EQ(entry.path().extension() == ".tmp", false) << entry.path();
}

TEST(Service, HealthAndErrors) {
  TempDir dir;
  Scripted s;
  Service svc(dir.path(), s.provider());
  EXPECT_EQ(svc.handle(req("GET", "/health")).json().at("status"), "ok");
  const auto missing = svc.handle(req("GET", "/sessions/session-nope"));
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(missing.json().at("error").at("kind"), "NotFound");
  EXPECT_EQ(svc.handle(req("GET", "/nowhere")).status, 404);
  ServiceRequest bad = req("POST", "/logs");
  bad.body = "x;a\n";
  EXPECT_EQ(svc.handle(bad).status, 400);
  EXPECT_EQ(svc.handle(req("POST", "/sessions", {{"log_id", "log-nope"}})).status, 404);
  const auto garbage = svc.handle(ServiceRequest{"POST", "/sessions", {}, "{not json", ""});
  EXPECT_EQ(garbage.status, 400);
}

TEST(Service, UploadListsActivities) {
  TempDir dir;
  Scripted s;
  Service svc(dir.path(), s.provider());
  const auto id = upload_loans(svc);
  const auto acts = svc.handle(req("GET", "/logs/" + id + "/activities")).json().at("activities");
  EXPECT_EQ(acts.size(), 6u);
  const auto info = svc.handle(req("GET", "/logs/" + id)).json();
  EXPECT_EQ(info.at("traces"), 1000);
  EXPECT_EQ(info.at("variants"), 8);
  EXPECT_EQ(svc.handle(req("GET", "/logs")).json().at("logs").size(), 1u);

  ServiceRequest csv = req("POST", "/logs");
  csv.query["format"] = "csv";
  csv.body = "case_id,activity,timestamp\n1,a,2024-01-01T00:00:00Z\n1,b,2024-01-01T00:01:00Z\n";
  const auto res = svc.handle(csv);
  EXPECT_EQ(res.status, 201) << res.body;
  EXPECT_EQ(res.json().at("activities").size(), 2u);
}

TEST(Service, FullRefinementSession) {
  TempDir dir;
  Scripted s;
  s.transcript = "loan_session.json";
  Service svc(dir.path(), s.provider());
  const auto log_id = upload_loans(svc);
  const auto created = svc.handle(req("POST", "/sessions", {{"log_id", log_id}, {"sup", 0.2}}));
  ASSERT_EQ(created.status, 201);
  const auto sid = created.json().at("id").get<std::string>();
  const auto base = "/sessions/" + sid;
  EXPECT_EQ(created.json().at("state"), "init");

  const auto ctx = svc.handle(req("POST", base + "/context", {{"text", slurp(fixture("loan_context.txt"))}}));
  ASSERT_EQ(ctx.status, 200) << ctx.body;
  EXPECT_EQ(ctx.json().at("rules").size(), 3u);
  EXPECT_EQ(ctx.json().at("state"), "validated");

  const auto d1 = svc.handle(req("POST", base + "/discover", nlohmann::json::object()));
  ASSERT_EQ(d1.status, 200) << d1.body;
  EXPECT_EQ(d1.json().at("iteration"), 0);
  for (const auto& v : d1.json().at("verification")) EXPECT_EQ(v.at("status"), "holds") << v;

  const auto fb = svc.handle(req("POST", base + "/feedback", {{"text", slurp(fixture("loan_feedback.txt"))}}));
  ASSERT_EQ(fb.status, 200) << fb.body;
  EXPECT_EQ(fb.json().at("current_rules").size(), 4u);

  const auto d2 = svc.handle(req("POST", base + "/discover", {{"sup", 0.2}}));
  ASSERT_EQ(d2.status, 200);
  EXPECT_EQ(d2.json().at("iteration"), 1);
  EXPECT_EQ(d2.json().at("tree_text"),
            "seq('A-created', xor('A-canceled', seq(xor(tau, 'Doc-checked'), 'Hist-checked', "
            "xor('A-accepted', 'A-rejected'))))");

  const auto models = svc.handle(req("GET", base + "/models")).json().at("models");
  EXPECT_EQ(models.size(), 2u);
  EXPECT_EQ(models[1].at("rules").size(), 4u);
  const auto dot = svc.handle(req("GET", base + "/models/1/dot"));
  EXPECT_EQ(dot.content_type, "text/vnd.graphviz");
  EXPECT_EQ(dot.body.rfind("digraph", 0), 0u);
  EXPECT_EQ(svc.handle(req("GET", base + "/models/7")).status, 404);
  EXPECT_GE(svc.handle(req("GET", base + "/transcript")).json().at("transcript").size(), 4u);
  EXPECT_EQ(svc.handle(req("GET", base + "/validation")).json().at("validation_history").size(), 2u);
  EXPECT_EQ(svc.handle(req("POST", base + "/answers", {{"text", "x"}})).status, 409);
}

TEST(Service, RuleEditsAndDisabledRules) {
  TempDir dir;
  Scripted s;
  Service svc(dir.path(), s.provider());
  const auto log_id = upload_loans(svc);
  const auto sid = svc.handle(req("POST", "/sessions", {{"log_id", log_id}})).json().at("id").get<std::string>();
  const auto base = "/sessions/" + sid;

  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : parse_rules(slurp(fixture("loan_rules.txt")))) rules.push_back(format_rule(r));
  rules.push_back("not-co-existence(A-cancelled, A-rejected)");
  const auto rejected = svc.handle(req("PUT", base + "/rules", {{"rules", rules}}));
  EXPECT_EQ(rejected.status, 422);
  EXPECT_EQ(rejected.json().at("report").at("verdict"), "fail");
  EXPECT_TRUE(svc.handle(req("GET", base + "/rules")).json().at("rules").empty());

  rules.erase(rules.size() - 1);
  rules[3] = {{"rule", rules[3]}, {"enabled", false}};
  const auto ok = svc.handle(req("PUT", base + "/rules", {{"rules", rules}}));
  ASSERT_EQ(ok.status, 200) << ok.body;
  const auto d = svc.handle(req("POST", base + "/discover", nlohmann::json::object())).json();
  EXPECT_EQ(d.at("rules").size(), 3u);
  for (const auto& r : d.at("rules")) EXPECT_NE(r.get<std::string>().rfind("response", 0), 0u);
  EXPECT_EQ(svc.handle(req("PUT", base + "/rules", {{"rules", {"bogus(x)"}}})).status, 422);
  EXPECT_EQ(svc.handle(req("POST", base + "/discover", {{"sup", 3}})).status, 400);
}

TEST(Service, IdempotentTurnsAndRestart) {
  TempDir dir;
  Scripted s;
  s.transcript = "loan_session.json";
  std::string sid;
  {
    Service svc(dir.path(), s.provider());
    const auto log_id = upload_loans(svc);
    const auto first = svc.handle(req("POST", "/sessions", {{"log_id", log_id}}, "create-1"));
    const auto again = svc.handle(req("POST", "/sessions", {{"log_id", log_id}}, "create-1"));
    EXPECT_EQ(first.body, again.body);
    EXPECT_EQ(svc.handle(req("GET", "/sessions")).json().at("sessions").size(), 1u);
    sid = first.json().at("id").get<std::string>();
    const auto base = "/sessions/" + sid;
    const auto t1 = svc.handle(req("POST", base + "/context", {{"text", "ctx"}}, "turn-1"));
    const auto t2 = svc.handle(req("POST", base + "/context", {{"text", "ctx"}}, "turn-1"));
    EXPECT_EQ(t1.status, 200);
    EXPECT_EQ(t1.body, t2.body);
    EXPECT_EQ(s.by_session.at(sid)->consumed(), 1u);
  }
  Service restarted(dir.path(), s.provider());
  const auto view = restarted.handle(req("GET", "/sessions/" + sid)).json();
  EXPECT_EQ(view.at("state"), "validated");
  EXPECT_EQ(view.at("rules").size(), 3u);
}

TEST(Service, TransportFailureMapsTo502) {
  TempDir dir;
  Service svc(dir.path(), [](const std::string&) -> ChatTransport& {
    throw Error(ErrorKind::TransportFailure, "offline");
  });
  const auto log_id = upload_loans(svc);
  const auto sid = svc.handle(req("POST", "/sessions", {{"log_id", log_id}})).json().at("id").get<std::string>();
  const auto res = svc.handle(req("POST", "/sessions/" + sid + "/context", {{"text", "x"}}));
  EXPECT_EQ(res.status, 502);
  EXPECT_EQ(svc.handle(req("GET", "/sessions/" + sid)).json().at("state"), "init");
}

TEST(Service, RepairExhaustedIs422WithReport) {
  TempDir dir;
  Scripted s;
  s.transcript = "loan_exhausted.json";
  Service svc(dir.path(), s.provider());
  const auto log_id = upload_loans(svc);
  const auto sid = svc.handle(req("POST", "/sessions", {{"log_id", log_id}})).json().at("id").get<std::string>();
  const auto res = svc.handle(req("POST", "/sessions/" + sid + "/context", {{"text", "x"}}));
  EXPECT_EQ(res.status, 422);
  EXPECT_EQ(res.json().at("error").at("kind"), "RepairExhausted");
  EXPECT_TRUE(res.json().at("error").contains("report"));
  EXPECT_EQ(svc.handle(req("GET", "/sessions/" + sid + "/validation")).json().at("validation_history").size(), 4u);
}

TEST(Service, LiveHttpServer) {
  TempDir dir;
  Scripted s;
  Service svc(dir.path(), s.provider());
  std::thread server([&] { svc.serve("127.0.0.1:0"); });
  for (int i = 0; i < 200 && svc.port() == 0; ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  ASSERT_NE(svc.port(), 0);
  httplib::Client client("127.0.0.1", svc.port());
  client.set_connection_timeout(5, 0);
  auto health = client.Get("/health");
  for (int i = 0; i < 100 && !health; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    health = client.Get("/health");
  }
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");
  const auto up = client.Post("/logs?name=web", slurp(fixture("loan_log.variants")), "text/plain");
  ASSERT_TRUE(up);
  EXPECT_EQ(up->status, 201);
  const auto id = nlohmann::json::parse(up->body).at("id").get<std::string>();
  const auto acts = client.Get("/logs/" + id + "/activities");
  ASSERT_TRUE(acts);
  EXPECT_EQ(nlohmann::json::parse(acts->body).at("activities").size(), 6u);
  svc.stop();
  server.join();
}

TEST(Cli, DiscoverExportsAndExitCodes) {
  const auto log = fixture("loan_log.variants");
  const auto ok = run_cli({"discover", "--log", log, "--rules", fixture("loan_rules.txt")});
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_EQ(ok.out,
            "seq('A-created', xor('A-canceled', seq(xor(tau, 'Doc-checked'), 'Hist-checked', "
            "xor('A-accepted', 'A-rejected'))))\n");
  EXPECT_NE(ok.err.find("holds"), std::string::npos);
  EXPECT_EQ(run_cli({"discover", "--log", log, "--format", "pnml"}).out.rfind("<?xml", 0), 0u);
  EXPECT_EQ(run_cli({"discover", "--log", log, "--rules", fixture("loan_rules_misspelled.txt")}).code,
            cli::kValidationFailure);
  EXPECT_EQ(run_cli({"discover", "--log", log, "--sup", "2"}).code, cli::kParseFailure);
  EXPECT_EQ(run_cli({"discover", "--log", log, "--format", "bpmn"}).code, cli::kParseFailure);
  EXPECT_EQ(run_cli({"discover", "--log", "/nonexistent.variants"}).code, cli::kParseFailure);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kParseFailure);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kOk);
}

TEST(Cli, DiscoverWritesFile) {
  TempDir dir;
  const auto out = (dir.path() / "model.dot").string();
  const auto r = run_cli({"discover", "--log", fixture("loan_log.variants"), "--format", "dot", "--out", out});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out).rfind("digraph", 0), 0u);
}

TEST(Cli, RulesCheckAndMine) {
  const auto check = run_cli({"rules", "check", "--log", fixture("loan_log.variants"), "--rules", fixture("loan_rules.txt")});
  EXPECT_EQ(check.code, 0) << check.err;
  EXPECT_NE(check.out.find("not-co-existence(A-accepted, A-rejected)\tconfidence 0.965"), std::string::npos);
  EXPECT_NE(check.out.find("response(Doc-checked, Hist-checked)\tconfidence 0.870"), std::string::npos);
  EXPECT_NE(check.out.find("validation: pass"), std::string::npos);
  const auto bad = run_cli({"rules", "check", "--log", fixture("loan_log.variants"), "--rules",
                            fixture("loan_rules_misspelled.txt")});
  EXPECT_EQ(bad.code, cli::kValidationFailure);
  EXPECT_NE(bad.out.find("A-canceled"), std::string::npos);
  const auto mined = run_cli({"rules", "mine", "--log", fixture("loan_log.variants"), "--min-confidence", "1"});
  EXPECT_EQ(mined.code, 0);
  EXPECT_NE(mined.out.find("at-most(A-created)"), std::string::npos);
  EXPECT_EQ(run_cli({"rules", "mine", "--log", fixture("loan_log.variants"), "--min-confidence", "1.2"}).code,
            cli::kParseFailure);
}

TEST(Cli, ExtractWithTranscript) {
  TempDir dir;
  const auto out = (dir.path() / "rules.txt").string();
  const auto r = run_cli({"extract", "--log", fixture("loan_log.variants"), "--description", fixture("loan_feedback.txt"),
                          "--transcript", fixture("loan_repair.json"), "--out", out});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(out), slurp(fixture("loan_rules.txt")));
  const auto exhausted = run_cli({"extract", "--log", fixture("loan_log.variants"), "--description",
                                  fixture("loan_feedback.txt"), "--transcript", fixture("loan_exhausted.json")});
  EXPECT_EQ(exhausted.code, cli::kRepairExhausted);
  const auto offline = run_cli({"extract", "--log", fixture("loan_log.variants"), "--description",
                                fixture("loan_feedback.txt"), "--transcript", fixture("claims_session.json")});
  EXPECT_NE(offline.code, 0);
}

TEST(Cli, ExtractAnswersQuestions) {
  ScriptedTransport t(load_transcript(fixture("claims_session.json")));
  const auto r = run_cli({"extract", "--log", fixture("claims_log.variants"), "--description", fixture("claims_context.txt"), "--answers", fixture("claims_answers.txt")},
                         "", &t);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(fixture("claims_rules_initial.txt")));
  EXPECT_NE(r.err.find("3. How often"), std::string::npos);
}

TEST(Cli, ExitCodeMapping) {
  EXPECT_EQ(cli::exit_code_for(ErrorKind::TransportFailure), cli::kTransportFailure);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::RepairExhausted), cli::kRepairExhausted);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::UnknownTemplate), cli::kParseFailure);
  EXPECT_EQ(cli::exit_code_for(ErrorKind::ExplosionGuard), cli::kInternalFailure);
}
