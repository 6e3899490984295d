#include "kdisc/service.hpp"

#include <atomic>
#include <sstream>

#include <httplib.h>

#include "kdisc/language.hpp"
#include "kdisc/workflow_net.hpp"

namespace kdisc {

namespace {

constexpr std::size_t kVerifyLoopBound = 2;
constexpr std::size_t kVerifyCap = 200'000;

bool has_loop(const ProcessTree& t) { return !is_loop_free(t); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

ServiceResponse json_response(int status, const nlohmann::json& body) {
  return ServiceResponse{status, body.dump(), "application/json"};
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

std::string text_field(const nlohmann::json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    throw Error(ErrorKind::InvalidArgument, std::string("missing string field '") + key + "'");
  return body[key].get<std::string>();
}

std::vector<std::string> rule_texts(const std::vector<DeclareRule>& rules) {
  std::vector<std::string> out;
  for (const auto& r : rules) out.push_back(format_rule(r));
  return out;
}

std::size_t parse_index(const std::string& s) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::NotFound, "no model iteration '" + s + "'");
}

}  // namespace

std::vector<RuleVerdict> verify_rules(const ProcessTree& tree, const std::vector<DeclareRule>& rules) {
  std::vector<RuleVerdict> out;
  const std::size_t leaves = leaf_labels(tree).size();
  const std::size_t max_len = has_loop(tree) ? leaves * (kVerifyLoopBound + 1) : leaves;
  std::optional<BoundedLanguage> lang;
  bool too_large = false;
  try {
    lang = enumerate_language(tree, kVerifyLoopBound, max_len, kVerifyCap);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ExplosionGuard) throw;
    too_large = true;
  }
  std::vector<Trace> ordered;
  if (lang) {
    ordered.assign(lang->traces.begin(), lang->traces.end());
    std::sort(ordered.begin(), ordered.end(), shortlex_less);
  }
  for (const auto& rule : rules) {
    RuleVerdict v{rule, "holds", std::nullopt, lang && lang->exact};
    if (too_large) {
      v.status = "unknown";
    } else {
      for (const auto& t : ordered)
        if (!check_trace(rule, t)) {
          v.status = "violated";
          v.witness = t;
          v.exact = true;
          break;
        }
    }
    out.push_back(std::move(v));
  }
  return out;
}

DiscoveryReport run_discovery(const EventLog& log, const std::vector<DeclareRule>& rules,
                              const DiscoveryParams& params) {
  auto result = discover_with_steps(log, rules, params);
  DiscoveryReport report;
  report.tree = std::move(result.tree);
  if (!result.steps.empty()) report.top_cut = result.steps.front().cut;
  report.alphabet_size = log.alphabet().size();
  report.variants = log.variants().size();
  report.traces = log.total_traces();
  report.verdicts = verify_rules(report.tree, rules);
  return report;
}

nlohmann::json to_json(const RuleVerdict& v) {
  return {{"rule", format_rule(v.rule)},
          {"status", v.status},
          {"witness", v.witness ? nlohmann::json(*v.witness) : nlohmann::json(nullptr)},
          {"exact", v.exact}};
}

nlohmann::json to_json(const DiscoveryReport& report) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : report.verdicts) verdicts.push_back(to_json(v));
  return {{"tree", report.tree},
          {"tree_text", to_tree_text(report.tree)},
          {"top_cut", report.top_cut ? nlohmann::json(to_string(*report.top_cut)) : nlohmann::json(nullptr)},
          {"alphabet_size", report.alphabet_size},
          {"variants", report.variants},
          {"traces", report.traces},
          {"verification", verdicts}};
}

int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return 404;
    case ErrorKind::InvalidState: return 409;
    case ErrorKind::TransportFailure: return 502;
    case ErrorKind::RepairExhausted: return 422;
    case ErrorKind::MissingColumn:
    case ErrorKind::UnparseableTimestamp:
    case ErrorKind::EmptyInput:
    case ErrorKind::BadCount:
    case ErrorKind::DuplicateVariant:
    case ErrorKind::UnknownTemplate:
    case ErrorKind::ArityMismatch:
    case ErrorKind::MalformedLine:
    case ErrorKind::IdenticalArguments:
    case ErrorKind::MalformedTree:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidPartition:
    case ErrorKind::EmptyLog:
    case ErrorKind::AlphabetTooSmall: return 400;
    default: return 500;
  }
}

nlohmann::json error_body(const Error& e) {
  nlohmann::json err{{"kind", to_string(e.kind())}, {"message", e.what()}};
  if (e.line()) err["line"] = *e.line();
  if (const auto* re = dynamic_cast<const RepairExhaustedError*>(&e)) err["report"] = re->report();
  return {{"error", err}};
}

TransportProvider env_transport_provider() {
  struct Holder {
    std::mutex mu;
    std::map<std::string, std::unique_ptr<ChatTransport>> by_session;
  };
  auto holder = std::make_shared<Holder>();
  return [holder](const std::string& session_id) -> ChatTransport& {
    const auto config = HttpTransportConfig::from_env();
    if (!config) throw Error(ErrorKind::TransportFailure, "KDISC_LLM_ENDPOINT is not set");
    std::lock_guard lock(holder->mu);
    auto& slot = holder->by_session[session_id];
    if (!slot) slot = std::make_unique<HttpChatTransport>(*config);
    return *slot;
  };
}

struct Service::Server {
  httplib::Server http;
  std::atomic<int> port{0};
};

Service::Service(std::filesystem::path data_dir, TransportProvider transports, std::size_t discovery_workers)
    : store_(std::move(data_dir)),
      transports_(std::move(transports)),
      workers_(discovery_workers),
      server_(std::make_shared<Server>()) {}

std::mutex& Service::lock_for(const std::string& key) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

ServiceResponse Service::handle(const ServiceRequest& request) {
  const auto parts = split_path(request.path);
  const bool mutating = request.method != "GET";
  try {
    if (!mutating) return dispatch(request, parts);
    const std::string scope = parts.size() >= 2 && parts[0] == "sessions" ? parts[1] : std::string("_global");
    std::lock_guard lock(lock_for(scope));
    const std::string token =
        request.idempotency_key.empty() ? "" : request.method + " " + request.path + " " + request.idempotency_key;
    if (!token.empty())
      if (auto cached = store_.recall(token))
        return ServiceResponse{cached->at("status").get<int>(), cached->at("body").get<std::string>(),
                               cached->at("content_type").get<std::string>()};
    auto response = dispatch(request, parts);
    if (!token.empty() && response.status < 500)
      store_.remember(token, {{"status", response.status}, {"body", response.body}, {"content_type", response.content_type}});
    return response;
  } catch (const Error& e) {
    return json_response(http_status(e.kind()), error_body(e));
  } catch (const std::exception& e) {
    return json_response(500, {{"error", {{"kind", "Internal"}, {"message", e.what()}}}});
  }
}

ServiceResponse Service::dispatch(const ServiceRequest& req, const std::vector<std::string>& p) {
  const auto& m = req.method;
  const auto n = p.size();
  if (n == 1 && p[0] == "health" && m == "GET") return json_response(200, {{"status", "ok"}});

  if (n >= 1 && p[0] == "logs") {
    if (n == 1 && m == "POST") return json_response(201, upload_log(req));
    if (n == 1 && m == "GET") {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& a : store_.list(ArtifactKind::Log))
        out.push_back({{"id", a.id}, {"name", a.name}, {"created_at", a.created_at}});
      return json_response(200, {{"logs", out}});
    }
    if (n == 2 && m == "GET") {
      const auto info = store_.log_info(p[1]);
      const auto log = store_.get_log(p[1]);
      return json_response(200, {{"id", info.id}, {"name", info.name}, {"created_at", info.created_at},
                                 {"variants", log.variants().size()}, {"traces", log.total_traces()},
                                 {"activities", log.alphabet()}});
    }
    if (n == 3 && p[2] == "activities" && m == "GET")
      return json_response(200, {{"activities", store_.get_log(p[1]).alphabet()}});
  }

  if (n >= 1 && p[0] == "sessions") {
    if (n == 1 && m == "POST") return json_response(201, create_session(parse_body(req.body)));
    if (n == 1 && m == "GET") {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& a : store_.list(ArtifactKind::Session))
        out.push_back({{"id", a.id}, {"created_at", a.created_at}});
      return json_response(200, {{"sessions", out}});
    }
    if (n == 2 && m == "GET") return json_response(200, session_view(p[1]));
    if (n == 3) {
      const auto& id = p[1];
      const auto& what = p[2];
      if (m == "POST" && (what == "context" || what == "answers" || what == "feedback"))
        return json_response(200, llm_turn(id, what, parse_body(req.body)));
      if (what == "rules" && m == "GET") return json_response(200, rules_view(store_.get_session(id)));
      if (what == "rules" && m == "PUT") {
        auto out = put_rules(id, parse_body(req.body));
        const int status = out.at("report").at("verdict") == "pass" ? 200 : 422;
        return json_response(status, out);
      }
      if (what == "discover" && m == "POST") return json_response(200, discover(id, parse_body(req.body)));
      if (what == "transcript" && m == "GET")
        return json_response(200, {{"transcript", store_.get_session(id).transcript()}});
      if (what == "validation" && m == "GET")
        return json_response(200, {{"validation_history", store_.get_session(id).validation_history()}});
      if (what == "models" && m == "GET") {
        const auto session = store_.get_session(id);
        nlohmann::json out = nlohmann::json::array();
        for (std::size_t i = 0; i < session.model_iterations().size(); ++i) {
          const auto& it = session.model_iterations()[i];
          out.push_back({{"iteration", i}, {"sup", it.sup}, {"rules", rule_texts(it.rules)},
                         {"tree_text", to_tree_text(it.tree)}});
        }
        return json_response(200, {{"models", out}});
      }
    }
    if (n == 4 && p[2] == "models" && m == "GET")
      return json_response(200, model_view(store_.get_session(p[1]), parse_index(p[3])));
    if (n == 5 && p[2] == "models" && p[4] == "dot" && m == "GET") {
      const auto session = store_.get_session(p[1]);
      const auto index = parse_index(p[3]);
      if (index >= session.model_iterations().size())
        throw Error(ErrorKind::NotFound, "no model iteration " + std::to_string(index));
      return ServiceResponse{200, export_model(session.model_iterations()[index].tree, ExportFormat::Dot),
                             "text/vnd.graphviz"};
    }
  }
  throw Error(ErrorKind::NotFound, "no route " + m + " " + req.path);
}

nlohmann::json Service::upload_log(const ServiceRequest& req) {
  const auto format_it = req.query.find("format");
  const std::string format = format_it == req.query.end() ? "variants" : format_it->second;
  const auto name_it = req.query.find("name");
  const std::string name = name_it == req.query.end() ? "" : name_it->second;
  EventLog log;
  if (format == "csv") {
    std::istringstream in(req.body);
    log = parse_csv_log(in);
  } else if (format == "variants") {
    log = parse_variants(req.body);
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown log format '" + format + "'");
  }
  const auto info = store_.put_log(log, name);
  return {{"id", info.id}, {"name", name}, {"variants", log.variants().size()}, {"traces", log.total_traces()},
          {"activities", log.alphabet()}};
}

nlohmann::json Service::create_session(const nlohmann::json& body) {
  const auto log_id = text_field(body, "log_id");
  const double sup = body.value("sup", 0.2);
  if (!(sup >= 0.0 && sup <= 1.0)) throw Error(ErrorKind::InvalidArgument, "sup must lie in [0, 1]");
  const auto log = store_.get_log(log_id);
  const auto max_repairs = body.value("max_repairs", RefinementSession::kDefaultMaxRepairs);
  RefinementSession session(store_.new_id(ArtifactKind::Session), log_id, log.alphabet(), max_repairs);
  store_.create_session(session, {{"log_id", log_id}, {"sup", sup}});
  return session_view(session.id());
}

nlohmann::json Service::session_view(const std::string& id) {
  const auto session = store_.get_session(id);
  const auto meta = store_.session_meta(id);
  return {{"id", session.id()},
          {"log_id", session.log_ref()},
          {"sup", meta.value("sup", 0.2)},
          {"state", to_string(session.state())},
          {"round", session.round()},
          {"rules", rules_view(session).at("rules")},
          {"models", session.model_iterations().size()},
          {"transcript_length", session.transcript().size()}};
}

nlohmann::json Service::rules_view(const RefinementSession& session) {
  nlohmann::json rules = nlohmann::json::array();
  for (std::size_t i = 0; i < session.rules().size(); ++i) {
    const auto& r = session.rules()[i];
    rules.push_back({{"index", i}, {"rule", format_rule(r.rule)}, {"enabled", r.enabled}, {"round", r.round}});
  }
  return {{"rules", rules}};
}

nlohmann::json Service::llm_turn(const std::string& id, const std::string& kind, const nlohmann::json& body) {
  auto session = store_.get_session(id);
  const auto text = text_field(body, "text");
  if (kind == "context" && session.state() != SessionState::Init && session.state() != SessionState::ContextGiven)
    throw Error(ErrorKind::InvalidState, "context is only accepted before rules exist");
  if (kind == "answers" && session.state() != SessionState::AwaitingAnswers)
    throw Error(ErrorKind::InvalidState, "no open questions");
  ChatTransport& transport = transports_(id);
  ProposalOutcome outcome;
  try {
    outcome = kind == "feedback" ? session.integrate_feedback(transport, text) : session.propose_rules(transport, text);
  } catch (const RepairExhaustedError&) {
    store_.save_session(session);
    throw;
  }
  store_.save_session(session);
  return {{"state", to_string(session.state())},
          {"questions", outcome.questions},
          {"rules", rule_texts(outcome.rules)},
          {"report", outcome.report},
          {"repairs", outcome.repairs},
          {"current_rules", rules_view(session).at("rules")}};
}

nlohmann::json Service::put_rules(const std::string& id, const nlohmann::json& body) {
  auto session = store_.get_session(id);
  if (!body.contains("rules") || !body["rules"].is_array())
    throw Error(ErrorKind::InvalidArgument, "missing array field 'rules'");
  std::vector<SessionRule> rules;
  ValidationReport parse_report;
  std::size_t index = 0;
  for (const auto& entry : body["rules"]) {
    const std::string text = entry.is_string() ? entry.get<std::string>() : entry.value("rule", "");
    const bool enabled = entry.is_object() ? entry.value("enabled", true) : true;
    const std::size_t round = entry.is_object() ? entry.value("round", session.round()) : session.round();
    try {
      rules.push_back(SessionRule{parse_rule(text), enabled, round});
    } catch (const Error& e) {
      ValidationItem item;
      item.index = index;
      item.kind = std::string(to_string(e.kind()));
      item.message = e.what();
      item.line = text;
      parse_report.items.push_back(std::move(item));
    }
    ++index;
  }
  if (!parse_report.passed()) return {{"report", parse_report}, {"rules", rules_view(session).at("rules")}};
  auto report = session.replace_rules(std::move(rules));
  store_.save_session(session);
  return {{"report", report}, {"rules", rules_view(session).at("rules")}};
}

nlohmann::json Service::discover(const std::string& id, const nlohmann::json& body) {
  auto session = store_.get_session(id);
  auto meta = store_.session_meta(id);
  DiscoveryParams params;
  params.sup = body.value("sup", meta.value("sup", 0.2));
  if (!(params.sup >= 0.0 && params.sup <= 1.0)) throw Error(ErrorKind::InvalidArgument, "sup must lie in [0, 1]");
  params.workers = body.value("workers", workers_);
  meta["sup"] = params.sup;
  const auto log = store_.get_log(session.log_ref());
  const auto rules = session.enabled_rules();
  const auto report = run_discovery(log, rules, params);
  session.record_model(params.sup, report.tree);
  const std::size_t iteration = session.model_iterations().size() - 1;
  auto doc = to_json(report);
  doc["session_id"] = id;
  doc["iteration"] = iteration;
  doc["sup"] = params.sup;
  doc["rules"] = rule_texts(rules);
  doc["dot"] = export_model(report.tree, ExportFormat::Dot);
  const auto model = store_.put_model(doc);
  doc["model_id"] = model.id;
  store_.save_session(session, meta);
  return doc;
}

nlohmann::json Service::model_view(const RefinementSession& session, std::size_t index) {
  if (index >= session.model_iterations().size())
    throw Error(ErrorKind::NotFound, "no model iteration " + std::to_string(index));
  const auto& it = session.model_iterations()[index];
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : verify_rules(it.tree, it.rules)) verdicts.push_back(to_json(v));
  return {{"iteration", index},
          {"sup", it.sup},
          {"rules", rule_texts(it.rules)},
          {"tree", it.tree},
          {"tree_text", to_tree_text(it.tree)},
          {"dot", export_model(it.tree, ExportFormat::Dot)},
          {"verification", verdicts}};
}

void Service::serve(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorKind::InvalidArgument, "bind address must be host:port");
  const std::string host = bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "bad port in '" + bind + "'");
  }
  auto forward = [this](const httplib::Request& req, httplib::Response& res) {
    ServiceRequest sr;
    sr.method = req.method;
    sr.path = req.path;
    for (const auto& [k, v] : req.params) sr.query[k] = v;
    sr.body = req.body;
    sr.idempotency_key = req.get_header_value("Idempotency-Key");
    const auto out = handle(sr);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  const std::string any = R"(/.*)";
  server_->http.Get(any, forward);
  server_->http.Post(any, forward);
  server_->http.Put(any, forward);
  server_->http.Delete(any, forward);
  server_->http.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server_->http.Options(any, [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
    res.status = 204;
  });
  if (port == 0) {
    const int bound = server_->http.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + bind);
    server_->port = bound;
  } else {
    if (!server_->http.bind_to_port(host, port)) throw Error(ErrorKind::Io, "cannot bind " + bind);
    server_->port = port;
  }
  server_->http.listen_after_bind();
}

void Service::stop() { server_->http.stop(); }

int Service::port() const { return server_->port.load(); }

}  // namespace kdisc
