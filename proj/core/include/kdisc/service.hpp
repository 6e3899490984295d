#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/discovery.hpp"
#include "kdisc/store.hpp"
#include "kdisc/transport.hpp"

namespace kdisc {

struct RuleVerdict {
  DeclareRule rule;
  std::string status;  // holds | violated | unknown
  std::optional<Trace> witness;
  bool exact = false;
};

/// Checks each rule on the bounded language of `tree` (two redo iterations).
std::vector<RuleVerdict> verify_rules(const ProcessTree& tree, const std::vector<DeclareRule>& rules);

struct DiscoveryReport {
  ProcessTree tree;
  std::optional<Cut> top_cut;
  std::size_t alphabet_size = 0;
  std::size_t variants = 0;
  std::uint64_t traces = 0;
  std::vector<RuleVerdict> verdicts;
};

/// Discovery plus verification; the one code path behind the CLI and the
/// HTTP service.
DiscoveryReport run_discovery(const EventLog& log, const std::vector<DeclareRule>& rules,
                              const DiscoveryParams& params);

nlohmann::json to_json(const RuleVerdict& v);
nlohmann::json to_json(const DiscoveryReport& report);

/// Error body used by the service: {"error": {"kind", "message", ...}}.
nlohmann::json error_body(const Error& e);
int http_status(ErrorKind kind);

struct ServiceRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
  std::string idempotency_key;
};

struct ServiceResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Transport used for a session's LLM turns.
using TransportProvider = std::function<ChatTransport&(const std::string& session_id)>;

/// Transport from KDISC_LLM_* variables; every call fails when unset.
TransportProvider env_transport_provider();

class Service {
 public:
  Service(std::filesystem::path data_dir, TransportProvider transports, std::size_t discovery_workers = 1);

  ServiceResponse handle(const ServiceRequest& request);

  /// Blocks until stop(). `bind` is host:port.
  void serve(const std::string& bind);
  void stop();
  /// Port actually bound (useful with port 0), once serve() is listening.
  int port() const;

  Store& store() { return store_; }

 private:
  ServiceResponse dispatch(const ServiceRequest& request, const std::vector<std::string>& parts);
  std::mutex& lock_for(const std::string& key);

  nlohmann::json upload_log(const ServiceRequest& request);
  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json session_view(const std::string& id);
  nlohmann::json llm_turn(const std::string& id, const std::string& kind, const nlohmann::json& body);
  nlohmann::json rules_view(const RefinementSession& session);
  nlohmann::json put_rules(const std::string& id, const nlohmann::json& body);
  nlohmann::json discover(const std::string& id, const nlohmann::json& body);
  nlohmann::json model_view(const RefinementSession& session, std::size_t index);

  Store store_;
  TransportProvider transports_;
  std::size_t workers_;
  std::mutex locks_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>> locks_;
  struct Server;
  std::shared_ptr<Server> server_;
};

}  // namespace kdisc
