#include "kdisc/transport.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <httplib.h>
#include <openssl/evp.h>

#include "kdisc/error.hpp"

namespace kdisc {

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::TransportFailure, "sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

std::string wire_role(Speaker s) {
  switch (s) {
    case Speaker::System: return "system";
    case Speaker::Expert: return "user";
    case Speaker::Assistant: return "assistant";
  }
  return "user";
}

}  // namespace

std::string request_digest(const std::vector<ChatMessage>& messages) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& m : messages) j.push_back(m);
  return sha256_hex(j.dump());
}

std::vector<TranscriptRecord> transcript_from_json(const nlohmann::json& j) {
  std::vector<TranscriptRecord> out;
  for (const auto& r : j.at("records"))
    out.push_back(TranscriptRecord{r.at("digest").get<std::string>(), r.at("response").get<std::string>()});
  return out;
}

nlohmann::json transcript_to_json(const std::vector<TranscriptRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) arr.push_back({{"digest", r.digest}, {"response", r.response}});
  return {{"records", arr}};
}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open transcript " + path.string());
  try {
    return transcript_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedLine, "bad transcript " + path.string() + ": " + e.what());
  }
}

void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write transcript " + path.string());
  out << transcript_to_json(records).dump(2) << '\n';
}

ScriptedTransport::ScriptedTransport(std::vector<TranscriptRecord> records) : records_(std::move(records)) {}

std::string ScriptedTransport::send(const std::vector<ChatMessage>& messages) {
  std::lock_guard lock(mu_);
  if (next_ >= records_.size())
    throw Error(ErrorKind::TransportFailure, "scripted transcript exhausted after " + std::to_string(next_) + " calls");
  const auto& record = records_[next_];
  if (record.digest != "*") {
    const auto digest = request_digest(messages);
    if (digest != record.digest)
      throw Error(ErrorKind::TransportFailure, "request " + std::to_string(next_) + " digest " + digest +
                                                   " does not match transcript " + record.digest);
  }
  ++next_;
  return record.response;
}

std::size_t ScriptedTransport::consumed() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::size_t ScriptedTransport::remaining() const {
  std::lock_guard lock(mu_);
  return records_.size() - next_;
}

std::string RecordingTransport::send(const std::vector<ChatMessage>& messages) {
  auto response = inner_.send(messages);
  std::lock_guard lock(mu_);
  records_.push_back(TranscriptRecord{request_digest(messages), response});
  return response;
}

std::vector<TranscriptRecord> RecordingTransport::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::optional<HttpTransportConfig> HttpTransportConfig::from_env() {
  const char* endpoint = std::getenv("KDISC_LLM_ENDPOINT");
  if (!endpoint || !*endpoint) return std::nullopt;
  HttpTransportConfig c;
  c.endpoint = endpoint;
  if (const char* m = std::getenv("KDISC_LLM_MODEL")) c.model = m;
  if (const char* k = std::getenv("KDISC_LLM_API_KEY")) c.api_key = k;
  return c;
}

HttpChatTransport::HttpChatTransport(HttpTransportConfig config) : config_(std::move(config)) {
  const auto scheme = config_.endpoint.find("://");
  if (scheme == std::string::npos)
    throw Error(ErrorKind::InvalidArgument, "endpoint needs a scheme: " + config_.endpoint);
  const auto slash = config_.endpoint.find('/', scheme + 3);
  base_ = config_.endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : config_.endpoint.substr(slash);
}

nlohmann::json HttpChatTransport::request_body(const std::string& model, const std::vector<ChatMessage>& messages) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", wire_role(m.speaker)}, {"content", m.text}});
  nlohmann::json body{{"messages", msgs}, {"temperature", 0}};
  if (!model.empty()) body["model"] = model;
  return body;
}

std::string HttpChatTransport::parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::TransportFailure, std::string("unexpected response body: ") + e.what());
  }
}

std::string HttpChatTransport::send(const std::vector<ChatMessage>& messages) {
  httplib::Client client(base_);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const auto res = client.Post(path_, headers, request_body(config_.model, messages).dump(), "application/json");
  if (!res) throw Error(ErrorKind::TransportFailure, "request to " + config_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw Error(ErrorKind::TransportFailure, "endpoint returned HTTP " + std::to_string(res->status));
  return parse_response(res->body);
}

}  // namespace kdisc
