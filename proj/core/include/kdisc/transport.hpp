#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/prompt.hpp"

namespace kdisc {

/// Stateless chat endpoint: every call receives the full message history.
/// Failures surface as Error(TransportFailure).
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string send(const std::vector<ChatMessage>& messages) = 0;
};

/// Lowercase hex SHA-256 of the canonical JSON encoding of `messages`.
std::string request_digest(const std::vector<ChatMessage>& messages);

struct TranscriptRecord {
  std::string digest;  // "*" matches any request
  std::string response;

  bool operator==(const TranscriptRecord&) const = default;
};

std::vector<TranscriptRecord> transcript_from_json(const nlohmann::json& j);
nlohmann::json transcript_to_json(const std::vector<TranscriptRecord>& records);
std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records);

/// Replays records in order. A digest mismatch or running out of records is a
/// TransportFailure.
class ScriptedTransport : public ChatTransport {
 public:
  explicit ScriptedTransport(std::vector<TranscriptRecord> records);

  std::string send(const std::vector<ChatMessage>& messages) override;

  std::size_t consumed() const;
  std::size_t remaining() const;

 private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
  std::size_t next_ = 0;
};

/// Forwards to `inner` and keeps (digest, response) of every successful call.
class RecordingTransport : public ChatTransport {
 public:
  explicit RecordingTransport(ChatTransport& inner) : inner_(inner) {}

  std::string send(const std::vector<ChatMessage>& messages) override;
  std::vector<TranscriptRecord> records() const;

 private:
  ChatTransport& inner_;
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
};

struct HttpTransportConfig {
  std::string endpoint;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{120};

  /// KDISC_LLM_ENDPOINT, KDISC_LLM_MODEL, KDISC_LLM_API_KEY. Returns nullopt
  /// when the endpoint is unset.
  static std::optional<HttpTransportConfig> from_env();
};

/// Generic chat-completion client (messages with roles, temperature 0).
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(HttpTransportConfig config);

  std::string send(const std::vector<ChatMessage>& messages) override;

  static nlohmann::json request_body(const std::string& model, const std::vector<ChatMessage>& messages);
  static std::string parse_response(const std::string& body);

 private:
  HttpTransportConfig config_;
  std::string base_;
  std::string path_;
};

}  // namespace kdisc
