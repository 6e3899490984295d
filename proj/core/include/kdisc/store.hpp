#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kdisc/event_log.hpp"
#include "kdisc/session.hpp"

namespace kdisc {

enum class ArtifactKind { Log, Session, Model };

std::string_view to_string(ArtifactKind k);

struct StoredArtifact {
  std::string id;
  ArtifactKind kind = ArtifactKind::Log;
  std::string created_at;  // ISO-8601 UTC
  std::filesystem::path path;
  std::string name;
};

/// One JSON document per artifact under <root>/<kind>s/<id>.json, written via
/// rename so readers never see partial files.
class Store {
 public:
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  StoredArtifact put_log(const EventLog& log, const std::string& name);
  EventLog get_log(const std::string& id) const;
  StoredArtifact log_info(const std::string& id) const;

  /// `meta` holds service-level settings (log id, sup) next to the session.
  StoredArtifact create_session(const RefinementSession& session, const nlohmann::json& meta = nlohmann::json::object());
  void save_session(const RefinementSession& session, const std::optional<nlohmann::json>& meta = std::nullopt);
  RefinementSession get_session(const std::string& id) const;
  nlohmann::json session_meta(const std::string& id) const;

  StoredArtifact put_model(const nlohmann::json& document);
  nlohmann::json get_model(const std::string& id) const;

  std::vector<StoredArtifact> list(ArtifactKind kind) const;

  /// Fresh opaque id for `kind`.
  std::string new_id(ArtifactKind kind);

  std::optional<nlohmann::json> recall(const std::string& token) const;
  void remember(const std::string& token, const nlohmann::json& response);

 private:
  std::filesystem::path dir(ArtifactKind kind) const;
  std::filesystem::path file(ArtifactKind kind, const std::string& id) const;
  nlohmann::json read(ArtifactKind kind, const std::string& id) const;
  void write(const std::filesystem::path& path, const nlohmann::json& doc) const;
  StoredArtifact info(ArtifactKind kind, const nlohmann::json& doc) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace kdisc
