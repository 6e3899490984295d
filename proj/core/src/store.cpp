#include "kdisc/store.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <openssl/evp.h>

#include "kdisc/error.hpp"

namespace kdisc {

namespace fs = std::filesystem;

namespace {

std::string now_utc() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{days};
  const std::chrono::hh_mm_ss hms{now - days};
  std::ostringstream out;
  out << std::setfill('0') << int(ymd.year()) << '-' << std::setw(2) << unsigned(ymd.month()) << '-' << std::setw(2)
      << unsigned(ymd.day()) << 'T' << std::setw(2) << hms.hours().count() << ':' << std::setw(2)
      << hms.minutes().count() << ':' << std::setw(2) << hms.seconds().count() << 'Z';
  return out.str();
}

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') return false;
  return true;
}

std::string token_file(const std::string& token) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(token.data(), token.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str() + ".json";
}

}  // namespace

std::string_view to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::Log: return "log";
    case ArtifactKind::Session: return "session";
    case ArtifactKind::Model: return "model";
  }
  return "log";
}

Store::Store(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  for (auto k : {ArtifactKind::Log, ArtifactKind::Session, ArtifactKind::Model}) fs::create_directories(dir(k), ec);
  fs::create_directories(root_ / "idempotency", ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create data directory " + root_.string() + ": " + ec.message());
}

fs::path Store::dir(ArtifactKind kind) const { return root_ / (std::string(to_string(kind)) + "s"); }

fs::path Store::file(ArtifactKind kind, const std::string& id) const {
  if (!valid_id(id)) throw Error(ErrorKind::NotFound, std::string(to_string(kind)) + " '" + id + "' not found");
  return dir(kind) / (id + ".json");
}

nlohmann::json Store::read(ArtifactKind kind, const std::string& id) const {
  const auto path = file(kind, id);
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::NotFound, std::string(to_string(kind)) + " '" + id + "' not found");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "corrupt document " + path.string() + ": " + e.what());
  }
}

void Store::write(const fs::path& path, const nlohmann::json& doc) const {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot move " + tmp.string() + ": " + ec.message());
}

StoredArtifact Store::info(ArtifactKind kind, const nlohmann::json& doc) const {
  StoredArtifact a;
  a.id = doc.at("id").get<std::string>();
  a.kind = kind;
  a.created_at = doc.value("created_at", "");
  a.name = doc.value("name", "");
  a.path = dir(kind) / (a.id + ".json");
  return a;
}

std::string Store::new_id(ArtifactKind kind) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu_);
  while (true) {
    std::ostringstream id;
    id << to_string(kind) << '-' << std::hex << std::setw(12) << std::setfill('0') << (rng() & 0xffffffffffffULL);
    const auto path = dir(kind) / (id.str() + ".json");
    if (!fs::exists(path)) {
      std::ofstream(path).put('{');  // reserve; overwritten by the real document
      return id.str();
    }
  }
}

StoredArtifact Store::put_log(const EventLog& log, const std::string& name) {
  const auto id = new_id(ArtifactKind::Log);
  nlohmann::json doc{{"id", id}, {"kind", "log"}, {"created_at", now_utc()}, {"name", name},
                     {"variants", format_variants(log)}};
  write(file(ArtifactKind::Log, id), doc);
  return info(ArtifactKind::Log, doc);
}

EventLog Store::get_log(const std::string& id) const {
  return parse_variants(read(ArtifactKind::Log, id).at("variants").get<std::string>());
}

StoredArtifact Store::log_info(const std::string& id) const { return info(ArtifactKind::Log, read(ArtifactKind::Log, id)); }

StoredArtifact Store::create_session(const RefinementSession& session, const nlohmann::json& meta) {
  nlohmann::json doc{{"id", session.id()}, {"kind", "session"}, {"created_at", now_utc()}, {"meta", meta},
                     {"session", session.to_json()}};
  write(file(ArtifactKind::Session, session.id()), doc);
  return info(ArtifactKind::Session, doc);
}

void Store::save_session(const RefinementSession& session, const std::optional<nlohmann::json>& meta) {
  auto doc = read(ArtifactKind::Session, session.id());
  doc["session"] = session.to_json();
  if (meta) doc["meta"] = *meta;
  write(file(ArtifactKind::Session, session.id()), doc);
}

RefinementSession Store::get_session(const std::string& id) const {
  return RefinementSession::from_json(read(ArtifactKind::Session, id).at("session"));
}

nlohmann::json Store::session_meta(const std::string& id) const {
  return read(ArtifactKind::Session, id).value("meta", nlohmann::json::object());
}

StoredArtifact Store::put_model(const nlohmann::json& document) {
  const auto id = new_id(ArtifactKind::Model);
  nlohmann::json doc{{"id", id}, {"kind", "model"}, {"created_at", now_utc()}, {"model", document}};
  write(file(ArtifactKind::Model, id), doc);
  return info(ArtifactKind::Model, doc);
}

nlohmann::json Store::get_model(const std::string& id) const { return read(ArtifactKind::Model, id).at("model"); }

std::vector<StoredArtifact> Store::list(ArtifactKind kind) const {
  std::vector<StoredArtifact> out;
  for (const auto& entry : fs::directory_iterator(dir(kind))) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      out.push_back(info(kind, nlohmann::json::parse(in)));
    } catch (const std::exception&) {
      // reserved or half-written entry
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.created_at, a.id) < std::tie(b.created_at, b.id);
  });
  return out;
}

std::optional<nlohmann::json> Store::recall(const std::string& token) const {
  std::ifstream in(root_ / "idempotency" / token_file(token));
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void Store::remember(const std::string& token, const nlohmann::json& response) {
  write(root_ / "idempotency" / token_file(token), response);
}

}  // namespace kdisc
