#include "rcsl/cli/manifest.hpp"

#include <ctime>
#include <iterator>

#include "json.hpp"
#include "rcsl/error.hpp"
#include "rcsl/numkit/wire.hpp"

namespace rcsl::cli {

using json = nlohmann::ordered_json;

void RunManifest::validate() const {
  if (tool.empty()) throw ValidationError("manifest: tool name must not be empty");
  if (version.empty()) throw ValidationError("manifest: version must not be empty");
  if (command.empty()) throw ValidationError("manifest: command must not be empty");
  if (started_at.empty()) throw ValidationError("manifest: start timestamp must not be empty");
  if (complete && finished_at.empty())
    throw ValidationError("manifest: a complete run needs a finish timestamp");
  for (const std::string& a : artifacts)
    if (a.empty()) throw ValidationError("manifest: artifact paths must not be empty");
}

std::string now_utc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string render_manifest(const RunManifest& m) {
  m.validate();
  json j;
  j["tool"] = m.tool;
  j["version"] = m.version;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["env"] = m.env_id;
  j["config"] = m.config_text;
  j["artifacts"] = m.artifacts;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["complete"] = m.complete;
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest: not valid JSON: ") + e.what());
  }
  const char* required[] = {"tool",      "version",    "command",     "seed",     "env",
                            "config",    "artifacts",  "started_at",  "finished_at",
                            "complete"};
  for (const char* k : required)
    if (!j.contains(k)) throw ValidationError(std::string("manifest: missing field '") + k + "'");
  if (j.size() != std::size(required))
    throw ValidationError("manifest: unexpected extra fields");
  RunManifest m;
  try {
    m.tool = j["tool"].get<std::string>();
    m.version = j["version"].get<std::string>();
    m.command = j["command"].get<std::string>();
    m.seed = j["seed"].get<std::uint64_t>();
    m.env_id = j["env"].get<std::string>();
    m.config_text = j["config"].get<std::string>();
    m.artifacts = j["artifacts"].get<std::vector<std::string>>();
    m.started_at = j["started_at"].get<std::string>();
    m.finished_at = j["finished_at"].get<std::string>();
    m.complete = j["complete"].get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: wrong field type: ") + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  numkit::wire::spit(path, render_manifest(m), "manifest");
}

RunManifest read_manifest(const std::string& path) {
  return parse_manifest(numkit::wire::slurp(path, "manifest"));
}

}  // namespace rcsl::cli
