#pragma once

// Provenance record written next to every command's outputs. The manifest
// lists each file the command produced (itself excepted), carries the exact
// config text the run was given, and flags runs that died partway so a
// directory of artifacts is never mistaken for a finished one.

#include <cstdint>
#include <string>
#include <vector>

namespace rcsl::cli {

inline constexpr const char* kToolName = "rcsl-align";
inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string tool = kToolName;
  std::string version = kToolVersion;
  std::string command;
  std::uint64_t seed = 0;
  std::string env_id;
  // Byte-identical snapshot of the run's configuration document.
  std::string config_text;
  // Every file the command wrote, in the order written. Paths are as the
  // command emitted them.
  std::vector<std::string> artifacts;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // empty while running or after a crash
  bool complete = false;    // false marks partial artifacts

  void validate() const;
};

// Current wall clock as "YYYY-MM-DDTHH:MM:SSZ".
std::string now_utc();

// JSON with a fixed key order; parse is the exact inverse. Unknown or
// missing fields are rejected.
std::string render_manifest(const RunManifest& m);
RunManifest parse_manifest(const std::string& text);

void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace rcsl::cli
