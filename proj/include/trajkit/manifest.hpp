#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace trajkit {

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a 64 of a file's bytes as 16 lowercase hex digits. Throws DataError when unreadable.
std::string file_digest(const std::string& path);

struct InputDigest {
  std::string path;
  std::string fnv1a64;
};

/// Provenance block embedded in every emitted artifact.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // argv[1..], enough to replay the run
  nlohmann::json config = nlohmann::json::object();
  std::vector<InputDigest> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::string version;
  // Wall-clock phases in milliseconds. The only field allowed to differ between replays.
  std::map<std::string, double> timings_ms;

  void add_input(const std::string& path);
};

std::string toolkit_version();

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& doc);

/// Copy of an artifact document with every `manifest.timings_ms` removed.
nlohmann::json strip_timings(nlohmann::json doc);

}  // namespace trajkit
