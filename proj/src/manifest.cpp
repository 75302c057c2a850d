#include "trajkit/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "trajkit/errors.hpp"

namespace trajkit {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void RunManifest::add_input(const std::string& path) { inputs.push_back({path, file_digest(path)}); }

std::string toolkit_version() {
#ifdef TRAJKIT_VERSION
  return TRAJKIT_VERSION;
#else
  return "unknown";
#endif
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& in : m.inputs) inputs.push_back({{"path", in.path}, {"fnv1a64", in.fnv1a64}});
  return {{"command", m.command},   {"argv", m.argv},       {"config", m.config},
          {"inputs", inputs},       {"outputs", m.outputs},  {"seed", m.seed},       {"version", m.version},
          {"timings_ms", m.timings_ms}};
}

RunManifest manifest_from_json(const nlohmann::json& doc) {
  try {
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.config = doc.value("config", nlohmann::json::object());
    for (const auto& in : doc.value("inputs", nlohmann::json::array())) {
      m.inputs.push_back({in.at("path").get<std::string>(), in.at("fnv1a64").get<std::string>()});
    }
    m.outputs = doc.value("outputs", std::vector<std::string>{});
    m.seed = doc.value("seed", std::uint64_t{0});
    m.version = doc.value("version", std::string{});
    if (doc.contains("timings_ms")) m.timings_ms = doc["timings_ms"].get<std::map<std::string, double>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
}

nlohmann::json strip_timings(nlohmann::json doc) {
  if (doc.is_object()) {
    if (doc.contains("manifest") && doc["manifest"].is_object()) doc["manifest"].erase("timings_ms");
    if (doc.contains("timings_ms") && doc.contains("command")) doc.erase("timings_ms");
  }
  return doc;
}

}  // namespace trajkit
