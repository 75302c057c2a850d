#include "trajkit/scene_io.hpp"

#include <array>
#include <charconv>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "trajkit/errors.hpp"
#include "trajkit/format.hpp"

namespace trajkit {
namespace {

nlohmann::json track_to_json(const Track& t) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index j = 0; j < t.cols(); ++j) arr.push_back({t(0, j), t(1, j)});
  return arr;
}

Track track_from_json(const nlohmann::json& arr) {
  if (!arr.is_array()) throw DataError("track must be an array of [x, y] pairs");
  Track t(2, static_cast<Eigen::Index>(arr.size()));
  for (std::size_t j = 0; j < arr.size(); ++j) {
    const auto& p = arr[j];
    if (!p.is_array() || p.size() != 2) throw DataError("track point must be [x, y]");
    t(0, static_cast<Eigen::Index>(j)) = p[0].get<double>();
    t(1, static_cast<Eigen::Index>(j)) = p[1].get<double>();
  }
  if (!t.allFinite()) throw DataError("track contains non-finite coordinates");
  return t;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

long parse_index(const std::string& s, std::size_t line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw ParseError(line, "bad index '" + s + "'");
  }
  return v;
}

double parse_real(const std::string& s, std::size_t line) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(line, "bad number '" + s + "'");
  }
  if (!std::isfinite(v)) throw DataError("line " + std::to_string(line) + ": non-finite value");
  return v;
}

}  // namespace

nlohmann::json scenes_to_json(const std::vector<Scene>& scenes) {
  auto doc = nlohmann::json::array();
  for (const auto& s : scenes) {
    nlohmann::json obs = nlohmann::json::array();
    nlohmann::json fut = nlohmann::json::array();
    for (const auto& t : s.observed) obs.push_back(track_to_json(t));
    for (const auto& t : s.future) fut.push_back(track_to_json(t));
    doc.push_back({{"agent_ids", s.agent_ids},
                   {"observed", std::move(obs)},
                   {"future", std::move(fut)},
                   {"stride_seconds", s.frame_stride_seconds}});
  }
  return doc;
}

std::vector<Scene> scenes_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw DataError("scenes document must be a JSON array");
  std::vector<Scene> scenes;
  scenes.reserve(doc.size());
  for (const auto& item : doc) {
    Scene s;
    s.agent_ids = item.at("agent_ids").get<std::vector<std::int64_t>>();
    for (const auto& t : item.at("observed")) s.observed.push_back(track_from_json(t));
    for (const auto& t : item.at("future")) s.future.push_back(track_from_json(t));
    s.frame_stride_seconds = item.value("stride_seconds", 0.4);
    s.validate();
    scenes.push_back(std::move(s));
  }
  return scenes;
}

std::vector<Scene> load_scenes(const std::string& path, const WindowConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scene file: " + path);
  char first = 0;
  while (in.get(first) && std::isspace(static_cast<unsigned char>(first))) {
  }
  in.clear();
  in.seekg(0);
  if (first == '[' || first == '{') {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": " + e.what());
    }
    return scenes_from_json(doc);
  }
  return make_scenes(parse_tracks(in), cfg);
}

std::vector<PredictionSet> read_predictions_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_csv(line);
    break;
  }
  const std::vector<std::string> plain{"sample", "agent", "t", "x", "y"};
  const std::vector<std::string> scoped{"scene", "sample", "agent", "t", "x", "y"};
  bool has_scene = false;
  if (header == scoped) {
    has_scene = true;
  } else if (header != plain) {
    throw ParseError(line_no, "expected header 'sample,agent,t,x,y' (optionally led by 'scene')");
  }

  using Key = std::tuple<long, long, long, long>;  // scene, sample, agent, t
  std::map<Key, Point> cells;
  std::array<long, 4> max_index{-1, -1, -1, -1};
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields");
    }
    std::size_t i = 0;
    const long scene = has_scene ? parse_index(f[i++], line_no) : 0;
    const long sample = parse_index(f[i++], line_no);
    const long agent = parse_index(f[i++], line_no);
    const long t = parse_index(f[i++], line_no);
    const double x = parse_real(f[i++], line_no);
    const double y = parse_real(f[i++], line_no);
    if (!cells.emplace(Key{scene, sample, agent, t}, Point(x, y)).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate prediction cell");
    }
    max_index = {std::max(max_index[0], scene), std::max(max_index[1], sample),
                 std::max(max_index[2], agent), std::max(max_index[3], t)};
  }
  if (cells.empty()) return {};

  // Shapes are inferred per scene so scenes may differ in agent count.
  std::vector<PredictionSet> sets(static_cast<std::size_t>(max_index[0] + 1));
  std::vector<std::array<long, 3>> dims(sets.size(), {-1, -1, -1});
  for (const auto& [key, p] : cells) {
    auto& d = dims[static_cast<std::size_t>(std::get<0>(key))];
    d = {std::max(d[0], std::get<1>(key)), std::max(d[1], std::get<2>(key)),
         std::max(d[2], std::get<3>(key))};
  }
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& d = dims[s];
    if (d[0] < 0) throw DataError("scene " + std::to_string(s) + " has no predictions");
    const auto n_samples = static_cast<std::size_t>(d[0] + 1);
    const auto n_agents = static_cast<std::size_t>(d[1] + 1);
    const auto horizon = static_cast<Eigen::Index>(d[2] + 1);
    auto& set = sets[s];
    set.scene_ref = std::to_string(s);
    set.samples.assign(n_samples, TrackSet(n_agents, Track::Constant(2, horizon, NAN)));
  }
  for (const auto& [key, p] : cells) {
    auto& set = sets[static_cast<std::size_t>(std::get<0>(key))];
    set.samples[static_cast<std::size_t>(std::get<1>(key))][static_cast<std::size_t>(
        std::get<2>(key))]
        .col(static_cast<Eigen::Index>(std::get<3>(key))) = p;
  }
  for (const auto& set : sets) {
    for (const auto& sample : set.samples) {
      for (const auto& track : sample) {
        if (!track.allFinite()) {
          throw DataError("predictions for scene " + set.scene_ref +
                          " are incomplete (missing sample/agent/t cells)");
        }
      }
    }
  }
  return sets;
}

std::vector<PredictionSet> read_predictions_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions file: " + path);
  return read_predictions_csv(in);
}

void write_predictions_csv(std::ostream& out, const std::vector<PredictionSet>& sets) {
  const bool scoped = sets.size() > 1;
  out << (scoped ? "scene,sample,agent,t,x,y\n" : "sample,agent,t,x,y\n");
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    for (std::size_t i = 0; i < set.samples.size(); ++i) {
      for (std::size_t n = 0; n < set.samples[i].size(); ++n) {
        const Track& t = set.samples[i][n];
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
          if (scoped) out << s << ',';
          out << i << ',' << n << ',' << j << ',' << format_real(t(0, j)) << ','
              << format_real(t(1, j)) << '\n';
        }
      }
    }
  }
}

}  // namespace trajkit
