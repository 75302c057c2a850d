#include "trajkit/trajdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include "trajkit/errors.hpp"

namespace trajkit {
namespace {

// Frame and agent ids are often written as floats ("780.0") in ETH/UCY dumps.
std::int64_t parse_id(const std::string& token, std::size_t line, const char* field) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, std::string("bad ") + field + " '" + token + "'");
  }
  if (!std::isfinite(value) || std::floor(value) != value) {
    throw ParseError(line, std::string(field) + " is not an integer: '" + token + "'");
  }
  return static_cast<std::int64_t>(value);
}

double parse_coord(const std::string& token, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line, "bad coordinate '" + token + "'");
  }
  return value;
}

Track concat(const Track& a, const Track& b) {
  Track out(2, a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

void Scene::validate() const {
  if (observed.empty()) throw ContractError("scene has no agents");
  if (observed.size() != future.size() || observed.size() != agent_ids.size()) {
    throw ContractError("scene agent counts disagree between observed/future/ids");
  }
  if (t_obs() < 2) throw ContractError("scene needs at least two observed steps");
  if (t_pred() < 1) throw ContractError("scene needs at least one future step");
  if (!(frame_stride_seconds > 0.0)) throw ContractError("frame stride must be positive");
}

void WindowConfig::validate() const {
  if (t_obs < 2) throw ContractError("t_obs must be >= 2");
  if (t_pred < 1) throw ContractError("t_pred must be >= 1");
  if (stride < 1) throw ContractError("stride must be >= 1");
  if (!(seconds_per_step > 0.0)) throw ContractError("seconds_per_step must be positive");
}

std::vector<RawTrack> parse_tracks(std::istream& in) {
  std::vector<RawTrack> out;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    std::istringstream fields(text);
    std::vector<std::string> tokens;
    for (std::string tok; fields >> tok;) tokens.push_back(std::move(tok));
    if (tokens.empty()) continue;
    if (tokens.size() != 4) {
      throw ParseError(line_no, "expected 4 fields 'frame agent x y', got " +
                                    std::to_string(tokens.size()));
    }
    RawTrack rec;
    rec.frame_id = parse_id(tokens[0], line_no, "frame id");
    rec.agent_id = parse_id(tokens[1], line_no, "agent id");
    rec.position = Point(parse_coord(tokens[2], line_no), parse_coord(tokens[3], line_no));
    if (!rec.position.allFinite()) {
      throw DataError("line " + std::to_string(line_no) + ": non-finite coordinate");
    }
    if (!seen.emplace(rec.frame_id, rec.agent_id).second) {
      throw DataError("line " + std::to_string(line_no) + ": duplicate (frame " +
                      std::to_string(rec.frame_id) + ", agent " +
                      std::to_string(rec.agent_id) + ")");
    }
    out.push_back(rec);
  }
  return out;
}

std::vector<Scene> make_scenes(const std::vector<RawTrack>& tracks, const WindowConfig& cfg) {
  cfg.validate();
  std::vector<std::int64_t> frames;
  frames.reserve(tracks.size());
  for (const auto& t : tracks) frames.push_back(t.frame_id);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::map<std::int64_t, std::size_t> frame_index;
  for (std::size_t i = 0; i < frames.size(); ++i) frame_index[frames[i]] = i;

  // agent -> (frame index -> position)
  std::map<std::int64_t, std::map<std::size_t, Point>> by_agent;
  for (const auto& t : tracks) by_agent[t.agent_id][frame_index.at(t.frame_id)] = t.position;

  const auto window = static_cast<std::size_t>(cfg.t_obs + cfg.t_pred);
  std::vector<Scene> scenes;
  if (frames.size() < window) return scenes;

  for (std::size_t start = 0; start + window <= frames.size();
       start += static_cast<std::size_t>(cfg.stride)) {
    Scene scene;
    scene.frame_stride_seconds = cfg.seconds_per_step;
    for (const auto& [agent, positions] : by_agent) {
      auto first = positions.find(start);
      if (first == positions.end()) continue;
      Track full(2, static_cast<Eigen::Index>(window));
      bool complete = true;
      auto it = first;
      for (std::size_t k = 0; k < window; ++k, ++it) {
        if (it == positions.end() || it->first != start + k) {
          complete = false;
          break;
        }
        full.col(static_cast<Eigen::Index>(k)) = it->second;
      }
      if (!complete) continue;
      scene.observed.push_back(full.leftCols(cfg.t_obs));
      scene.future.push_back(full.rightCols(cfg.t_pred));
      scene.agent_ids.push_back(agent);
    }
    if (!scene.observed.empty()) scenes.push_back(std::move(scene));
  }
  return scenes;
}

Scene augment(const Scene& scene, const AugmentOps& ops, std::uint64_t rng_seed) {
  scene.validate();
  Scene out = scene;

  if (ops.merge_with != nullptr) {
    const Scene& other = *ops.merge_with;
    other.validate();
    if (other.t_obs() != out.t_obs() || other.t_pred() != out.t_pred()) {
      throw ContractError("cannot merge scenes with different horizons");
    }
    out.observed.insert(out.observed.end(), other.observed.begin(), other.observed.end());
    out.future.insert(out.future.end(), other.future.begin(), other.future.end());
    out.agent_ids.insert(out.agent_ids.end(), other.agent_ids.begin(), other.agent_ids.end());
  }

  const auto t_obs = static_cast<Eigen::Index>(out.t_obs());
  const auto t_pred = static_cast<Eigen::Index>(out.t_pred());

  if (ops.reverse) {
    if (t_obs != t_pred) {
      throw UnsupportedOperation("reverse needs t_obs == t_pred (got " + std::to_string(t_obs) +
                                 " and " + std::to_string(t_pred) + ")");
    }
    for (std::size_t n = 0; n < out.num_agents(); ++n) {
      Track full = concat(out.observed[n], out.future[n]).rowwise().reverse();
      out.observed[n] = full.leftCols(t_obs);
      out.future[n] = full.rightCols(t_pred);
    }
  }

  if (ops.speed_factor) {
    const double f = *ops.speed_factor;
    for (std::size_t n = 0; n < out.num_agents(); ++n) {
      Track full = concat(out.observed[n], out.future[n]);
      const Point anchor = full.col(0);
      full = (f * (full.colwise() - anchor)).colwise() + anchor;
      out.observed[n] = full.leftCols(t_obs);
      out.future[n] = full.rightCols(t_pred);
    }
  }

  auto apply_linear = [&out](const Eigen::Matrix2d& m) {
    for (auto& t : out.observed) t = m * t;
    for (auto& t : out.future) t = m * t;
  };
  if (ops.rotation_rad) {
    const double c = std::cos(*ops.rotation_rad);
    const double s = std::sin(*ops.rotation_rad);
    Eigen::Matrix2d rot;
    rot << c, -s, s, c;
    apply_linear(rot);
  }
  if (ops.flip_xy) {
    for (auto& t : out.observed) t.row(0).swap(t.row(1));
    for (auto& t : out.future) t.row(0).swap(t.row(1));
  }

  if (ops.jitter_half_width) {
    const double w = *ops.jitter_half_width;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> noise(-w, w);
    for (auto* set : {&out.observed, &out.future}) {
      for (auto& t : *set) {
        for (Eigen::Index j = 0; j < t.cols(); ++j) {
          t(0, j) += noise(rng);
          t(1, j) += noise(rng);
        }
      }
    }
  }
  return out;
}

}  // namespace trajkit
