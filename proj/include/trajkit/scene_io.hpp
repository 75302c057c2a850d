#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajkit/trajdata.hpp"
#include "trajkit/types.hpp"

namespace trajkit {

// scenes.json is a JSON array of
//   {"agent_ids": [..], "observed": [N][T_o][2], "future": [N][T_p][2],
//    "stride_seconds": s}
nlohmann::json scenes_to_json(const std::vector<Scene>& scenes);
std::vector<Scene> scenes_from_json(const nlohmann::json& doc);

/// Loads either a scenes.json document or a raw `frame agent x y` track file
/// (windowed with `cfg`). The format is picked from the first non-blank byte.
std::vector<Scene> load_scenes(const std::string& path, const WindowConfig& cfg = {});

// Predictions CSV: header `sample,agent,t,x,y`, optionally prefixed by a
// `scene` column when one file covers several scenes. Every
// (scene, sample, agent, t) cell must appear exactly once.
std::vector<PredictionSet> read_predictions_csv(std::istream& in);
std::vector<PredictionSet> read_predictions_csv(const std::string& path);

/// Writes the `scene,...` form when more than one set is given.
void write_predictions_csv(std::ostream& out, const std::vector<PredictionSet>& sets);

}  // namespace trajkit
