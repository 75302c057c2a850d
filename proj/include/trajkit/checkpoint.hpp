#pragma once

#include <string>

#include <json.hpp>

#include "trajkit/social_model.hpp"

namespace trajkit {

// Checkpoint document:
//   {"format": "trajkit-checkpoint", "version": 1,
//    "config": {"t_obs", "t_pred", "zone_boundaries", "zone_noise_sigma"},
//    "tensors": {"zone1.local.spatial.weight": {"shape": [..], "data": [..]}, ...},
//    "manifest": {...}}            (manifest optional)
// Weights are stored row-major in the listed shape.
nlohmann::json checkpoint_to_json(SocialImplicit& model,
                                  const nlohmann::json& extra = nlohmann::json::object());
SocialImplicit checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::string& path, SocialImplicit& model,
                     const nlohmann::json& extra = nlohmann::json::object());
SocialImplicit load_checkpoint(const std::string& path);

}  // namespace trajkit
