#include "trajkit/checkpoint.hpp"

#include <fstream>

#include "trajkit/errors.hpp"

namespace trajkit {

nlohmann::json checkpoint_to_json(SocialImplicit& model, const nlohmann::json& extra) {
  nlohmann::json tensors = nlohmann::json::object();
  for (const ParamRef& p : model.parameters()) {
    tensors[p.name] = {{"shape", p.shape},
                       {"data", std::vector<double>(p.data, p.data + p.size)}};
  }
  nlohmann::json doc = {
      {"format", "trajkit-checkpoint"},
      {"version", 1},
      {"config",
       {{"t_obs", model.t_obs},
        {"t_pred", model.t_pred},
        {"zone_boundaries", model.zones.boundaries},
        {"zone_noise_sigma", model.zones.noise_sigma}}},
      {"tensors", tensors}};
  for (auto it = extra.begin(); it != extra.end(); ++it) doc[it.key()] = it.value();
  return doc;
}

SocialImplicit checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string{}) != "trajkit-checkpoint") {
      throw DataError("not a trajkit checkpoint");
    }
    const auto& cfg = doc.at("config");
    ZoneConfig zones;
    zones.boundaries = cfg.at("zone_boundaries").get<decltype(zones.boundaries)>();
    zones.noise_sigma = cfg.at("zone_noise_sigma").get<decltype(zones.noise_sigma)>();
    SocialImplicit model(cfg.at("t_obs").get<int>(), cfg.at("t_pred").get<int>(), zones);
    const auto& tensors = doc.at("tensors");
    for (const ParamRef& p : model.parameters()) {
      if (!tensors.contains(p.name)) throw DataError("checkpoint is missing " + p.name);
      const auto& t = tensors[p.name];
      if (t.at("shape").get<std::vector<int>>() != p.shape) {
        throw DataError("checkpoint tensor " + p.name + " has the wrong shape");
      }
      const auto data = t.at("data").get<std::vector<double>>();
      if (data.size() != p.size) throw DataError("checkpoint tensor " + p.name + " has the wrong size");
      std::copy(data.begin(), data.end(), p.data);
    }
    if (tensors.size() != model.parameters().size()) {
      throw DataError("checkpoint has unexpected tensors");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, SocialImplicit& model, const nlohmann::json& extra) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << checkpoint_to_json(model, extra).dump(1) << '\n';
}

SocialImplicit load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace trajkit
