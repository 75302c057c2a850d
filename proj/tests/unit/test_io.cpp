#include <doctest.h>

#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "trajkit/checkpoint.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/manifest.hpp"
#include "trajkit/scene_io.hpp"
#include "trajkit/studies.hpp"

using namespace trajkit;

TEST_CASE("scenes JSON round trip is exact") {
  BimodalConfig bc;
  bc.scenes = 3;
  const auto scenes = bimodal_scenes(bc);
  const auto doc = scenes_to_json(scenes);
  const auto back = scenes_from_json(nlohmann::json::parse(doc.dump()));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].observed[0] == scenes[i].observed[0]);
    CHECK(back[i].future[0] == scenes[i].future[0]);
    CHECK(back[i].agent_ids == scenes[i].agent_ids);
    CHECK(back[i].frame_stride_seconds == scenes[i].frame_stride_seconds);
  }
  CHECK_THROWS_AS(scenes_from_json(nlohmann::json::object()), DataError);
}

TEST_CASE("load_scenes reads both formats and names missing files") {
  const auto dir = oracle::temp_dir("io_load");
  const std::string tracks = (dir / "tracks.txt").string();
  {
    std::ofstream out(tracks);
    for (int f = 0; f < 20; ++f) out << f * 10 << " 1 " << 0.1 * f << " 0\n";
  }
  CHECK(load_scenes(tracks).size() == 1);
  const std::string js = (dir / "scenes.json").string();
  {
    std::ofstream out(js);
    out << scenes_to_json(load_scenes(tracks)).dump();
  }
  CHECK(load_scenes(js).size() == 1);
  try {
    load_scenes((dir / "nope.json").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nope.json") != std::string::npos);
  }
}

TEST_CASE("predictions CSV round trip") {
  const SyntheticCloud a = wide_cloud(4, 1.0, 2, 3, 1);
  const SyntheticCloud b = wide_cloud(5, 1.0, 1, 3, 2);
  for (bool several : {false, true}) {
    std::vector<PredictionSet> sets{a.preds};
    if (several) sets.push_back(b.preds);
    std::stringstream ss;
    write_predictions_csv(ss, sets);
    const auto back = read_predictions_csv(ss);
    REQUIRE(back.size() == sets.size());
    for (std::size_t k = 0; k < sets.size(); ++k) {
      REQUIRE(back[k].num_samples() == sets[k].num_samples());
      for (std::size_t s = 0; s < sets[k].num_samples(); ++s) {
        for (std::size_t n = 0; n < sets[k].num_agents(); ++n) {
          CHECK(back[k].samples[s][n] == sets[k].samples[s][n]);
        }
      }
    }
  }
}

TEST_CASE("predictions CSV errors") {
  std::istringstream bad_header("s,a,t,x,y\n");
  CHECK_THROWS_AS(read_predictions_csv(bad_header), ParseError);
  std::istringstream dup("sample,agent,t,x,y\n0,0,0,1,1\n0,0,0,1,1\n");
  CHECK_THROWS_AS(read_predictions_csv(dup), DataError);
  std::istringstream hole("sample,agent,t,x,y\n0,0,0,1,1\n0,0,1,1,1\n1,0,1,1,1\n");
  CHECK_THROWS_AS(read_predictions_csv(hole), DataError);
  std::istringstream nan("sample,agent,t,x,y\n0,0,0,nan,1\n");
  CHECK_THROWS_AS(read_predictions_csv(nan), DataError);
}

TEST_CASE("checkpoint round trip") {
  SocialImplicit model(8, 12, ZoneConfig::eth(), 5);
  model.cells[1].local_weight = 0.25;
  const auto doc = checkpoint_to_json(model, {{"note", "x"}});
  CHECK(doc.at("tensors").size() == 76);
  CHECK(doc.at("note") == "x");
  SocialImplicit back = checkpoint_from_json(nlohmann::json::parse(doc.dump()));
  CHECK(back.zones.noise_sigma == model.zones.noise_sigma);
  auto pa = model.parameters();
  auto pb = back.parameters();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(std::equal(pa[i].data, pa[i].data + pa[i].size, pb[i].data));
  }
  auto broken = doc;
  broken["tensors"].erase("zone1.local_weight");
  CHECK_THROWS_AS(checkpoint_from_json(broken), DataError);
  broken = doc;
  broken["tensors"]["zone1.local.spatial.bias"]["data"] = {1.0};
  CHECK_THROWS_AS(checkpoint_from_json(broken), DataError);
}

TEST_CASE("fnv1a64 reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("manifest round trip and timing strip") {
  RunManifest m;
  m.command = "eval";
  m.argv = {"eval", "--seed", "3"};
  m.config = {{"k_max", 5}};
  m.inputs = {{"a.json", "0123456789abcdef"}};
  m.outputs = {"r.json"};
  m.seed = 3;
  m.version = toolkit_version();
  m.timings_ms = {{"total", 12.5}};
  const auto j = to_json(m);
  const RunManifest back = manifest_from_json(j);
  CHECK(to_json(back) == j);

  nlohmann::json doc = {{"ade", 1.0}, {"manifest", j}};
  nlohmann::json other = doc;
  other["manifest"]["timings_ms"]["total"] = 99.0;
  CHECK(doc != other);
  CHECK(strip_timings(doc) == strip_timings(other));
  CHECK_THROWS_AS(manifest_from_json(nlohmann::json::object()), DataError);
}
