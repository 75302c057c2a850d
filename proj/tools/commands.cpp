#include "commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include "trajkit/checkpoint.hpp"
#include "trajkit/errors.hpp"
#include "trajkit/format.hpp"
#include "trajkit/imle.hpp"
#include "trajkit/manifest.hpp"
#include "trajkit/metrics.hpp"
#include "trajkit/scene_io.hpp"
#include "trajkit/studies.hpp"
#include "trajkit/tipping.hpp"

namespace trajkit::cli {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

std::string sidecar(const std::string& path) { return path + ".manifest.json"; }

void write_sidecar(const std::string& artifact, const RunManifest& m) {
  write_file(sidecar(artifact), to_json(m).dump(2) + "\n");
}

std::vector<int> k_range(int k_max) {
  if (k_max < 1) throw ContractError("--k-max must be at least 1");
  std::vector<int> ks;
  for (int k = 1; k <= k_max; ++k) ks.push_back(k);
  return ks;
}

// Options shared by the metric commands.
struct MetricOptions {
  std::string scenes, preds, out;
  std::string kernel = "gaussian", bandwidth = "scott", bon_scope = "agent";
  std::size_t bon_samples = 20, samples = 0;
  int k_max = 5;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  WindowConfig window;

  void add_to(CLI::App* app) {
    app->add_option("--scenes", scenes, "scenes.json or raw track file")->required();
    app->add_option("--preds", preds, "predictions CSV")->required();
    app->add_option("--kernel", kernel, "KDE kernel");
    app->add_option("--bandwidth", bandwidth, "scott, silverman or a fixed bandwidth in m");
    app->add_option("--bon-scope", bon_scope, "agent or scene");
    app->add_option("--bon-samples", bon_samples, "samples used for best-of-N (0 = all)");
    app->add_option("--samples", samples, "samples used for KDE/AMD/AMV (0 = all)");
    app->add_option("--k-max", k_max, "largest mixture size tried by BIC");
    app->add_option("--threads", threads, "worker threads for mixture fits");
    app->add_option("--seed", seed, "seed for mixture fits");
    app->add_option("--t-obs", window.t_obs, "observed steps (raw track input)");
    app->add_option("--t-pred", window.t_pred, "predicted steps (raw track input)");
    app->add_option("--stride", window.stride, "window stride (raw track input)");
  }

  EvalConfig eval_config() const {
    EvalConfig cfg;
    cfg.fit.k_candidates = k_range(k_max);
    cfg.fit.rng_seed = seed;
    KdeConfig kde;
    kde.kernel = parse_kernel(kernel);
    cfg.kde = parse_bandwidth(bandwidth, kde);
    cfg.bon_scope = parse_bon_scope(bon_scope);
    cfg.bon_samples = bon_samples;
    cfg.dist_samples = samples;
    cfg.threads = std::max(1u, threads);
    return cfg;
  }

  json echo() const {
    return {{"scenes", scenes},       {"preds", preds},         {"out", out},
            {"kernel", kernel},       {"bandwidth", bandwidth}, {"bon_scope", bon_scope},
            {"bon_samples", bon_samples}, {"samples", samples}, {"k_max", k_max},
            {"threads", threads},     {"seed", seed},
            {"t_obs", window.t_obs},  {"t_pred", window.t_pred}, {"stride", window.stride}};
  }
};

struct Inputs {
  std::vector<Scene> scenes;
  std::vector<PredictionSet> preds;
};

Inputs load_inputs(const MetricOptions& o) {
  Inputs in;
  in.scenes = load_scenes(o.scenes, o.window);
  in.preds = read_predictions_csv(o.preds);
  if (in.scenes.size() != in.preds.size()) {
    throw DataError(o.preds + " covers " + std::to_string(in.preds.size()) + " scene(s) but " +
                    o.scenes + " has " + std::to_string(in.scenes.size()));
  }
  return in;
}

RunManifest make_manifest(const std::string& command, const std::vector<std::string>& argv,
                          json config, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.argv = argv;
  m.config = std::move(config);
  m.seed = seed;
  m.version = toolkit_version();
  return m;
}

std::string per_scene_csv(const MetricReport& r) {
  std::ostringstream os;
  os << "scene,agents,ade,fde,kde_nll,amd,amv,total_cells,excluded_cells\n";
  for (const auto& s : r.per_scene) {
    os << s.scene_ref << ',' << s.agents << ',' << format_real(s.ade) << ',' << format_real(s.fde)
       << ',' << (s.kde_nll ? format_real(*s.kde_nll) : "") << ',' << format_real(s.amd) << ','
       << format_real(s.amv) << ',' << s.total_cells << ',' << s.excluded_cells << '\n';
  }
  return os.str();
}

// ---- eval ----------------------------------------------------------------

struct EvalCmd {
  MetricOptions m;
  std::string per_scene;

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    const EvalConfig cfg = m.eval_config();
    Inputs in = load_inputs(m);
    const double load_ms = ms_since(t0);
    const auto t1 = Clock::now();
    const MetricReport report = evaluate(in.scenes, in.preds, cfg);

    json config = m.echo();
    config["per_scene"] = per_scene;
    config["eval"] = to_json(cfg);
    RunManifest man = make_manifest("eval", argv, config, m.seed);
    man.add_input(m.scenes);
    man.add_input(m.preds);
    man.outputs.push_back(m.out);
    if (!per_scene.empty()) man.outputs.push_back(per_scene);
    man.timings_ms = {{"load", load_ms}, {"evaluate", ms_since(t1)}, {"total", ms_since(t0)}};

    json doc = to_json(report);
    doc["manifest"] = to_json(man);
    write_file(m.out, doc.dump(2) + "\n");
    if (!per_scene.empty()) write_file(per_scene, per_scene_csv(report));
    std::cout << "ade " << format_real(report.ade) << "  fde " << format_real(report.fde)
              << "  amd " << format_real(report.amd) << "  amv " << format_real(report.amv)
              << '\n';
    if (report.excluded_cells > 0) {
      std::cerr << "warning: " << report.excluded_cells << " of " << report.total_cells
                << " cells could not be fitted and were excluded\n";
      return kPartial;
    }
    return kOk;
  }
};

// ---- sensitivity -----------------------------------------------------------

struct SensitivityCmd {
  MetricOptions m;
  std::vector<double> shifts = kDefaultShifts;
  std::string axis = "x";

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    const EvalConfig cfg = m.eval_config();
    const ShiftAxis ax = parse_axis(axis);
    Inputs in = load_inputs(m);
    const auto rows = shift_sensitivity(in.scenes, in.preds, shifts, ax, cfg);
    std::ostringstream os;
    write_sensitivity_csv(os, rows);

    json config = m.echo();
    config["shifts"] = shifts;
    config["axis"] = axis;
    RunManifest man = make_manifest("sensitivity", argv, config, m.seed);
    man.add_input(m.scenes);
    man.add_input(m.preds);
    man.outputs = {m.out, sidecar(m.out)};
    man.timings_ms = {{"total", ms_since(t0)}};
    write_file(m.out, os.str());
    write_sidecar(m.out, man);
    std::cout << os.str();
    const bool partial = std::any_of(rows.begin(), rows.end(),
                                     [](const auto& r) { return r.report.excluded_cells > 0; });
    return partial ? kPartial : kOk;
  }
};

// ---- synth -----------------------------------------------------------------

struct SynthCmd {
  std::string study, out, kernel_list, bandwidth = "scott";
  std::size_t samples = 20, trials = 200, reps = 20;
  int k_max = 5;
  std::uint64_t seed = 0;

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    std::ostringstream os;
    json config = {{"study", study}, {"out", out}, {"seed", seed}};
    if (study == "kernel-sensitivity") {
      KernelSensitivityConfig cfg;
      cfg.samples = samples;
      cfg.trials = trials;
      cfg.seed = seed;
      const KdeConfig bw = parse_bandwidth(bandwidth);
      cfg.rule = bw.rule;
      cfg.fixed_bandwidth = bw.fixed_bandwidth;
      if (!kernel_list.empty()) {
        cfg.kernels.clear();
        std::stringstream ss(kernel_list);
        for (std::string k; std::getline(ss, k, ',');) cfg.kernels.push_back(parse_kernel(k));
      }
      const auto rows = kernel_sensitivity(cfg);
      write_kernel_sensitivity_csv(os, rows);
      config.update({{"samples", samples}, {"trials", trials}, {"bandwidth", bandwidth},
                     {"kernels", kernel_list}});
    } else if (study == "gmm-convergence") {
      ConvergenceConfig cfg;
      cfg.reps = reps;
      cfg.seed = seed;
      cfg.fit.k_candidates = k_range(k_max);
      const auto rows = gmm_convergence(cfg);
      write_convergence_csv(os, rows, tipping_md(convergence_reference(), cfg.test_point));
      config.update({{"reps", reps}, {"k_max", k_max}, {"counts", cfg.counts}});
    } else {
      throw ContractError("unknown study '" + study +
                          "' (expected kernel-sensitivity or gmm-convergence)");
    }
    RunManifest man = make_manifest("synth", argv, config, seed);
    man.outputs = {out, sidecar(out)};
    man.timings_ms = {{"total", ms_since(t0)}};
    write_file(out, os.str());
    write_sidecar(out, man);
    std::cout << os.str();
    return kOk;
  }
};

// ---- train -----------------------------------------------------------------

struct TrainCmd {
  std::string scenes, out = "checkpoint.json", log = "train_log.csv", zones = "default";
  TrainerConfig cfg;
  int checkpoint_every = 0;
  WindowConfig window;

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    cfg.validate();
    const std::vector<Scene> data = load_scenes(scenes, window);
    if (data.empty()) throw DataError(scenes + " contains no scenes");
    ZoneConfig zc;
    if (zones == "eth") {
      zc = ZoneConfig::eth();
    } else if (zones != "default") {
      throw ContractError("unknown zone preset '" + zones + "' (expected default or eth)");
    }
    SocialImplicit model(static_cast<int>(data.front().t_obs()),
                         static_cast<int>(data.front().t_pred()), zc, cfg.seed);

    json config = {{"scenes", scenes},
                   {"out", out},
                   {"log", log},
                   {"zones", zones},
                   {"epochs", cfg.epochs},
                   {"lr", cfg.lr},
                   {"lr_drop_epoch", cfg.lr_drop_epoch},
                   {"lr_after_drop", cfg.lr_after_drop},
                   {"batch", cfg.batch_size},
                   {"samples", cfg.m_samples},
                   {"alpha1", cfg.weights.triplet},
                   {"alpha2", cfg.weights.g_distance},
                   {"alpha3", cfg.weights.g_angle},
                   {"shuffle", cfg.shuffle},
                   {"checkpoint_every", checkpoint_every},
                   {"seed", cfg.seed}};
    RunManifest man = make_manifest("train", argv, config, cfg.seed);
    man.add_input(scenes);
    man.outputs = {out, log};

    std::ofstream log_out(log);
    if (!log_out) throw DataError("cannot write " + log);
    write_log_header(log_out);
    std::size_t logged = 0;
    TrainHooks hooks;
    hooks.on_epoch_end = [&](int epoch, SocialImplicit& m, const TrainState& st) {
      for (; logged < st.log.size(); ++logged) write_log_row(log_out, st.log[logged]);
      log_out.flush();
      std::cerr << "epoch " << epoch << "  loss " << format_real(st.epoch_loss.back()) << '\n';
      if (checkpoint_every > 0 && (epoch + 1) % checkpoint_every == 0) {
        const std::string path = out + ".epoch" + std::to_string(epoch + 1) + ".json";
        save_checkpoint(path, m, {{"epoch", epoch + 1}});
      }
    };
    TrainState state;
    try {
      state = train(model, data, cfg, hooks);
    } catch (const TrainingError&) {
      log_out.flush();
      throw;
    }
    if (checkpoint_every > 0) {
      for (int e = checkpoint_every; e <= cfg.epochs; e += checkpoint_every) {
        man.outputs.push_back(out + ".epoch" + std::to_string(e) + ".json");
      }
    }
    man.timings_ms = {{"total", ms_since(t0)}};
    json extra = {{"training",
                   {{"epochs_completed", state.epoch},
                    {"epoch_loss", state.epoch_loss},
                    {"best_epoch", state.best_epoch},
                    {"best_loss", state.best_loss}}},
                  {"manifest", to_json(man)}};
    save_checkpoint(out, model, extra);
    return kOk;
  }
};

// ---- predict ---------------------------------------------------------------

struct PredictCmd {
  std::string checkpoint, scenes, out = "predictions.csv";
  std::size_t samples = kDefaultDistributionSamples;
  std::uint64_t seed = 0;
  WindowConfig window;

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    const SocialImplicit model = load_checkpoint(checkpoint);
    const std::vector<Scene> data = load_scenes(scenes, window);
    std::vector<PredictionSet> sets;
    for (std::size_t i = 0; i < data.size(); ++i) {
      sets.push_back(sample_predictions(model, data[i], samples, stream_seed(seed, i, 0)));
    }
    std::ostringstream os;
    write_predictions_csv(os, sets);
    json config = {{"checkpoint", checkpoint}, {"scenes", scenes}, {"out", out},
                   {"samples", samples},       {"seed", seed}};
    RunManifest man = make_manifest("predict", argv, config, seed);
    man.add_input(checkpoint);
    man.add_input(scenes);
    man.outputs = {out, sidecar(out)};
    man.timings_ms = {{"total", ms_since(t0)}};
    write_file(out, os.str());
    write_sidecar(out, man);
    return kOk;
  }
};

// ---- scenes ----------------------------------------------------------------

struct ScenesCmd {
  std::string tracks, toy, out = "scenes.json", preds_out;
  std::size_t count = 64, samples = 20;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  WindowConfig window;

  int run(const std::vector<std::string>& argv) {
    const auto t0 = Clock::now();
    if (tracks.empty() == toy.empty()) throw ContractError("give exactly one of --tracks or --toy");
    std::vector<Scene> scenes;
    std::optional<PredictionSet> cloud_preds;
    if (!tracks.empty()) {
      scenes = load_scenes(tracks, window);
    } else if (toy == "bimodal") {
      BimodalConfig bc;
      bc.scenes = count;
      bc.seed = seed;
      bc.t_obs = window.t_obs;
      bc.t_pred = window.t_pred;
      scenes = bimodal_scenes(bc);
    } else if (toy == "wide-cloud") {
      SyntheticCloud c = wide_cloud(samples, sigma, 1, window.t_pred, seed);
      scenes.push_back(c.scene);
      cloud_preds = c.preds;
    } else {
      throw ContractError("unknown toy '" + toy + "' (expected bimodal or wide-cloud)");
    }
    json config = {{"tracks", tracks}, {"toy", toy},         {"out", out},
                   {"preds_out", preds_out}, {"count", count}, {"samples", samples},
                   {"sigma", sigma},   {"seed", seed},       {"t_obs", window.t_obs},
                   {"t_pred", window.t_pred}, {"stride", window.stride}};
    RunManifest man = make_manifest("scenes", argv, config, seed);
    if (!tracks.empty()) man.add_input(tracks);
    man.outputs = {out, sidecar(out)};
    if (cloud_preds && !preds_out.empty()) man.outputs.push_back(preds_out);
    man.timings_ms = {{"total", ms_since(t0)}};
    write_file(out, scenes_to_json(scenes).dump(1) + "\n");
    if (cloud_preds && !preds_out.empty()) {
      std::ostringstream os;
      write_predictions_csv(os, {*cloud_preds});
      write_file(preds_out, os.str());
    }
    write_sidecar(out, man);
    std::cerr << scenes.size() << " scene(s) written to " << out << '\n';
    return kOk;
  }
};

// ---- replay ----------------------------------------------------------------

RunManifest find_manifest(const std::string& artifact) {
  const std::string text = read_file(artifact);
  json doc = json::parse(text, nullptr, false);
  if (!doc.is_discarded() && doc.is_object()) {
    if (doc.contains("manifest")) return manifest_from_json(doc["manifest"]);
    if (doc.contains("command") && doc.contains("argv")) return manifest_from_json(doc);
  }
  const std::string side = sidecar(artifact);
  std::ifstream probe(side);
  if (!probe) throw DataError(artifact + " carries no manifest and " + side + " does not exist");
  return manifest_from_json(json::parse(read_file(side)));
}

bool same_artifact(const std::string& before, const std::string& after) {
  if (before == after) return true;
  const json a = json::parse(before, nullptr, false);
  const json b = json::parse(after, nullptr, false);
  if (a.is_discarded() || b.is_discarded()) return false;
  return strip_timings(a) == strip_timings(b);
}

struct ReplayCmd {
  std::string artifact;
  bool check = false;

  int run() {
    const RunManifest man = find_manifest(artifact);
    if (man.command == "replay") throw ContractError("cannot replay a replay");
    for (const auto& in : man.inputs) {
      std::string now;
      try {
        now = file_digest(in.path);
      } catch (const DataError&) {
        throw DataError("replay input " + in.path + " is missing");
      }
      if (now != in.fnv1a64) std::cerr << "warning: " << in.path << " changed since the run\n";
    }
    std::vector<std::string> before;
    if (check) {
      for (const auto& path : man.outputs) before.push_back(read_file(path));
    }
    const int code = cli::run(man.argv);
    if (!check) return code;
    bool identical = true;
    for (std::size_t i = 0; i < man.outputs.size(); ++i) {
      const bool same = same_artifact(before[i], read_file(man.outputs[i]));
      std::cout << (same ? "identical " : "DIFFERS   ") << man.outputs[i] << '\n';
      identical = identical && same;
    }
    return identical ? code : kError;
  }
};

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"trajkit: trajectory prediction metrics and Social-Implicit training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", toolkit_version());

  EvalCmd eval;
  auto* eval_app = app.add_subcommand("eval", "score predictions against scenes");
  eval.m.add_to(eval_app);
  eval_app->add_option("--out", eval.m.out, "report JSON")->required();
  eval_app->add_option("--per-scene", eval.per_scene, "optional per-scene CSV");

  SensitivityCmd sens;
  auto* sens_app = app.add_subcommand("sensitivity", "re-score predictions under rigid shifts");
  sens.m.add_to(sens_app);
  sens_app->add_option("--out", sens.m.out, "table CSV")->required();
  sens_app->add_option("--shifts", sens.shifts, "shifts in m")->delimiter(',');
  sens_app->add_option("--axis", sens.axis, "x, y or both");

  SynthCmd synth;
  auto* synth_app = app.add_subcommand("synth", "synthetic metric studies");
  synth_app->add_option("study", synth.study, "kernel-sensitivity or gmm-convergence")
      ->required();
  synth_app->add_option("--out", synth.out, "table CSV")->required();
  synth_app->add_option("--samples", synth.samples, "cloud size (kernel-sensitivity)");
  synth_app->add_option("--trials", synth.trials, "clouds per family (kernel-sensitivity)");
  synth_app->add_option("--reps", synth.reps, "fits per sample count (gmm-convergence)");
  synth_app->add_option("--k-max", synth.k_max, "largest mixture size (gmm-convergence)");
  synth_app->add_option("--kernel", synth.kernel_list, "comma separated kernels");
  synth_app->add_option("--bandwidth", synth.bandwidth, "scott, silverman or fixed value");
  synth_app->add_option("--seed", synth.seed);

  TrainCmd train_cmd;
  auto* train_app = app.add_subcommand("train", "train Social-Implicit with IMLE");
  train_app->add_option("--scenes", train_cmd.scenes, "training scenes")->required();
  train_app->add_option("--out", train_cmd.out, "checkpoint JSON");
  train_app->add_option("--log", train_cmd.log, "training log CSV");
  train_app->add_option("--zones", train_cmd.zones, "zone noise preset: default or eth");
  train_app->add_option("--epochs", train_cmd.cfg.epochs);
  train_app->add_option("--lr", train_cmd.cfg.lr);
  train_app->add_option("--lr-drop-epoch", train_cmd.cfg.lr_drop_epoch);
  train_app->add_option("--lr-after-drop", train_cmd.cfg.lr_after_drop);
  train_app->add_option("--batch", train_cmd.cfg.batch_size, "scenes per SGD step");
  train_app->add_option("--samples", train_cmd.cfg.m_samples, "IMLE draws per scene (m)");
  train_app->add_option("--alpha1", train_cmd.cfg.weights.triplet, "triplet weight");
  train_app->add_option("--alpha2", train_cmd.cfg.weights.g_distance, "G-distance weight");
  train_app->add_option("--alpha3", train_cmd.cfg.weights.g_angle, "G-angle weight");
  train_app->add_option("--checkpoint-every", train_cmd.checkpoint_every, "epochs, 0 = off");
  train_app->add_option("--seed", train_cmd.cfg.seed);
  train_app->add_option("--t-obs", train_cmd.window.t_obs);
  train_app->add_option("--t-pred", train_cmd.window.t_pred);

  PredictCmd predict;
  auto* predict_app = app.add_subcommand("predict", "sample futures from a checkpoint");
  predict_app->add_option("--checkpoint", predict.checkpoint)->required();
  predict_app->add_option("--scenes", predict.scenes)->required();
  predict_app->add_option("--out", predict.out, "predictions CSV");
  predict_app->add_option("--samples", predict.samples, "futures per scene (first 20 feed best-of-N)");
  predict_app->add_option("--seed", predict.seed);
  predict_app->add_option("--t-obs", predict.window.t_obs);
  predict_app->add_option("--t-pred", predict.window.t_pred);

  ScenesCmd scenes;
  auto* scenes_app = app.add_subcommand("scenes", "window raw tracks or build a toy set");
  scenes_app->add_option("--tracks", scenes.tracks, "raw `frame agent x y` file");
  scenes_app->add_option("--toy", scenes.toy, "bimodal or wide-cloud");
  scenes_app->add_option("--out", scenes.out, "scenes JSON");
  scenes_app->add_option("--preds-out", scenes.preds_out, "wide-cloud predictions CSV");
  scenes_app->add_option("--count", scenes.count, "scenes in the bimodal toy");
  scenes_app->add_option("--samples", scenes.samples, "wide-cloud sample count");
  scenes_app->add_option("--sigma", scenes.sigma, "wide-cloud spread in m");
  scenes_app->add_option("--seed", scenes.seed);
  scenes_app->add_option("--t-obs", scenes.window.t_obs);
  scenes_app->add_option("--t-pred", scenes.window.t_pred);
  scenes_app->add_option("--stride", scenes.window.stride);

  ReplayCmd replay;
  auto* replay_app = app.add_subcommand("replay", "re-run a command from an artifact's manifest");
  replay_app->add_option("artifact", replay.artifact, "report, checkpoint or CSV")->required();
  replay_app->add_flag("--check", replay.check, "compare the new outputs with the old ones");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kError;
  }

  try {
    if (eval_app->parsed()) return eval.run(args);
    if (sens_app->parsed()) return sens.run(args);
    if (synth_app->parsed()) return synth.run(args);
    if (train_app->parsed()) return train_cmd.run(args);
    if (predict_app->parsed()) return predict.run(args);
    if (scenes_app->parsed()) return scenes.run(args);
    if (replay_app->parsed()) return replay.run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kError;
  }
  return kError;
}

}  // namespace trajkit::cli
