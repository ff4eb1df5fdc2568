// dcan: command-line front end for training, scoring and fleet monitoring.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcan/checkpoint.hpp"
#include "dcan/error.hpp"
#include "dcan/fleet.hpp"
#include "dcan/ingest.hpp"
#include "dcan/scoring.hpp"
#include "dcan/signal.hpp"
#include "dcan/training.hpp"

namespace fs = std::filesystem;
using namespace dcan;

namespace {

void check_axes(const std::vector<Frame>& frames, std::optional<std::size_t> axes) {
  if (frames.empty()) throw IngestError("no frames loaded");
  for (const auto& f : frames) {
    if (f.axes != frames.front().axes) throw DimensionError("frame file mixes axis counts");
  }
  if (axes && *axes != frames.front().axes) {
    throw ConfigError("--axes " + std::to_string(*axes) + " but the frames have " +
                      std::to_string(frames.front().axes) + " axes");
  }
}

// Frames from a file, or from every frame file of a directory in name order.
std::vector<Frame> load_frame_path(const fs::path& path, const std::string& source = {}) {
  if (!fs::is_directory(path)) return load_frames(path, source);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(path)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Frame> frames;
  for (const auto& f : files) {
    auto part = load_frames(f, source);
    frames.insert(frames.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return frames;
}

void write_text(const std::optional<fs::path>& out, const std::string& text) {
  if (out) write_file_bytes(*out, text);
  else std::cout << text;
}

void write_frames(const fs::path& out, const std::vector<Frame>& frames) {
  if (out.extension() == ".csv") write_file_bytes(out, mill_frames_to_csv(frames));
  else write_frame_file(out, frames);
}

struct SynthArgs {
  fs::path out;
  std::uint64_t seed = 0;
  std::size_t axes = 3;
  std::size_t count = 1;
  std::uint64_t start = 0;
  std::uint64_t cadence = 600;
  std::optional<double> time_scale;
  std::optional<double> sawtooth_freq;
  std::optional<double> sawtooth_peak;
  signal::PhaseModel phases = signal::PhaseModel::zero;
};

void run_synth(const SynthArgs& a) {
  signal::Perturbation p;
  p.time_scale = a.time_scale;
  if (a.sawtooth_freq || a.sawtooth_peak) {
    p.sawtooth = signal::Tone{a.sawtooth_freq.value_or(signal::kSawtoothFreqHz),
                              a.sawtooth_peak.value_or(signal::kSawtoothPeakG)};
  }
  signal::NormalSignalSpec spec;
  spec.phases = a.phases;
  if (a.time_scale) {
    const auto probe = signal::time_scale(signal::synth_normal(spec, a.seed), *a.time_scale);
    if (probe.aliasing_warning) std::cerr << "warning: " << probe.warning << "\n";
  }
  const auto frames = signal::synth_frames(spec, a.axes, a.count, a.seed, p, a.start, a.cadence);
  write_frames(a.out, frames);
  const auto spectrum = signal::fft_magnitude(signal::frame_axis(frames.front(), 0));
  std::cout << "frames=" << frames.size() << " axes=" << a.axes
            << " dominant_frequency_hz=" << signal::dominant_frequency(spectrum) << "\n";
}

struct TrainArgs {
  fs::path frames;
  fs::path out;
  std::optional<fs::path> loss_csv;
  std::optional<std::size_t> axes;
  std::uint64_t seed = 0;
  TrainConfig config;
  bool quiet = false;
};

void run_train(TrainArgs a) {
  const auto frames = load_frame_path(a.frames);
  check_axes(frames, a.axes);
  a.config.seed = a.seed;
  const auto stats = fit_standardization(frames);
  auto model = build<float>(DcanConfig::standard(frames.front().axes), a.seed);
  TrainHooks hooks;
  if (!a.quiet) {
    hooks.on_epoch = [](const EpochLoss& e) {
      std::fprintf(stderr, "epoch %zu train_mse %.6f val_mse %.6f\n", e.epoch, e.train_mse, e.val_mse);
    };
  }
  const auto result = train(model, frames, stats, a.config, hooks);
  save_checkpoint(a.out, model, stats, metadata_from(result));
  if (a.loss_csv) result.history.write_csv(*a.loss_csv);
  std::cout << "epochs=" << result.history.epochs.size() << " best_epoch=" << result.best_epoch
            << " early_stopped=" << (result.early_stopped ? "true" : "false") << "\n";
}

struct CalibrateArgs {
  fs::path checkpoint;
  fs::path frames;
  std::optional<fs::path> out;
  std::optional<fs::path> config;
  std::vector<std::string> predictors;
};

void run_calibrate(const CalibrateArgs& a) {
  const auto ckpt = load_checkpoint(a.checkpoint);
  const auto frames = load_frame_path(a.frames);
  check_axes(frames, ckpt.model.config.axes);
  const auto norm = calibrate_predictor(ckpt, frames);
  if (a.config) {
    FleetConfig fleet;
    if (fs::exists(*a.config)) {
      fleet = fleet_config_from_json(read_file_bytes(*a.config));
    } else {
      // New config: the six default locations sharing this checkpoint.
      const auto base = fs::absolute(*a.config).parent_path();
      fleet = FleetConfig::default_six(fs::absolute(a.checkpoint).lexically_relative(base));
      fleet.report_log = "reports.jsonl";
      std::cerr << "created fleet config " << a.config->string() << "\n";
    }
    std::size_t updated = 0;
    for (auto& p : fleet.predictors) {
      if (a.predictors.empty() || std::find(a.predictors.begin(), a.predictors.end(), p.id) != a.predictors.end()) {
        p.normalization = norm;
        ++updated;
      }
    }
    if (updated == 0) throw RoutingError("none of the named predictors is in the fleet");
    save_fleet_config(*a.config, fleet);
  }
  const nlohmann::ordered_json j = {{"mu", norm.mu}, {"sigma", norm.sigma}};
  write_text(a.out, j.dump() + "\n");
}

ScoreNormalization read_normalization(const fs::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_file_bytes(path));
    return {j.at("mu").get<double>(), j.at("sigma").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed normalization file '" + path.string() + "': " + e.what());
  }
}

struct ScoreArgs {
  fs::path checkpoint;
  fs::path frames;
  std::optional<fs::path> normalization;
  std::optional<fs::path> config;
  std::optional<std::string> predictor;
  std::optional<fs::path> out;
};

void run_score(const ScoreArgs& a) {
  PredictorSpec spec;
  if (a.config) {
    const auto fleet = load_fleet_config(*a.config);
    const std::string id = a.predictor.value_or(fleet.predictors.front().id);
    const auto* found = fleet.find(id);
    if (!found) throw RoutingError("no predictor '" + id + "' in the fleet");
    spec = *found;
  } else {
    spec.id = a.predictor.value_or("predictor");
    spec.location = spec.id;
  }
  if (a.normalization) spec.normalization = read_normalization(*a.normalization);
  auto ckpt = load_checkpoint(a.checkpoint);
  spec.checkpoint = a.checkpoint;
  spec.axes = ckpt.model.config.axes;
  Predictor predictor(spec, std::move(ckpt));
  const auto frames = load_frame_path(a.frames);
  check_axes(frames, spec.axes);
  const auto reports = predictor.process_all(frames);
  if (a.out) {
    append_reports(*a.out, reports);
  } else {
    for (const auto& r : reports) std::cout << report_to_line(r) << "\n";
  }
}

struct MonitorArgs {
  fs::path config;
  fs::path streams;
  std::optional<fs::path> out;
};

// A stream for predictor <id> is <streams>/<id> (a frame file or a
// directory of frame files) or <streams>/<id>.<ext>.
FrameStreams collect_streams(const fs::path& root) {
  if (!fs::is_directory(root)) throw IoError("stream directory '" + root.string() + "' does not exist");
  FrameStreams streams;
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(root)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& path : entries) {
    const std::string id = fs::is_directory(path) ? path.filename().string() : path.stem().string();
    if (streams.count(id)) throw RoutingError("two streams for predictor '" + id + "'");
    streams[id] = load_frame_path(path, id);
  }
  return streams;
}

void run_monitor(const MonitorArgs& a) {
  auto fleet = load_fleet_config(a.config);
  if (a.out) fleet.report_log = *a.out;
  const auto streams = collect_streams(a.streams);
  const auto reports = run_fleet(fleet, streams);
  std::size_t alarms = 0;
  for (const auto& r : reports) {
    if (!r.alarm_fired) continue;
    ++alarms;
    std::cout << "alarm timestamp=" << r.timestamp << " predictor=" << r.predictor_id << " location=\""
              << r.location << "\"\n";
  }
  std::cout << "reports=" << reports.size() << " alarms=" << alarms << "\n";
}

struct IngestArgs {
  fs::path root;
  fs::path out;
  std::uint64_t seed = 0;
  std::size_t train_frames = 30000;
};

void run_ingest(const IngestArgs& a) {
  SplitSpec spec;
  spec.train_frames = a.train_frames;
  const auto splits = build_nasa_splits(a.root, spec, a.seed);
  for (const auto& w : splits.warnings) std::cerr << "warning: " << w << "\n";
  fs::create_directories(a.out / "test");
  write_frame_file(a.out / "train.frme", splits.train);
  for (const auto& [label, frames] : splits.test) {
    std::string name = label;
    std::replace(name.begin(), name.end(), '/', '_');
    write_frame_file(a.out / "test" / (name + ".frme"), frames);
    std::cout << label << " frames=" << frames.size() << "\n";
  }
  std::cout << "train frames=" << splits.train.size() << " available=" << splits.train_available << "\n";
}

struct ExportArgs {
  std::optional<fs::path> report_log;
  std::optional<fs::path> frames;
  std::optional<std::string> predictor;
  std::size_t frame_index = 0;
  std::size_t axis = 0;
  std::optional<fs::path> out;
};

void run_export(const ExportArgs& a) {
  if (a.report_log.has_value() == a.frames.has_value()) {
    throw ConfigError("export-plot needs exactly one of --report-log or --frames");
  }
  std::string csv;
  char buf[160];
  if (a.report_log) {
    csv = "index,timestamp,predictor,window,total_mse,score,level,alarm_fired\n";
    std::size_t index = 0;
    for (const auto& r : read_report_log(*a.report_log)) {
      if (a.predictor && r.predictor_id != *a.predictor) continue;
      std::snprintf(buf, sizeof buf, "%zu,%llu,%s,%u,%.17g,%.17g,%s,%d\n", index++,
                    static_cast<unsigned long long>(r.timestamp), r.predictor_id.c_str(), r.window, r.total_mse,
                    r.score, std::string(level_name(r.level)).c_str(), r.alarm_fired ? 1 : 0);
      csv += buf;
    }
  } else {
    const auto frames = load_frame_path(*a.frames);
    if (a.frame_index >= frames.size()) {
      throw DimensionError("frame index " + std::to_string(a.frame_index) + " out of " +
                           std::to_string(frames.size()));
    }
    const auto spectrum = signal::fft_magnitude(signal::frame_axis(frames[a.frame_index], a.axis));
    csv = "frequency_hz,magnitude\n";
    for (std::size_t k = 0; k < spectrum.bin_freqs.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", spectrum.bin_freqs[k], spectrum.magnitudes[k]);
      csv += buf;
    }
  }
  write_text(a.out, csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vibration anomaly detection with a deep convolutional auto-encoder"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate synthetic normal or anomalous frames");
  s->add_option("--out", synth.out, "Output frame file (.csv for mill CSV, otherwise FRME)")->required();
  s->add_option("--seed", synth.seed);
  s->add_option("--axes", synth.axes)->check(CLI::IsMember({1, 3}));
  s->add_option("--count", synth.count)->check(CLI::PositiveNumber);
  s->add_option("--start", synth.start, "Timestamp of the first frame (s)");
  s->add_option("--cadence", synth.cadence, "Seconds between frames");
  s->add_option("--time-scale", synth.time_scale)->check(CLI::PositiveNumber);
  s->add_option("--sawtooth-freq", synth.sawtooth_freq, "Hz");
  s->add_option("--sawtooth-peak", synth.sawtooth_peak, "g");
  const std::map<std::string, signal::PhaseModel> phase_names{{"zero", signal::PhaseModel::zero},
                                                              {"start-time", signal::PhaseModel::start_time},
                                                              {"independent", signal::PhaseModel::independent}};
  s->add_option("--phases", synth.phases, "Tone phases: zero, start-time or independent")
      ->transform(CLI::CheckedTransformer(phase_names, CLI::ignore_case));

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit standardization, train and write a checkpoint");
  t->add_option("--frames", tr.frames, "Frame file or directory")->required();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--loss-csv", tr.loss_csv);
  t->add_option("--axes", tr.axes)->check(CLI::IsMember({1, 3}));
  t->add_option("--seed", tr.seed);
  t->add_option("--epochs", tr.config.max_epochs);
  t->add_option("--batch", tr.config.batch_size);
  t->add_option("--lr", tr.config.lr);
  t->add_option("--patience", tr.config.patience);
  t->add_flag("--quiet", tr.quiet);

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Compute score normalization for a checkpoint");
  c->add_option("--checkpoint", cal.checkpoint)->required();
  c->add_option("--frames", cal.frames, "Held-out normal frames")->required();
  c->add_option("--out", cal.out, "Normalization JSON (stdout if omitted)");
  c->add_option("--config", cal.config, "Fleet config to update in place (created with six predictors if missing)");
  c->add_option("--predictor", cal.predictors, "Predictor ids to update (all if omitted)");
  std::uint64_t unused_seed = 0;
  c->add_option("--seed", unused_seed);

  ScoreArgs sc;
  auto* scmd = app.add_subcommand("score", "Score a frame file and emit status reports");
  scmd->add_option("--checkpoint", sc.checkpoint)->required();
  scmd->add_option("--frames", sc.frames)->required();
  scmd->add_option("--normalization", sc.normalization);
  scmd->add_option("--config", sc.config);
  scmd->add_option("--predictor", sc.predictor);
  scmd->add_option("--out", sc.out, "Report log to append to (stdout if omitted)");
  scmd->add_option("--seed", unused_seed);

  MonitorArgs mon;
  auto* m = app.add_subcommand("monitor", "Replay per-predictor frame streams through the fleet");
  m->add_option("--config", mon.config)->required();
  m->add_option("--frames", mon.streams, "Directory of per-predictor streams")->required();
  m->add_option("--out", mon.out, "Report log (overrides the config)");
  m->add_option("--seed", unused_seed);

  IngestArgs ing;
  auto* in = app.add_subcommand("ingest-nasa", "Build train/test frame files from the NASA IMS dataset");
  in->add_option("--root", ing.root)->required();
  in->add_option("--out", ing.out, "Output directory")->required();
  in->add_option("--seed", ing.seed);
  in->add_option("--train-frames", ing.train_frames);

  ExportArgs ex;
  auto* e = app.add_subcommand("export-plot", "Export an MSE timeline or a spectrum as CSV");
  e->add_option("--report-log", ex.report_log);
  e->add_option("--predictor", ex.predictor);
  e->add_option("--frames", ex.frames);
  e->add_option("--frame-index", ex.frame_index);
  e->add_option("--axis", ex.axis);
  e->add_option("--out", ex.out);
  e->add_option("--seed", unused_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    std::cerr << "error: usage: " << err.what() << "\n";
    return 2;
  }

  try {
    if (*s) run_synth(synth);
    else if (*t) run_train(tr);
    else if (*c) run_calibrate(cal);
    else if (*scmd) run_score(sc);
    else if (*m) run_monitor(mon);
    else if (*in) run_ingest(ing);
    else if (*e) run_export(ex);
  } catch (const Error& err) {
    std::cerr << "error: " << err.code() << ": " << err.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: io: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
