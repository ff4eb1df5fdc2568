#include "dcan/fleet.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <set>

#include <json.hpp>

#include "dcan/error.hpp"
#include "dcan/training.hpp"

namespace dcan {

using ojson = nlohmann::ordered_json;

FleetConfig FleetConfig::default_six(const std::filesystem::path& checkpoint) {
  FleetConfig fleet;
  for (const char* part : {"motor", "gear", "cylinder"}) {
    for (const char* side : {"left", "right"}) {
      PredictorSpec p;
      p.id = std::string(part) + "-" + side;
      p.location = std::string(part) + " bearing, " + side + " side";
      p.checkpoint = checkpoint;
      fleet.predictors.push_back(std::move(p));
    }
  }
  return fleet;
}

void FleetConfig::validate() const {
  if (predictors.empty()) throw ConfigError("fleet has no predictors");
  std::set<std::string> ids;
  for (const auto& p : predictors) {
    if (p.id.empty()) throw ConfigError("predictor with empty id");
    if (!ids.insert(p.id).second) throw ConfigError("duplicate predictor id '" + p.id + "'");
    if (p.axes == 0) throw ConfigError("predictor '" + p.id + "' has zero axes");
    if (!(p.normalization.sigma > 0.0)) throw ConfigError("predictor '" + p.id + "' has non-positive sigma");
    p.alarm.validate();
  }
}

const PredictorSpec* FleetConfig::find(std::string_view id) const noexcept {
  for (const auto& p : predictors) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::string fleet_config_to_json(const FleetConfig& config) {
  ojson preds = ojson::array();
  for (const auto& p : config.predictors) {
    preds.push_back({{"id", p.id},
                     {"location", p.location},
                     {"checkpoint", p.checkpoint.generic_string()},
                     {"axes", p.axes},
                     {"normalization", {{"mu", p.normalization.mu}, {"sigma", p.normalization.sigma}}},
                     {"alarm",
                      {{"thresholds", p.alarm.level_thresholds},
                       {"window", p.alarm.window_len},
                       {"trigger_fresh", p.alarm.trigger_fresh},
                       {"trigger_sensitized", p.alarm.trigger_sensitized}}}});
  }
  const ojson j = {{"report_log", config.report_log.generic_string()}, {"predictors", preds}};
  return j.dump(2) + "\n";
}

FleetConfig fleet_config_from_json(std::string_view text) {
  FleetConfig fleet;
  try {
    const auto j = nlohmann::json::parse(text);
    fleet.report_log = j.value("report_log", std::string{});
    for (const auto& pj : j.at("predictors")) {
      PredictorSpec p;
      p.id = pj.at("id").get<std::string>();
      p.location = pj.value("location", p.id);
      p.checkpoint = pj.at("checkpoint").get<std::string>();
      p.axes = pj.value("axes", std::size_t{3});
      if (pj.contains("normalization")) {
        p.normalization.mu = pj["normalization"].at("mu").get<double>();
        p.normalization.sigma = pj["normalization"].at("sigma").get<double>();
      }
      if (pj.contains("alarm")) {
        const auto& a = pj["alarm"];
        p.alarm.level_thresholds = a.value("thresholds", p.alarm.level_thresholds);
        p.alarm.window_len = a.value("window", p.alarm.window_len);
        p.alarm.trigger_fresh = a.value("trigger_fresh", p.alarm.trigger_fresh);
        p.alarm.trigger_sensitized = a.value("trigger_sensitized", p.alarm.trigger_sensitized);
      }
      fleet.predictors.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed fleet config: ") + e.what());
  }
  fleet.validate();
  return fleet;
}

FleetConfig load_fleet_config(const std::filesystem::path& path) {
  FleetConfig fleet = fleet_config_from_json(read_file_bytes(path));
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  for (auto& p : fleet.predictors) resolve(p.checkpoint);
  resolve(fleet.report_log);
  return fleet;
}

void save_fleet_config(const std::filesystem::path& path, const FleetConfig& config) {
  write_file_bytes(path, fleet_config_to_json(config));
}

std::string report_to_line(const StatusReport& r) {
  const ojson j = {{"timestamp", r.timestamp},
                   {"predictor", r.predictor_id},
                   {"location", r.location},
                   {"window", r.window},
                   {"per_axis_mse", r.per_axis_mse},
                   {"total_mse", r.total_mse},
                   {"score", r.score},
                   {"level", level_name(r.level)},
                   {"alarm_fired", r.alarm_fired},
                   {"anomalous_in_window", r.anomalous_in_window}};
  return j.dump();
}

StatusReport report_from_line(std::string_view line) {
  StatusReport r;
  try {
    const auto j = nlohmann::json::parse(line);
    r.timestamp = j.at("timestamp").get<std::uint64_t>();
    r.predictor_id = j.at("predictor").get<std::string>();
    r.location = j.at("location").get<std::string>();
    r.window = j.at("window").get<std::uint32_t>();
    r.per_axis_mse = j.at("per_axis_mse").get<std::vector<double>>();
    r.total_mse = j.at("total_mse").get<double>();
    r.score = j.at("score").get<double>();
    r.level = level_from_name(j.at("level").get<std::string>());
    r.alarm_fired = j.at("alarm_fired").get<bool>();
    r.anomalous_in_window = j.at("anomalous_in_window").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed report line: ") + e.what());
  }
  return r;
}

void append_reports(const std::filesystem::path& log, std::span<const StatusReport> reports) {
  if (reports.empty()) return;
  std::string text;
  for (const auto& r : reports) text += report_to_line(r) + "\n";
  std::ofstream out(log, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open report log '" + log.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed to append to '" + log.string() + "'");
}

std::vector<StatusReport> read_report_log(const std::filesystem::path& log) {
  const std::string text = read_file_bytes(log);
  std::vector<StatusReport> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    ++line_no;
    const std::string_view line(text.data() + pos, nl - pos);
    if (!line.empty()) {
      try {
        out.push_back(report_from_line(line));
      } catch (const ParseError& e) {
        throw ParseError(log.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    pos = nl + 1;
  }
  return out;
}

std::vector<ReconstructionReport> reconstruction_reports(const Checkpoint& checkpoint, std::span<const Frame> frames) {
  const auto& config = checkpoint.model.config;
  std::vector<ReconstructionReport> out;
  out.reserve(frames.size());
  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < frames.size(); start += kChunk) {
    const auto chunk = frames.subspan(start, std::min(kChunk, frames.size() - start));
    for (const auto& f : chunk) {
      if (f.axes != config.axes) {
        throw ConfigError("frame has " + std::to_string(f.axes) + " axes but the checkpoint expects " +
                          std::to_string(config.axes));
      }
    }
    const auto input = standardized_tensor(chunk, checkpoint.stats, config.frame_len);
    const auto recon = reconstruct(checkpoint.model, input);
    for (auto& r : report(input, recon)) out.push_back(std::move(r));
  }
  return out;
}

ScoreNormalization calibrate_predictor(const Checkpoint& checkpoint, std::span<const Frame> frames) {
  if (frames.size() < 2) throw CalibrationError("calibration needs at least 2 frames");
  std::vector<double> totals;
  for (const auto& r : reconstruction_reports(checkpoint, frames)) totals.push_back(r.total_mse);
  return calibrate(totals);
}

Predictor::Predictor(PredictorSpec spec, Checkpoint checkpoint)
    : spec_(std::move(spec)), checkpoint_(std::move(checkpoint)), tracker_(spec_.alarm) {
  if (checkpoint_.model.config.axes != spec_.axes) {
    throw ConfigError("predictor '" + spec_.id + "' expects " + std::to_string(spec_.axes) +
                      " axes but its checkpoint has " + std::to_string(checkpoint_.model.config.axes));
  }
}

StatusReport Predictor::process(const Frame& frame) {
  if (frame.axes != spec_.axes) {
    throw ConfigError("predictor '" + spec_.id + "' expects " + std::to_string(spec_.axes) + "-axis frames, got " +
                      std::to_string(frame.axes));
  }
  const auto rec = reconstruction_reports(checkpoint_, std::span(&frame, 1)).front();
  const auto decision = tracker_.observe(score(rec.total_mse, spec_.normalization));
  StatusReport r;
  r.timestamp = frame.timestamp;
  r.predictor_id = spec_.id;
  r.location = spec_.location;
  r.window = frame.window;
  r.per_axis_mse = rec.per_axis_mse;
  r.total_mse = rec.total_mse;
  r.score = decision.score;
  r.level = decision.level;
  r.alarm_fired = decision.alarm_fired;
  r.anomalous_in_window = decision.anomalous_in_window;
  return r;
}

std::vector<StatusReport> Predictor::process_all(std::span<const Frame> frames) {
  std::vector<StatusReport> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(process(f));
  return out;
}

namespace {

std::vector<Predictor> make_predictors(const FleetConfig& config, const std::map<std::string, Checkpoint>& by_id) {
  std::vector<Predictor> out;
  for (const auto& spec : config.predictors) {
    const auto it = by_id.find(spec.id);
    if (it == by_id.end()) throw ConfigError("no checkpoint supplied for predictor '" + spec.id + "'");
    out.emplace_back(spec, it->second);
  }
  return out;
}

std::map<std::string, Checkpoint> load_checkpoints(const FleetConfig& config) {
  config.validate();
  std::map<std::filesystem::path, Checkpoint> by_path;
  std::map<std::string, Checkpoint> by_id;
  for (const auto& spec : config.predictors) {
    auto it = by_path.find(spec.checkpoint);
    if (it == by_path.end()) it = by_path.emplace(spec.checkpoint, load_checkpoint(spec.checkpoint)).first;
    by_id.emplace(spec.id, it->second);
  }
  return by_id;
}

}  // namespace

Fleet::Fleet(FleetConfig config) : Fleet(config, load_checkpoints(config)) {}

Fleet::Fleet(FleetConfig config, const std::map<std::string, Checkpoint>& checkpoints)
    : config_(std::move(config)) {
  config_.validate();
  predictors_ = make_predictors(config_, checkpoints);
}

Predictor& Fleet::predictor(std::string_view id) {
  for (auto& p : predictors_) {
    if (p.spec().id == id) return p;
  }
  throw RoutingError("no predictor '" + std::string(id) + "' in the fleet");
}

std::vector<StatusReport> Fleet::run(const FrameStreams& streams) {
  for (const auto& [id, frames] : streams) {
    if (!config_.find(id)) throw RoutingError("stream for unknown predictor '" + id + "'");
  }

  struct Job {
    std::size_t order;
    Predictor* predictor;
    std::vector<Frame> frames;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < predictors_.size(); ++i) {
    const auto it = streams.find(predictors_[i].spec().id);
    if (it == streams.end() || it->second.empty()) continue;
    Job job{i, &predictors_[i], it->second};
    std::stable_sort(job.frames.begin(), job.frames.end(), [](const Frame& a, const Frame& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.window < b.window;
    });
    for (const auto& f : job.frames) {
      if (f.axes != job.predictor->spec().axes) {
        throw ConfigError("stream for '" + job.predictor->spec().id + "' has " + std::to_string(f.axes) +
                          "-axis frames; the predictor expects " + std::to_string(job.predictor->spec().axes));
      }
    }
    jobs.push_back(std::move(job));
  }

  std::vector<std::future<std::vector<StatusReport>>> futures;
  for (auto& job : jobs) {
    futures.push_back(std::async(std::launch::async, [&job] { return job.predictor->process_all(job.frames); }));
  }

  struct Keyed {
    std::uint64_t timestamp;
    std::size_t order;
    std::size_t seq;
    StatusReport report;
  };
  std::vector<Keyed> merged;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    auto reports = futures[j].get();
    for (std::size_t s = 0; s < reports.size(); ++s) {
      merged.push_back({reports[s].timestamp, jobs[j].order, s, std::move(reports[s])});
    }
  }
  std::sort(merged.begin(), merged.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.timestamp, a.order, a.seq) < std::tie(b.timestamp, b.order, b.seq);
  });
  std::vector<StatusReport> out;
  out.reserve(merged.size());
  for (auto& k : merged) out.push_back(std::move(k.report));
  if (!config_.report_log.empty()) append_reports(config_.report_log, out);
  return out;
}

std::vector<StatusReport> run_fleet(const FleetConfig& config, const FrameStreams& streams) {
  Fleet fleet(config);
  return fleet.run(streams);
}

}  // namespace dcan
