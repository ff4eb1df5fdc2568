#pragma once

// Per-location predictors, the fleet runner and the status-report log.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcan/checkpoint.hpp"
#include "dcan/frame.hpp"
#include "dcan/scoring.hpp"

namespace dcan {

struct PredictorSpec {
  std::string id;
  std::string location;
  std::filesystem::path checkpoint;
  std::size_t axes = 3;
  ScoreNormalization normalization;
  AlarmConfig alarm;

  friend bool operator==(const PredictorSpec&, const PredictorSpec&) = default;
};

struct FleetConfig {
  std::vector<PredictorSpec> predictors;
  std::filesystem::path report_log;  // empty: reports are only returned

  // motor, gear and cylinder bearings, left and right side, sharing one
  // checkpoint path. No report log is set.
  static FleetConfig default_six(const std::filesystem::path& checkpoint = "model.dcan");

  // Throws ConfigError on an empty fleet, duplicate ids or invalid alarms.
  void validate() const;
  const PredictorSpec* find(std::string_view id) const noexcept;

  friend bool operator==(const FleetConfig&, const FleetConfig&) = default;
};

// JSON text. Relative checkpoint and log paths in a file are resolved
// against the file's directory by load_fleet_config.
std::string fleet_config_to_json(const FleetConfig& config);
FleetConfig fleet_config_from_json(std::string_view text);
FleetConfig load_fleet_config(const std::filesystem::path& path);
void save_fleet_config(const std::filesystem::path& path, const FleetConfig& config);

struct StatusReport {
  std::uint64_t timestamp = 0;
  std::string predictor_id;
  std::string location;
  std::uint32_t window = 0;
  std::vector<double> per_axis_mse;
  double total_mse = 0.0;
  double score = 0.0;
  Level level = Level::none;
  bool alarm_fired = false;
  std::size_t anomalous_in_window = 0;

  friend bool operator==(const StatusReport&, const StatusReport&) = default;
};

// One JSON object per line, fields in a fixed order, no trailing newline.
std::string report_to_line(const StatusReport& report);
StatusReport report_from_line(std::string_view line);

// Appends one line per report; creates the file if needed.
void append_reports(const std::filesystem::path& log, std::span<const StatusReport> reports);
std::vector<StatusReport> read_report_log(const std::filesystem::path& log);

// Full per-frame reconstruction error of a checkpoint on raw frames.
std::vector<ReconstructionReport> reconstruction_reports(const Checkpoint& checkpoint, std::span<const Frame> frames);

// Scoring-alarm calibration on the checkpoint's total_mse over `frames`.
ScoreNormalization calibrate_predictor(const Checkpoint& checkpoint, std::span<const Frame> frames);

// One location's model plus its alarm state.
class Predictor {
 public:
  // Throws ConfigError when the checkpoint's axis count disagrees with the
  // spec.
  Predictor(PredictorSpec spec, Checkpoint checkpoint);

  // standardize -> reconstruct -> report -> score -> classify -> hysteresis.
  StatusReport process(const Frame& frame);
  std::vector<StatusReport> process_all(std::span<const Frame> frames);

  const PredictorSpec& spec() const noexcept { return spec_; }
  const AlarmTracker& tracker() const noexcept { return tracker_; }

 private:
  PredictorSpec spec_;
  Checkpoint checkpoint_;
  AlarmTracker tracker_;
};

using FrameStreams = std::map<std::string, std::vector<Frame>>;

class Fleet {
 public:
  // Loads each predictor's checkpoint (a path shared by several predictors
  // is read once).
  explicit Fleet(FleetConfig config);
  Fleet(FleetConfig config, const std::map<std::string, Checkpoint>& checkpoints);

  // Each stream is processed by its predictor in (timestamp, window) order,
  // predictors running concurrently. The returned reports are merged by
  // (timestamp, fleet order) and, when the config names a log, appended to
  // it. Throws RoutingError for a stream whose id is not in the fleet.
  std::vector<StatusReport> run(const FrameStreams& streams);

  const FleetConfig& config() const noexcept { return config_; }
  Predictor& predictor(std::string_view id);

 private:
  FleetConfig config_;
  std::vector<Predictor> predictors_;
};

std::vector<StatusReport> run_fleet(const FleetConfig& config, const FrameStreams& streams);

}  // namespace dcan
