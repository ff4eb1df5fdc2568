#pragma once

// MSE normalization, severity levels and the windowed hysteresis alarm.

#include <array>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <string_view>

namespace dcan {

struct ScoreNormalization {
  double mu = 0.0;
  double sigma = 1.0;

  friend bool operator==(const ScoreNormalization&, const ScoreNormalization&) = default;
};

// Mean and population standard deviation of calibration-set MSE values.
// Fewer than two values, or values with no spread, are a CalibrationError.
ScoreNormalization calibrate(std::span<const double> mse_values);

// (mse - mu) / sigma
double score(double mse, const ScoreNormalization& norm) noexcept;

enum class Level { none = 0, low = 1, medium = 2, high = 3 };

std::string_view level_name(Level level) noexcept;
Level level_from_name(std::string_view name);

struct AlarmConfig {
  std::array<double, 3> level_thresholds{3.0, 5.0, 8.0};  // low, medium, high (z-units)
  std::size_t window_len = 30;
  std::size_t trigger_fresh = 16;
  std::size_t trigger_sensitized = 12;

  // Throws ConfigError on non-increasing thresholds or inconsistent triggers.
  void validate() const;

  friend bool operator==(const AlarmConfig&, const AlarmConfig&) = default;
};

// Highest level whose threshold the score strictly exceeds.
Level classify(double score, const AlarmConfig& config) noexcept;

struct WindowSlot {
  bool anomalous = false;
  bool alarm_fired = false;

  friend bool operator==(const WindowSlot&, const WindowSlot&) = default;
};

// Most recent samples, oldest first; the last slot is the current moment.
struct HysteresisState {
  std::deque<WindowSlot> window;

  std::size_t anomalous_count() const noexcept;
  friend bool operator==(const HysteresisState&, const HysteresisState&) = default;
};

struct HysteresisStep {
  HysteresisState state;
  bool alarm_fired = false;
  std::size_t anomalous_in_window = 0;
};

// Pushes one sample. With n anomalous samples in the window (current one
// included) and `prior` meaning an alarm fired in an earlier slot still in the
// window, an alarm fires iff the current sample is anomalous and
// n > trigger_fresh (no prior alarm) or n > trigger_sensitized (prior alarm).
HysteresisStep hysteresis_step(const HysteresisState& state, bool is_anomalous, const AlarmConfig& config);

struct AlarmDecision {
  double score = 0.0;
  Level level = Level::none;
  bool alarm_fired = false;
  std::size_t anomalous_in_window = 0;
};

// Stateful per-predictor wrapper: score -> level -> hysteresis. A sample is
// anomalous for the window when its level is at least `low`.
class AlarmTracker {
 public:
  explicit AlarmTracker(AlarmConfig config = {});

  AlarmDecision observe(double score);
  const HysteresisState& state() const noexcept { return state_; }
  const AlarmConfig& config() const noexcept { return config_; }

 private:
  AlarmConfig config_;
  HysteresisState state_;
};

}  // namespace dcan
