#include "dcan/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dcan/error.hpp"

namespace dcan {

ScoreNormalization calibrate(std::span<const double> mse_values) {
  if (mse_values.size() < 2) {
    throw CalibrationError("score calibration needs at least 2 MSE values, got " +
                           std::to_string(mse_values.size()));
  }
  double sum = 0.0;
  for (double v : mse_values) {
    if (!std::isfinite(v)) throw CalibrationError("score calibration received a non-finite MSE value");
    sum += v;
  }
  const double mu = sum / static_cast<double>(mse_values.size());
  double sq = 0.0;
  for (double v : mse_values) sq += (v - mu) * (v - mu);
  const double sigma = std::sqrt(sq / static_cast<double>(mse_values.size()));
  // Equal inputs can leave a rounding-level sigma behind; treat that as zero.
  const auto [lo, hi] = std::minmax_element(mse_values.begin(), mse_values.end());
  if (*lo == *hi || !(sigma > 1e-12 * std::abs(mu))) {
    throw CalibrationError("score calibration MSE values have zero variance");
  }
  return {mu, sigma};
}

double score(double mse, const ScoreNormalization& norm) noexcept { return (mse - norm.mu) / norm.sigma; }

std::string_view level_name(Level level) noexcept {
  switch (level) {
    case Level::low:
      return "low";
    case Level::medium:
      return "medium";
    case Level::high:
      return "high";
    case Level::none:
      break;
  }
  return "none";
}

Level level_from_name(std::string_view name) {
  for (Level l : {Level::none, Level::low, Level::medium, Level::high}) {
    if (level_name(l) == name) return l;
  }
  throw ConfigError("unknown alarm level '" + std::string(name) + "'");
}

void AlarmConfig::validate() const {
  const auto& t = level_thresholds;
  if (!(t[0] < t[1] && t[1] < t[2])) throw ConfigError("alarm level thresholds must be strictly increasing");
  if (!(window_len >= trigger_fresh && trigger_fresh > trigger_sensitized && trigger_sensitized >= 1)) {
    throw ConfigError("alarm triggers must satisfy window_len >= trigger_fresh > trigger_sensitized >= 1");
  }
}

Level classify(double score, const AlarmConfig& config) noexcept {
  if (score > config.level_thresholds[2]) return Level::high;
  if (score > config.level_thresholds[1]) return Level::medium;
  if (score > config.level_thresholds[0]) return Level::low;
  return Level::none;
}

std::size_t HysteresisState::anomalous_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(window.begin(), window.end(), [](const WindowSlot& s) { return s.anomalous; }));
}

HysteresisStep hysteresis_step(const HysteresisState& state, bool is_anomalous, const AlarmConfig& config) {
  HysteresisStep step{state, false, 0};
  auto& window = step.state.window;
  window.push_back({is_anomalous, false});
  while (window.size() > config.window_len) window.pop_front();

  const bool prior = std::any_of(window.begin(), window.end() - 1, [](const WindowSlot& s) { return s.alarm_fired; });
  const std::size_t n = step.state.anomalous_count();
  const std::size_t trigger = prior ? config.trigger_sensitized : config.trigger_fresh;
  step.alarm_fired = is_anomalous && n > trigger;
  step.anomalous_in_window = n;
  window.back().alarm_fired = step.alarm_fired;
  return step;
}

AlarmTracker::AlarmTracker(AlarmConfig config) : config_(config) { config_.validate(); }

AlarmDecision AlarmTracker::observe(double score) {
  AlarmDecision d;
  d.score = score;
  d.level = classify(score, config_);
  HysteresisStep step = hysteresis_step(state_, d.level >= Level::low, config_);
  state_ = std::move(step.state);
  d.alarm_fired = step.alarm_fired;
  d.anomalous_in_window = step.anomalous_in_window;
  return d;
}

}  // namespace dcan
