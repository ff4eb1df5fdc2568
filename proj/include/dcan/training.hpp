#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcan/frame.hpp"
#include "dcan/model.hpp"

namespace dcan {

// Per-axis affine normalization fitted on training frames only.
struct StandardizationStats {
  static constexpr double kStdFloor = 1e-8;

  std::vector<double> mean;
  std::vector<double> std;

  std::size_t axes() const noexcept { return mean.size(); }
  friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

// Population mean and standard deviation per axis over every point of every
// frame. Needs at least two frames; a (near-)constant axis is a
// CalibrationError naming that axis.
StandardizationStats fit_standardization(std::span<const Frame> frames);

Frame standardize(const Frame& frame, const StandardizationStats& stats);
Frame destandardize(const Frame& frame, const StandardizationStats& stats);

// Standardizes and packs frames into a (N, 1, axes, length) tensor.
Tensor<float> standardized_tensor(std::span<const Frame> frames, const StandardizationStats& stats,
                                  std::size_t length = kFrameLength);

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double validation_fraction = 0.1;

  void validate() const;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct LossHistory {
  std::vector<EpochLoss> epochs;

  // "epoch,train_mse,val_mse" header plus one row per epoch.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  LossHistory history;
  std::size_t best_epoch = 0;  // weights of this epoch are the ones kept
  bool early_stopped = false;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> validation_indices;
};

struct TrainHooks {
  // Called with the frame index every time a frame contributes to a gradient.
  std::function<void(std::size_t)> on_gradient_frame;
  std::function<void(const EpochLoss&)> on_epoch;
};

// Mini-batch Adam on mse(reconstruct(x), x). `frames` must already be
// standardized, shape (N, 1, axes, frame_len). A seeded split holds out
// validation frames, which never enter a gradient; training stops after
// `patience` epochs without validation improvement and the model is left
// holding the best-validation weights.
TrainResult train(DcanModel<float>& model, const Tensor<float>& frames, const TrainConfig& config,
                  const TrainHooks& hooks = {});

TrainResult train(DcanModel<float>& model, std::span<const Frame> frames, const StandardizationStats& stats,
                  const TrainConfig& config, const TrainHooks& hooks = {});

// Mean reconstruction MSE over a standardized frame tensor, evaluated in
// chunks of `chunk` frames.
double evaluate_mse(const DcanModel<float>& model, const Tensor<float>& frames, std::size_t chunk = 64);

// Rows [first, first + count) of a (N, ...) tensor, or an explicit index list.
Tensor<float> gather_rows(const Tensor<float>& frames, std::span<const std::size_t> rows);

}  // namespace dcan
