#include "dcan/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "dcan/kernels.hpp"

namespace dcan {

StandardizationStats fit_standardization(std::span<const Frame> frames) {
  if (frames.size() < 2) {
    throw CalibrationError("standardization needs at least 2 frames, got " + std::to_string(frames.size()));
  }
  const std::size_t axes = frames.front().axes;
  StandardizationStats stats;
  stats.mean.assign(axes, 0.0);
  stats.std.assign(axes, 0.0);
  for (const Frame& f : frames) {
    if (f.axes != axes) throw DimensionError("frames disagree on axis count");
  }
  for (std::size_t a = 0; a < axes; ++a) {
    // Two passes in double keep the variance exact enough for idempotence.
    double sum = 0.0;
    std::size_t count = 0;
    for (const Frame& f : frames) {
      for (float v : f.axis(a)) sum += v;
      count += f.length();
    }
    const double mean = sum / static_cast<double>(count);
    double sq = 0.0;
    for (const Frame& f : frames) {
      for (float v : f.axis(a)) sq += (v - mean) * (v - mean);
    }
    const double sd = std::sqrt(sq / static_cast<double>(count));
    if (!(sd > StandardizationStats::kStdFloor)) {
      throw CalibrationError("axis " + std::to_string(a) + " is constant (std " + std::to_string(sd) +
                             "); cannot standardize");
    }
    stats.mean[a] = mean;
    stats.std[a] = sd;
  }
  return stats;
}

namespace {

void check_stats(const Frame& frame, const StandardizationStats& stats) {
  if (frame.axes != stats.axes()) {
    throw DimensionError("frame has " + std::to_string(frame.axes) + " axes, statistics cover " +
                         std::to_string(stats.axes()));
  }
}

}  // namespace

Frame standardize(const Frame& frame, const StandardizationStats& stats) {
  check_stats(frame, stats);
  Frame out = frame;
  for (std::size_t a = 0; a < out.axes; ++a) {
    for (float& v : out.axis(a)) v = static_cast<float>((v - stats.mean[a]) / stats.std[a]);
  }
  return out;
}

Frame destandardize(const Frame& frame, const StandardizationStats& stats) {
  check_stats(frame, stats);
  Frame out = frame;
  for (std::size_t a = 0; a < out.axes; ++a) {
    for (float& v : out.axis(a)) v = static_cast<float>(v * stats.std[a] + stats.mean[a]);
  }
  return out;
}

Tensor<float> standardized_tensor(std::span<const Frame> frames, const StandardizationStats& stats,
                                  std::size_t length) {
  Tensor<float> t = frames_to_tensor(frames, stats.axes(), length);
  const std::size_t axes = stats.axes();
  for (std::size_t n = 0; n < frames.size(); ++n) {
    for (std::size_t a = 0; a < axes; ++a) {
      float* row = &t.at(n, 0, a, 0);
      for (std::size_t i = 0; i < length; ++i) row[i] = static_cast<float>((row[i] - stats.mean[a]) / stats.std[a]);
    }
  }
  return t;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
    throw ConfigError("validation fraction must lie in (0, 0.5]");
  }
}

std::string LossHistory::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_mse,val_mse\n";
  for (const auto& e : epochs) out << e.epoch << ',' << e.train_mse << ',' << e.val_mse << '\n';
  return out.str();
}

void LossHistory::write_csv(const std::filesystem::path& path) const { write_file_bytes(path, to_csv()); }

Tensor<float> gather_rows(const Tensor<float>& frames, std::span<const std::size_t> rows) {
  Shape shape = frames.shape();
  const std::size_t row_size = frames.size() / shape[0];
  shape[0] = rows.size();
  Tensor<float> out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(frames.ptr() + rows[i] * row_size, row_size, out.ptr() + i * row_size);
  }
  return out;
}

double evaluate_mse(const DcanModel<float>& model, const Tensor<float>& frames, std::size_t chunk) {
  const std::size_t n = frames.dim(0);
  double sq = 0.0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < n; start += chunk) {
    rows.resize(std::min(chunk, n - start));
    std::iota(rows.begin(), rows.end(), start);
    const Tensor<float> batch = gather_rows(frames, rows);
    const Tensor<float> recon = reconstruct(model, batch);
    sq += kernels::sum_sq_diff(recon.ptr(), batch.ptr(), batch.size());
  }
  return sq / static_cast<double>(frames.size());
}

TrainResult train(DcanModel<float>& model, const Tensor<float>& frames, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  const auto& mc = model.config;
  if (frames.rank() != 4 || frames.dim(1) != 1 || frames.dim(2) != mc.axes || frames.dim(3) != mc.frame_len) {
    throw DimensionError("training frames must have shape (N, 1, " + std::to_string(mc.axes) + ", " +
                         std::to_string(mc.frame_len) + "), got " + shape_string(frames.shape()));
  }
  const std::size_t n = frames.dim(0);
  const auto n_val = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * config.validation_fraction));
  if (n < 2 || n_val >= n) {
    throw TrainingError("need at least one training and one validation frame (got " + std::to_string(n) +
                        " frames)");
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  TrainResult result;
  result.validation_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  result.train_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(result.validation_indices.begin(), result.validation_indices.end());
  std::sort(result.train_indices.begin(), result.train_indices.end());
  const Tensor<float> validation = gather_rows(frames, result.validation_indices);

  nn::AdamState<float> adam(nn::AdamConfig{config.lr});
  DcanModel<float> grads = DcanModel<float>::zeros(mc);
  std::vector<nn::ParamRef<float>> refs;
  {
    auto params = model.named_parameters();
    auto gparams = grads.named_parameters();
    for (std::size_t i = 0; i < params.size(); ++i) refs.push_back({params[i].first, params[i].second, gparams[i].second});
  }

  DcanModel<float> best = model;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> epoch_order = result.train_indices;
  std::vector<std::size_t> batch_rows;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(epoch_order.begin(), epoch_order.end(), rng);
    double weighted_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < epoch_order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t count = std::min(config.batch_size, epoch_order.size() - start);
      batch_rows.assign(epoch_order.begin() + static_cast<std::ptrdiff_t>(start),
                        epoch_order.begin() + static_cast<std::ptrdiff_t>(start + count));
      if (hooks.on_gradient_frame) {
        for (std::size_t row : batch_rows) hooks.on_gradient_frame(row);
      }
      const Tensor<float> batch = gather_rows(frames, batch_rows);
      grads.set_zero();
      const double loss = reconstruction_loss_and_grad(model, batch, grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      adam.step(refs);
      weighted_loss += loss * static_cast<double>(count);
    }

    EpochLoss record{epoch, weighted_loss / static_cast<double>(epoch_order.size()), evaluate_mse(model, validation)};
    if (!std::isfinite(record.val_mse)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    result.history.epochs.push_back(record);
    if (hooks.on_epoch) hooks.on_epoch(record);

    if (record.val_mse < best_val) {
      best_val = record.val_mse;
      best = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  model = std::move(best);
  return result;
}

TrainResult train(DcanModel<float>& model, std::span<const Frame> frames, const StandardizationStats& stats,
                  const TrainConfig& config, const TrainHooks& hooks) {
  return train(model, standardized_tensor(frames, stats, model.config.frame_len), config, hooks);
}

}  // namespace dcan
