#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dcan/model.hpp"
#include "dcan/training.hpp"

namespace dcan {

// Checkpoint layout (all integers little-endian):
//   "DCAN" | u32 version | u32 metadata length | metadata (JSON text)
//   | u32 tensor count | per tensor: u32 name length, name, u32 rank,
//     u32 dims[rank], float32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct TrainingMetadata {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  std::optional<double> final_train_mse;
  std::optional<double> final_val_mse;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

struct Checkpoint {
  DcanModel<float> model;
  StandardizationStats stats;
  TrainingMetadata training;
};

std::string serialize_checkpoint(const DcanModel<float>& model, const StandardizationStats& stats,
                                 const TrainingMetadata& training = {});

// Throws FormatError (bad magic, malformed content), VersionMismatchError or
// TruncatedFileError. Nothing is returned on failure.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const DcanModel<float>& model,
                     const StandardizationStats& stats, const TrainingMetadata& training = {});
Checkpoint load_checkpoint(const std::filesystem::path& path);

TrainingMetadata metadata_from(const TrainResult& result);

}  // namespace dcan
