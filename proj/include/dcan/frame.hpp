#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcan/tensor.hpp"

namespace dcan {

inline constexpr std::size_t kFrameLength = 4096;
inline constexpr double kSampleRateHz = 1024.0;

// One sampling event: `axes` rows of samples (g), stored axis-major.
struct Frame {
  std::uint64_t timestamp = 0;  // seconds since the Unix epoch
  std::string source;           // "Set1/Ch5", predictor location, ...
  std::uint32_t window = 0;     // window index within the source recording
  std::size_t axes = 0;
  std::vector<float> samples;

  std::size_t length() const noexcept { return axes == 0 ? 0 : samples.size() / axes; }
  std::span<const float> axis(std::size_t a) const { return std::span(samples).subspan(a * length(), length()); }
  std::span<float> axis(std::size_t a) { return std::span(samples).subspan(a * length(), length()); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// Packs frames into a (N, 1, axes, length) tensor. Throws DimensionError on a
// frame of the wrong geometry and ParseError on non-finite samples.
Tensor<float> frames_to_tensor(std::span<const Frame> frames, std::size_t axes, std::size_t length = kFrameLength);

// "FRME" binary frame file: magic, u32 version, u8 axis count, u32 frame
// length, then per frame a u64 timestamp followed by axes*length little-endian
// float32 values, axis-major. The frame count is implied by the file size.
inline constexpr std::uint32_t kFrameFileVersion = 1;

std::string encode_frame_file(std::span<const Frame> frames);
// `source` labels every decoded frame; window indices are assigned 0..N-1.
std::vector<Frame> decode_frame_file(std::string_view bytes, const std::string& source = {});

void write_frame_file(const std::filesystem::path& path, std::span<const Frame> frames);
std::vector<Frame> read_frame_file(const std::filesystem::path& path, const std::string& source = {});

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace dcan
