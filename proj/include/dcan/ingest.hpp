#pragma once

// NASA IMS bearing files and mill-style 3-axis recordings into Frames.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcan/frame.hpp"

namespace dcan {

struct ImsRecording {
  std::uint64_t timestamp = 0;
  std::size_t channel_count = 0;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major, rows x channel_count

  std::vector<double> channel(std::size_t c) const;
};

// "2004.02.12.10.32.39" (any leading directories are ignored) -> seconds since
// the Unix epoch, UTC. Throws ParseError.
std::uint64_t parse_ims_timestamp(std::string_view filename);

// Whitespace-separated numeric rows with equal column counts. Throws
// ParseError naming the row (ragged, non-numeric) or on empty input.
ImsRecording parse_ims_file(std::string_view text, std::string_view filename);

struct WindowedSeries {
  std::vector<Frame> frames;
  std::vector<std::string> warnings;
};

// Consecutive A=1 windows of `frame_len` points every `hop` points; the
// trailing remainder is dropped. A series shorter than one window yields no
// frames and a warning.
WindowedSeries windowize(std::span<const double> series, std::uint64_t timestamp = 0,
                         const std::string& source = {}, std::size_t frame_len = kFrameLength,
                         std::size_t hop = kFrameLength);

struct ChannelId {
  int set = 0;
  int channel = 0;

  std::string label() const;  // "Set1/Ch5"
  friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

struct SplitSpec {
  std::vector<int> sets{1, 2, 3};
  std::vector<ChannelId> test_channels{{1, 5}, {1, 7}, {2, 1}};
  std::size_t train_frames = 30000;
  std::size_t frame_len = kFrameLength;
};

struct NasaSplits {
  std::vector<Frame> train;                         // A=1, ordered by (set, channel, timestamp, window)
  std::map<std::string, std::vector<Frame>> test;  // keyed by channel label, chronological
  std::size_t train_available = 0;
  std::vector<std::string> warnings;
};

// Locates a set directory under `root` ("Set1", "set_2", "1st_test", ...).
// Throws IngestError listing the directory's entries when absent.
std::filesystem::path find_set_directory(const std::filesystem::path& root, int set);

// Test channels are windowized whole, in chronological order. The train set
// is a seeded sample of min(spec.train_frames, available) windows drawn from
// every other channel of the listed sets.
NasaSplits build_nasa_splits(const std::filesystem::path& root, const SplitSpec& spec, std::uint64_t seed);

// Rows "timestamp,axis,index,value" (optional header; axis x|y|z or 0|1|2).
// One A=3 frame per timestamp, in timestamp order. Throws FrameAssemblyError
// naming the timestamp when an axis is missing or incomplete.
std::vector<Frame> parse_mill_frames(std::string_view csv_text, const std::string& source = {});
std::string mill_frames_to_csv(std::span<const Frame> frames);

// Reads a frame file, detecting the binary "FRME" format by its magic and
// otherwise parsing mill CSV.
std::vector<Frame> load_frames(const std::filesystem::path& path, const std::string& source = {});

}  // namespace dcan
