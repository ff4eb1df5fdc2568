#include "dcan/frame.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"

namespace dcan {

namespace {
constexpr std::string_view kFrameMagic = "FRME";
}

Tensor<float> frames_to_tensor(std::span<const Frame> frames, std::size_t axes, std::size_t length) {
  if (frames.empty()) throw DimensionError("no frames to pack");
  Tensor<float> out({frames.size(), 1, axes, length});
  float* dst = out.ptr();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.axes != axes || f.samples.size() != axes * length) {
      throw DimensionError("frame " + std::to_string(i) + " (" + f.source + " @" + std::to_string(f.timestamp) +
                           ") has " + std::to_string(f.axes) + " axes x " + std::to_string(f.length()) +
                           " points, expected " + std::to_string(axes) + " x " + std::to_string(length));
    }
    for (float v : f.samples) {
      if (!std::isfinite(v)) {
        throw ParseError("frame " + std::to_string(i) + " @" + std::to_string(f.timestamp) +
                         " contains a non-finite sample");
      }
    }
    std::copy(f.samples.begin(), f.samples.end(), dst + i * axes * length);
  }
  return out;
}

std::string encode_frame_file(std::span<const Frame> frames) {
  const std::size_t axes = frames.empty() ? 1 : frames.front().axes;
  const std::size_t length = frames.empty() ? kFrameLength : frames.front().length();
  if (axes == 0 || axes > 255) throw DimensionError("frame axis count must be in 1..255");
  detail::ByteWriter w;
  w.put_bytes(kFrameMagic);
  w.put<std::uint32_t>(kFrameFileVersion);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(axes));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(length));
  for (const Frame& f : frames) {
    if (f.axes != axes || f.samples.size() != axes * length) {
      throw DimensionError("all frames in a frame file must share one geometry");
    }
    w.put<std::uint64_t>(f.timestamp);
    for (float v : f.samples) w.put<float>(v);
  }
  return std::move(w).take();
}

std::vector<Frame> decode_frame_file(std::string_view bytes, const std::string& source) {
  detail::ByteReader r(bytes, "frame file");
  if (r.take(std::min<std::size_t>(4, bytes.size())) != kFrameMagic) {
    throw FormatError("not a frame file (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kFrameFileVersion) {
    throw VersionMismatchError("frame file version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kFrameFileVersion) + ")");
  }
  const std::size_t axes = r.get<std::uint8_t>();
  const std::size_t length = r.get<std::uint32_t>();
  if (axes == 0 || length == 0) throw FormatError("frame file declares an empty frame geometry");
  const std::size_t record = sizeof(std::uint64_t) + axes * length * sizeof(float);
  if (r.remaining() % record != 0) {
    throw TruncatedFileError("frame file ends inside a frame record (" + std::to_string(r.remaining() % record) +
                             " stray bytes)");
  }
  std::vector<Frame> frames(r.remaining() / record);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    Frame& f = frames[i];
    f.timestamp = r.get<std::uint64_t>();
    f.source = source;
    f.window = static_cast<std::uint32_t>(i);
    f.axes = axes;
    f.samples.resize(axes * length);
    for (float& v : f.samples) v = r.get<float>();
  }
  return frames;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void write_frame_file(const std::filesystem::path& path, std::span<const Frame> frames) {
  write_file_bytes(path, encode_frame_file(frames));
}

std::vector<Frame> read_frame_file(const std::filesystem::path& path, const std::string& source) {
  return decode_frame_file(read_file_bytes(path), source);
}

}  // namespace dcan
