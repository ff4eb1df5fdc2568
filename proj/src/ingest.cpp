#include "dcan/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <regex>
#include <set>

#include "dcan/error.hpp"

namespace dcan {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

template <class F>
void for_each_line(std::string_view text, F&& f) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    f(line, ++line_no);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

std::string file_name_of(std::string_view path) {
  const auto slash = path.find_last_of("/\\");
  return std::string(slash == std::string_view::npos ? path : path.substr(slash + 1));
}

}  // namespace

std::vector<double> ImsRecording::channel(std::size_t c) const {
  if (c >= channel_count) {
    throw DimensionError("channel " + std::to_string(c + 1) + " requested from a recording with " +
                         std::to_string(channel_count) + " channels");
  }
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = values[r * channel_count + c];
  return out;
}

std::uint64_t parse_ims_timestamp(std::string_view filename) {
  static const std::regex pattern(R"((\d{4})\.(\d{2})\.(\d{2})\.(\d{2})\.(\d{2})\.(\d{2}))");
  const std::string name = file_name_of(filename);
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) {
    throw ParseError("file name '" + name + "' does not follow YYYY.MM.DD.HH.MM.SS");
  }
  auto field = [&](int i) { return std::stoi(m[i].str()); };
  using namespace std::chrono;
  const year_month_day ymd{year{field(1)}, month{static_cast<unsigned>(field(2))},
                           day{static_cast<unsigned>(field(3))}};
  const int hh = field(4), mm = field(5), ss = field(6);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) {
    throw ParseError("file name '" + name + "' is not a valid date and time");
  }
  const auto days = sys_days(ymd).time_since_epoch().count();
  if (days < 0) throw ParseError("file name '" + name + "' predates 1970");
  return static_cast<std::uint64_t>(days) * 86400u + static_cast<std::uint64_t>(hh * 3600 + mm * 60 + ss);
}

ImsRecording parse_ims_file(std::string_view text, std::string_view filename) {
  ImsRecording rec;
  rec.timestamp = parse_ims_timestamp(filename);
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    line = trim(line);
    if (line.empty()) return;
    std::size_t cols = 0;
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && is_space(line[pos])) ++pos;
      std::size_t end = pos;
      while (end < line.size() && !is_space(line[end])) ++end;
      if (end == pos) break;
      double v = 0.0;
      if (!parse_double(line.substr(pos, end - pos), v) || !std::isfinite(v)) {
        throw ParseError("row " + std::to_string(line_no) + ", column " + std::to_string(cols + 1) +
                         ": non-numeric token '" + std::string(line.substr(pos, end - pos)) + "'");
      }
      rec.values.push_back(v);
      ++cols;
      pos = end;
    }
    if (rec.rows == 0) {
      rec.channel_count = cols;
    } else if (cols != rec.channel_count) {
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(cols) + " columns, expected " +
                       std::to_string(rec.channel_count));
    }
    ++rec.rows;
  });
  if (rec.rows == 0) throw ParseError("'" + std::string(filename) + "' contains no data rows");
  return rec;
}

WindowedSeries windowize(std::span<const double> series, std::uint64_t timestamp, const std::string& source,
                         std::size_t frame_len, std::size_t hop) {
  if (frame_len == 0 || hop == 0) throw ConfigError("frame length and hop must be positive");
  WindowedSeries out;
  if (series.size() < frame_len) {
    out.warnings.push_back("series of " + std::to_string(series.size()) + " points is shorter than one " +
                           std::to_string(frame_len) + "-point frame" + (source.empty() ? "" : " (" + source + ")"));
    return out;
  }
  std::uint32_t index = 0;
  for (std::size_t start = 0; start + frame_len <= series.size(); start += hop, ++index) {
    Frame f;
    f.timestamp = timestamp;
    f.source = source;
    f.window = index;
    f.axes = 1;
    f.samples.resize(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i) f.samples[i] = static_cast<float>(series[start + i]);
    out.frames.push_back(std::move(f));
  }
  return out;
}

std::string ChannelId::label() const { return "Set" + std::to_string(set) + "/Ch" + std::to_string(channel); }

std::filesystem::path find_set_directory(const std::filesystem::path& root, int set) {
  namespace fs = std::filesystem;
  static const std::regex pattern(R"((?:set[ _-]?(?:no\.?\s*)?(\d+))|(?:(\d+)(?:st|nd|rd|th)[ _-]?test))",
                                  std::regex::icase);
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IngestError("dataset root '" + root.string() + "' is not a directory");
  std::vector<std::string> found;
  std::optional<fs::path> match;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    found.push_back(name);
    if (!entry.is_directory()) continue;
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) continue;
    const int n = std::stoi(m[1].matched ? m[1].str() : m[2].str());
    if (n == set && (!match || name < match->filename().string())) match = entry.path();
  }
  if (!match) {
    std::sort(found.begin(), found.end());
    std::string listing;
    for (const auto& f : found) listing += (listing.empty() ? "" : ", ") + f;
    throw IngestError("no directory for Set" + std::to_string(set) + " under '" + root.string() +
                      "'; found: " + (listing.empty() ? "(nothing)" : listing));
  }
  // Some distributions nest the files one level deeper (e.g. "4th_test/txt").
  fs::path dir = *match;
  for (int depth = 0; depth < 2; ++depth) {
    std::vector<fs::path> subdirs;
    bool has_files = false;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_directory()) subdirs.push_back(entry.path());
      else has_files = true;
    }
    if (has_files || subdirs.size() != 1) break;
    dir = subdirs.front();
  }
  return dir;
}

namespace {

struct ImsFile {
  std::filesystem::path path;
  std::uint64_t timestamp = 0;
};

std::vector<ImsFile> list_ims_files(const std::filesystem::path& dir) {
  std::vector<ImsFile> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    try {
      files.push_back({entry.path(), parse_ims_timestamp(entry.path().filename().string())});
    } catch (const ParseError&) {
      // Not a recording (README, checksums, ...).
    }
  }
  std::sort(files.begin(), files.end(), [](const ImsFile& a, const ImsFile& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.path < b.path;
  });
  return files;
}

// Row and column count without converting values.
std::pair<std::size_t, std::size_t> ims_geometry(std::string_view text) {
  std::size_t rows = 0, cols = 0;
  for_each_line(text, [&](std::string_view line, std::size_t) {
    line = trim(line);
    if (line.empty()) return;
    if (rows++ == 0) {
      bool in_token = false;
      for (char c : line) {
        if (is_space(c)) in_token = false;
        else if (!in_token) { in_token = true; ++cols; }
      }
    }
  });
  return {rows, cols};
}

// Identity of one candidate training window.
struct WindowId {
  int set;
  std::size_t file;  // index into the set's chronological file list
  int channel;
  std::uint32_t window;

  friend auto operator<=>(const WindowId&, const WindowId&) = default;
};

}  // namespace

NasaSplits build_nasa_splits(const std::filesystem::path& root, const SplitSpec& spec, std::uint64_t seed) {
  if (spec.frame_len == 0) throw ConfigError("frame length must be positive");
  NasaSplits out;
  std::set<ChannelId> test_set(spec.test_channels.begin(), spec.test_channels.end());
  for (const auto& ch : spec.test_channels) {
    if (std::find(spec.sets.begin(), spec.sets.end(), ch.set) == spec.sets.end()) {
      throw ConfigError("test channel " + ch.label() + " is not in a listed set");
    }
  }

  std::map<int, std::vector<ImsFile>> files;
  for (int set : spec.sets) files[set] = list_ims_files(find_set_directory(root, set));

  // Pass 1: enumerate every training window without keeping samples.
  std::vector<WindowId> candidates;
  for (int set : spec.sets) {
    const auto& list = files[set];
    if (list.empty()) out.warnings.push_back("Set" + std::to_string(set) + " has no timestamped files");
    for (std::size_t fi = 0; fi < list.size(); ++fi) {
      const auto [rows, cols] = ims_geometry(read_file_bytes(list[fi].path));
      const auto windows = static_cast<std::uint32_t>(rows / spec.frame_len);
      for (int ch = 1; ch <= static_cast<int>(cols); ++ch) {
        if (test_set.count({set, ch})) continue;
        for (std::uint32_t w = 0; w < windows; ++w) candidates.push_back({set, fi, ch, w});
      }
    }
  }
  out.train_available = candidates.size();
  std::size_t take = spec.train_frames;
  if (take > candidates.size()) {
    out.warnings.push_back("requested " + std::to_string(take) + " training frames but only " +
                           std::to_string(candidates.size()) + " are available; using all");
    take = candidates.size();
  }
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(take);
  std::sort(candidates.begin(), candidates.end());

  // Pass 2: parse files that contribute training windows or test channels.
  std::map<ChannelId, std::vector<Frame>> test_frames;
  std::vector<ChannelId> train_channel;
  auto next = candidates.begin();
  for (int set : spec.sets) {
    const auto& list = files[set];
    bool set_has_test = false;
    for (const auto& ch : spec.test_channels) set_has_test |= ch.set == set;
    for (std::size_t fi = 0; fi < list.size(); ++fi) {
      const bool wanted = next != candidates.end() && next->set == set && next->file == fi;
      if (!wanted && !set_has_test) continue;
      const auto rec = parse_ims_file(read_file_bytes(list[fi].path), list[fi].path.filename().string());
      for (const auto& ch : spec.test_channels) {
        if (ch.set != set) continue;
        if (ch.channel < 1 || static_cast<std::size_t>(ch.channel) > rec.channel_count) {
          throw IngestError(list[fi].path.string() + " has " + std::to_string(rec.channel_count) +
                            " channels; test channel " + ch.label() + " is missing");
        }
        auto w = windowize(rec.channel(ch.channel - 1), rec.timestamp, ch.label(), spec.frame_len, spec.frame_len);
        for (auto& f : w.frames) test_frames[ch].push_back(std::move(f));
        for (auto& msg : w.warnings) out.warnings.push_back(list[fi].path.string() + ": " + msg);
      }
      int cached_channel = -1;
      std::vector<double> series;
      for (; next != candidates.end() && next->set == set && next->file == fi; ++next) {
        if (next->channel != cached_channel) {
          series = rec.channel(static_cast<std::size_t>(next->channel - 1));
          cached_channel = next->channel;
        }
        const std::size_t start = static_cast<std::size_t>(next->window) * spec.frame_len;
        Frame f;
        f.timestamp = rec.timestamp;
        f.source = ChannelId{set, next->channel}.label();
        f.window = next->window;
        f.axes = 1;
        f.samples.assign(series.begin() + static_cast<std::ptrdiff_t>(start),
                         series.begin() + static_cast<std::ptrdiff_t>(start + spec.frame_len));
        out.train.push_back(std::move(f));
        train_channel.push_back({set, next->channel});
      }
    }
  }
  for (const auto& ch : spec.test_channels) out.test[ch.label()] = std::move(test_frames[ch]);

  std::vector<std::size_t> order(out.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& fa = out.train[a];
    const auto& fb = out.train[b];
    return std::tie(train_channel[a], fa.timestamp, fa.window) < std::tie(train_channel[b], fb.timestamp, fb.window);
  });
  std::vector<Frame> sorted;
  sorted.reserve(order.size());
  for (std::size_t i : order) sorted.push_back(std::move(out.train[i]));
  out.train = std::move(sorted);
  return out;
}

namespace {

int axis_index(std::string_view token) {
  if (token.size() == 1) {
    switch (std::tolower(static_cast<unsigned char>(token[0]))) {
      case 'x': case '0': return 0;
      case 'y': case '1': return 1;
      case 'z': case '2': return 2;
      default: break;
    }
  }
  return -1;
}

}  // namespace

std::vector<Frame> parse_mill_frames(std::string_view csv_text, const std::string& source) {
  struct Partial {
    std::array<std::vector<float>, 3> axes;
    std::array<std::vector<bool>, 3> seen;
    std::array<std::size_t, 3> count{};
  };
  std::map<std::uint64_t, Partial> partial;
  for_each_line(csv_text, [&](std::string_view line, std::size_t line_no) {
    line = trim(line);
    if (line.empty()) return;
    std::array<std::string_view, 4> fields;
    std::size_t n = 0;
    while (true) {
      const auto comma = line.find(',');
      if (n == fields.size()) throw ParseError("row " + std::to_string(line_no) + ": more than 4 fields");
      fields[n++] = trim(line.substr(0, comma));
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (line_no == 1 && fields[0] == "timestamp") return;
    if (n != 4) throw ParseError("row " + std::to_string(line_no) + ": expected timestamp,axis,index,value");
    std::uint64_t ts = 0;
    std::size_t index = 0;
    double value = 0.0;
    auto int_ok = [](std::string_view s, auto& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && p == s.data() + s.size();
    };
    if (!int_ok(fields[0], ts)) throw ParseError("row " + std::to_string(line_no) + ": bad timestamp");
    const int axis = axis_index(fields[1]);
    if (axis < 0) throw ParseError("row " + std::to_string(line_no) + ": axis must be x, y or z");
    if (!int_ok(fields[2], index)) throw ParseError("row " + std::to_string(line_no) + ": bad index");
    if (!parse_double(fields[3], value) || !std::isfinite(value)) {
      throw ParseError("row " + std::to_string(line_no) + ": bad value");
    }
    if (index >= kFrameLength) {
      throw FrameAssemblyError("timestamp " + std::to_string(ts) + ": index " + std::to_string(index) +
                               " outside the " + std::to_string(kFrameLength) + "-point frame");
    }
    auto& p = partial[ts];
    auto& axis_vals = p.axes[static_cast<std::size_t>(axis)];
    auto& axis_seen = p.seen[static_cast<std::size_t>(axis)];
    if (axis_vals.empty()) {
      axis_vals.assign(kFrameLength, 0.0f);
      axis_seen.assign(kFrameLength, false);
    }
    if (axis_seen[index]) {
      throw FrameAssemblyError("timestamp " + std::to_string(ts) + ": duplicate point " + std::to_string(index) +
                               " on axis " + std::string(fields[1]));
    }
    axis_seen[index] = true;
    axis_vals[index] = static_cast<float>(value);
    ++p.count[static_cast<std::size_t>(axis)];
  });

  static constexpr const char* kAxisNames[3] = {"x", "y", "z"};
  std::vector<Frame> frames;
  std::uint32_t window = 0;
  for (auto& [ts, p] : partial) {
    Frame f;
    f.timestamp = ts;
    f.source = source;
    f.window = window++;
    f.axes = 3;
    for (std::size_t a = 0; a < 3; ++a) {
      if (p.count[a] == 0) {
        throw FrameAssemblyError("timestamp " + std::to_string(ts) + ": axis " + kAxisNames[a] + " missing");
      }
      if (p.count[a] != kFrameLength) {
        throw FrameAssemblyError("timestamp " + std::to_string(ts) + ": axis " + kAxisNames[a] + " has " +
                                 std::to_string(p.count[a]) + " of " + std::to_string(kFrameLength) + " points");
      }
      f.samples.insert(f.samples.end(), p.axes[a].begin(), p.axes[a].end());
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

std::string mill_frames_to_csv(std::span<const Frame> frames) {
  static constexpr const char* kAxisNames[3] = {"x", "y", "z"};
  std::string out = "timestamp,axis,index,value\n";
  char buf[64];
  for (const auto& f : frames) {
    if (f.axes != 3 || f.length() != kFrameLength) {
      throw DimensionError("mill CSV holds 3x" + std::to_string(kFrameLength) + " frames");
    }
    const std::string prefix = std::to_string(f.timestamp) + ",";
    for (std::size_t a = 0; a < 3; ++a) {
      const auto axis = f.axis(a);
      for (std::size_t i = 0; i < axis.size(); ++i) {
        // Shortest representation that round-trips the float exactly.
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, axis[i]);
        out += prefix;
        out += kAxisNames[a];
        out += ',';
        out += std::to_string(i);
        out += ',';
        out.append(buf, p);
        out += '\n';
      }
    }
  }
  return out;
}

std::vector<Frame> load_frames(const std::filesystem::path& path, const std::string& source) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "FRME", 4) == 0) return decode_frame_file(bytes, source);
  return parse_mill_frames(bytes, source);
}

}  // namespace dcan
