#include "dcan/signal.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dcan/error.hpp"

namespace dcan::signal {

bool is_power_of_two(std::size_t n) noexcept { return std::has_single_bit(n); }

void fft_inplace(std::vector<std::complex<double>>& data) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) {
    throw LengthError("FFT length " + std::to_string(n) + " is not a power of two");
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    // Twiddles computed directly from the angle rather than by repeated
    // multiplication keep the error at machine precision for N = 4096.
    std::vector<std::complex<double>> twiddle(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      twiddle[k] = {std::cos(angle), std::sin(angle)};
    }
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> u = data[start + k];
        const std::complex<double> v = data[start + k + half] * twiddle[k];
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

std::vector<std::complex<double>> fft(std::span<const double> samples) {
  std::vector<std::complex<double>> data(samples.begin(), samples.end());
  fft_inplace(data);
  return data;
}

Spectrum fft_magnitude(std::span<const double> samples, double sample_rate) {
  const auto transform = fft(samples);
  const std::size_t n = samples.size();
  Spectrum s;
  s.bin_freqs.resize(n / 2 + 1);
  s.magnitudes.resize(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    s.bin_freqs[k] = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    s.magnitudes[k] = std::abs(transform[k]);
  }
  return s;
}

Spectrum fft_magnitude(const Waveform& waveform) { return fft_magnitude(waveform.samples, waveform.sample_rate); }

double dominant_frequency(const Spectrum& spectrum) {
  if (spectrum.magnitudes.size() < 2) return spectrum.bin_freqs.empty() ? 0.0 : spectrum.bin_freqs.front();
  std::size_t best = 1;
  for (std::size_t k = 2; k < spectrum.magnitudes.size(); ++k) {
    if (spectrum.magnitudes[k] > spectrum.magnitudes[best]) best = k;
  }
  return spectrum.bin_freqs[best];
}

std::vector<Tone> NormalSignalSpec::tones() const {
  std::vector<Tone> all{main, secondary};
  all.insert(all.end(), harmonics.begin(), harmonics.end());
  return all;
}

void NormalSignalSpec::validate() const {
  if (!(sample_rate > 0.0)) throw SpecError("sample rate must be positive");
  if (length == 0) throw SpecError("waveform length must be positive");
  if (!(noise_std >= 0.0)) throw SpecError("noise standard deviation must be non-negative");
  const double nyquist = sample_rate / 2.0;
  for (const Tone& t : tones()) {
    if (!(t.amplitude >= 0.0)) throw SpecError("tone amplitude must be non-negative");
    if (!(t.freq_hz >= 0.0) || t.freq_hz >= nyquist) {
      throw SpecError("tone frequency " + std::to_string(t.freq_hz) + " Hz is outside [0, Nyquist " +
                      std::to_string(nyquist) + " Hz)");
    }
  }
}

namespace {

Waveform render(const NormalSignalSpec& spec, std::mt19937_64& rng, double start_time) {
  spec.validate();
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);

  Waveform w{std::vector<double>(spec.length, 0.0), spec.sample_rate};
  for (const Tone& t : spec.tones()) {
    double phase = 0.0;
    if (spec.phases == PhaseModel::independent) {
      phase = phase_dist(rng);
    } else if (spec.phases == PhaseModel::start_time) {
      // Reduce f * t0 to a cycle fraction first to keep the phase accurate.
      double cycles = 0.0;
      phase = 2.0 * std::numbers::pi * std::modf(t.freq_hz * start_time, &cycles);
    }
    if (t.amplitude == 0.0) continue;
    const double omega = 2.0 * std::numbers::pi * t.freq_hz / spec.sample_rate;
    for (std::size_t n = 0; n < spec.length; ++n) {
      w.samples[n] += t.amplitude * std::sin(omega * static_cast<double>(n) + phase);
    }
  }
  if (spec.noise_std > 0.0) {
    for (double& v : w.samples) v += spec.noise_std * noise(rng);
  }
  return w;
}

double draw_start_time(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, kStartTimeSpan)(rng);
}

}  // namespace

Waveform synth_normal(const NormalSignalSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double t0 = draw_start_time(rng);
  return render(spec, rng, t0);
}

Waveform synth_normal(const NormalSignalSpec& spec, std::uint64_t seed, double start_time) {
  std::mt19937_64 rng(seed);
  return render(spec, rng, start_time);
}

namespace {

// Highest frequency carrying at least 1% of the peak non-DC magnitude.
double highest_significant_frequency(const Waveform& w) {
  std::vector<double> padded = w.samples;
  padded.resize(std::bit_ceil(std::max<std::size_t>(padded.size(), 2)), 0.0);
  const Spectrum s = fft_magnitude(padded, w.sample_rate);
  double peak = 0.0;
  for (std::size_t k = 1; k < s.magnitudes.size(); ++k) peak = std::max(peak, s.magnitudes[k]);
  if (peak == 0.0) return 0.0;
  for (std::size_t k = s.magnitudes.size(); k-- > 1;) {
    if (s.magnitudes[k] >= 0.01 * peak) return s.bin_freqs[k];
  }
  return 0.0;
}

}  // namespace

ScaledWaveform time_scale(const Waveform& waveform, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw SpecError("time-scale factor must be positive");
  const auto& x = waveform.samples;
  const std::size_t len = x.size();
  ScaledWaveform out;
  out.waveform.sample_rate = waveform.sample_rate;
  if (len == 0) return out;

  // Output samples whose source position n / factor stays inside the input.
  const auto span_len = static_cast<std::size_t>(std::floor(static_cast<double>(len - 1) * factor + 1e-9)) + 1;
  const std::size_t produced = std::min(span_len, len);
  std::vector<double> y(len);
  for (std::size_t n = 0; n < produced; ++n) {
    const double pos = static_cast<double>(n) / factor;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= len) {
      y[n] = x[len - 1];
    } else {
      const double frac = pos - static_cast<double>(i);
      y[n] = frac == 0.0 ? x[i] : x[i] * (1.0 - frac) + x[i + 1] * frac;
    }
  }
  for (std::size_t n = produced; n < len; ++n) y[n] = y[n % produced];
  out.waveform.samples = std::move(y);

  const double top = highest_significant_frequency(waveform) / factor;
  const double nyquist = waveform.sample_rate / 2.0;
  if (top >= nyquist) {
    out.aliasing_warning = true;
    out.warning = "time scale " + std::to_string(factor) + " moves a component to " + std::to_string(top) +
                  " Hz, at or above Nyquist (" + std::to_string(nyquist) + " Hz); it will alias";
  }
  return out;
}

Waveform inject_sawtooth(const Waveform& waveform, double freq_hz, double peak) {
  const double nyquist = waveform.sample_rate / 2.0;
  if (!(freq_hz > 0.0 && freq_hz < nyquist)) throw SpecError("sawtooth frequency must lie in (0, Nyquist)");
  if (!(peak >= 0.0)) throw SpecError("sawtooth peak must be non-negative");
  Waveform out = waveform;
  const double cycles_per_sample = freq_hz / waveform.sample_rate;
  for (std::size_t n = 0; n < out.samples.size(); ++n) {
    const double t = (static_cast<double>(n) + 0.5) * cycles_per_sample;
    out.samples[n] += peak * (2.0 * (t - std::floor(t)) - 1.0);
  }
  return out;
}

std::string waveform_to_csv(const Waveform& waveform) {
  std::ostringstream out;
  out.precision(17);
  out << "index,value\n";
  for (std::size_t i = 0; i < waveform.samples.size(); ++i) out << i << ',' << waveform.samples[i] << '\n';
  return out.str();
}

Waveform waveform_from_csv(std::string_view text, double sample_rate) {
  Waveform w;
  w.sample_rate = sample_rate;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || (line_no == 1 && line.starts_with("index"))) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string_view::npos) throw ParseError("waveform CSV line " + std::to_string(line_no) + ": missing comma");
    std::size_t index = 0;
    double value = 0.0;
    const auto idx_part = line.substr(0, comma);
    const auto val_part = line.substr(comma + 1);
    const auto r1 = std::from_chars(idx_part.data(), idx_part.data() + idx_part.size(), index);
    const auto r2 = std::from_chars(val_part.data(), val_part.data() + val_part.size(), value);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || r2.ptr != val_part.data() + val_part.size()) {
      throw ParseError("waveform CSV line " + std::to_string(line_no) + ": malformed number");
    }
    if (index != w.samples.size()) {
      throw ParseError("waveform CSV line " + std::to_string(line_no) + ": expected index " +
                       std::to_string(w.samples.size()) + ", got " + std::to_string(index));
    }
    w.samples.push_back(value);
  }
  if (w.samples.empty()) throw ParseError("waveform CSV holds no samples");
  return w;
}

Frame synth_frame(const NormalSignalSpec& spec, std::size_t axes, std::uint64_t seed,
                  const Perturbation& perturbation, std::uint64_t timestamp) {
  Frame f;
  f.timestamp = timestamp;
  f.axes = axes;
  f.samples.reserve(axes * spec.length);
  std::mt19937_64 axis_seeds(seed);
  const double t0 = draw_start_time(axis_seeds);
  for (std::size_t a = 0; a < axes; ++a) {
    Waveform w = synth_normal(spec, axis_seeds(), t0);
    if (perturbation.time_scale) w = time_scale(w, *perturbation.time_scale).waveform;
    if (perturbation.sawtooth) w = inject_sawtooth(w, perturbation.sawtooth->freq_hz, perturbation.sawtooth->amplitude);
    for (double v : w.samples) f.samples.push_back(static_cast<float>(v));
  }
  return f;
}

std::vector<Frame> synth_frames(const NormalSignalSpec& spec, std::size_t axes, std::size_t count,
                                std::uint64_t seed, const Perturbation& perturbation, std::uint64_t start,
                                std::uint64_t cadence) {
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    // splitmix64 finalizer keeps per-frame streams unrelated across nearby seeds.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (i + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    Frame f = synth_frame(spec, axes, z, perturbation, start + i * cadence);
    f.window = static_cast<std::uint32_t>(i);
    frames.push_back(std::move(f));
  }
  return frames;
}

Waveform frame_axis(const Frame& frame, std::size_t axis, double sample_rate) {
  if (axis >= frame.axes) throw DimensionError("frame has no axis " + std::to_string(axis));
  const auto row = frame.axis(axis);
  return Waveform{std::vector<double>(row.begin(), row.end()), sample_rate};
}

}  // namespace dcan::signal
