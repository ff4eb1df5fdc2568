#pragma once

// Spectral analysis and synthetic vibration generators.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcan/frame.hpp"

namespace dcan::signal {

struct Waveform {
  std::vector<double> samples;  // acceleration, g
  double sample_rate = kSampleRateHz;
};

struct Spectrum {
  std::vector<double> bin_freqs;   // k * sample_rate / N, k = 0..N/2
  std::vector<double> magnitudes;  // |X_k| of the unnormalized transform
};

bool is_power_of_two(std::size_t n) noexcept;

// In-place iterative radix-2 transform, X_k = sum_n x_n exp(-2 pi i k n / N).
// Throws LengthError unless the length is a power of two.
void fft_inplace(std::vector<std::complex<double>>& data);
std::vector<std::complex<double>> fft(std::span<const double> samples);

Spectrum fft_magnitude(std::span<const double> samples, double sample_rate);
Spectrum fft_magnitude(const Waveform& waveform);

// Frequency of the largest non-DC bin; ties go to the lower frequency. A
// spectrum with only a DC bin returns 0.
double dominant_frequency(const Spectrum& spectrum);

struct Tone {
  double freq_hz = 0.0;
  double amplitude = 0.0;  // g
};

// How tone phases are chosen for each synthesized waveform.
enum class PhaseModel {
  // All tones start at phase zero; only the noise varies with the seed.
  zero,
  // Each frame starts at a random instant t0: tone k has phase 2*pi*f_k*t0, so
  // harmonics stay locked to the fundamental and the axes of one frame share
  // the time origin.
  start_time,
  // Every tone of every axis gets its own uniform random phase.
  independent,
};

struct NormalSignalSpec {
  Tone main{136.0, 0.05};
  Tone secondary{60.0, 0.02};
  std::vector<Tone> harmonics{{272.0, 0.01}, {408.0, 0.005}};
  double noise_std = 0.005;
  PhaseModel phases = PhaseModel::zero;
  double sample_rate = kSampleRateHz;
  std::size_t length = kFrameLength;

  std::vector<Tone> tones() const;
  // Throws SpecError for negative amplitudes/noise or tones at or above Nyquist.
  void validate() const;
};

// Upper bound of the uniformly drawn start instant (s).
inline constexpr double kStartTimeSpan = 3600.0;

// Sum of the tones in `spec` plus seeded Gaussian noise; phases follow
// spec.phases with every random draw taken from `seed`.
Waveform synth_normal(const NormalSignalSpec& spec, std::uint64_t seed);
// Same with an explicit start instant for the start_time model (ignored by
// the other models); `seed` then only drives noise and independent phases.
Waveform synth_normal(const NormalSignalSpec& spec, std::uint64_t seed, double start_time);

struct ScaledWaveform {
  Waveform waveform;
  bool aliasing_warning = false;
  std::string warning;
};

// y(t) = x(t / factor) by linear interpolation, so every frequency is
// multiplied by 1 / factor. The output keeps the input length: a compressed
// signal is tiled, a stretched one truncated. Components pushed to or past
// Nyquist are reported through `aliasing_warning`.
ScaledWaveform time_scale(const Waveform& waveform, double factor);

// Sawtooth used for interference-style anomalies: 136 Hz, 0.04 g peak.
inline constexpr double kSawtoothFreqHz = 136.0;
inline constexpr double kSawtoothPeakG = 0.04;

// Adds a zero-mean sawtooth rising linearly from -peak to +peak once per
// period of sample_rate / freq samples (sampled at interval midpoints).
Waveform inject_sawtooth(const Waveform& waveform, double freq_hz, double peak);

// "index,value" with a header line.
std::string waveform_to_csv(const Waveform& waveform);
Waveform waveform_from_csv(std::string_view text, double sample_rate = kSampleRateHz);

struct Perturbation {
  std::optional<double> time_scale;
  std::optional<Tone> sawtooth;
};

// Multi-axis frame, optionally time-scaled and then overlaid with a
// sawtooth. Axes share one start instant; noise is independent per axis.
Frame synth_frame(const NormalSignalSpec& spec, std::size_t axes, std::uint64_t seed,
                  const Perturbation& perturbation = {}, std::uint64_t timestamp = 0);

// `count` frames; frame i uses a seed derived from (seed, i) and timestamp
// start + i * cadence (seconds).
std::vector<Frame> synth_frames(const NormalSignalSpec& spec, std::size_t axes, std::size_t count,
                                std::uint64_t seed, const Perturbation& perturbation = {},
                                std::uint64_t start = 0, std::uint64_t cadence = 600);

Waveform frame_axis(const Frame& frame, std::size_t axis, double sample_rate = kSampleRateHz);

}  // namespace dcan::signal
