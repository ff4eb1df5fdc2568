#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "dcan/error.hpp"
#include "dcan/signal.hpp"
#include "support/oracles.hpp"

using namespace dcan;
using namespace dcan::signal;

namespace {

Waveform sine(double freq, double amp = 1.0, std::size_t n = 4096, double fs = 1024.0, double phase = 0.0) {
  Waveform w;
  w.sample_rate = fs;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / fs + phase);
  }
  return w;
}

std::vector<double> random_samples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

NormalSignalSpec main_only(double amp = 0.05) {
  NormalSignalSpec s;
  s.main = {136.0, amp};
  s.secondary = {60.0, 0.0};
  s.harmonics.clear();
  s.noise_std = 0.0;
  return s;
}

}  // namespace

TEST(Fft, ImpulseIsFlat) {
  std::vector<double> x(64, 0.0);
  x[0] = 1.0;
  const auto s = fft_magnitude(x, 64.0);
  ASSERT_EQ(s.magnitudes.size(), 33u);
  for (double m : s.magnitudes) EXPECT_NEAR(m, 1.0, 1e-12);
}

TEST(Fft, BinFrequencies) {
  const auto s = fft_magnitude(std::vector<double>(4096, 0.0), 1024.0);
  ASSERT_EQ(s.bin_freqs.size(), 2049u);
  EXPECT_EQ(s.bin_freqs[1], 0.25);
  EXPECT_EQ(s.bin_freqs[544], 136.0);
  EXPECT_EQ(s.bin_freqs[2048], 512.0);
}

TEST(Fft, SineAt136PeaksAtBin544) {
  const auto s = fft_magnitude(sine(136.0));
  std::size_t best = 1;
  for (std::size_t k = 1; k < s.magnitudes.size(); ++k) {
    if (s.magnitudes[k] > s.magnitudes[best]) best = k;
  }
  EXPECT_EQ(best, 544u);
  EXPECT_NEAR(s.magnitudes[544], 2048.0, 1e-6);
  EXPECT_EQ(dominant_frequency(s), 136.0);
}

TEST(Fft, MatchesDirectDft) {
  for (std::size_t n : {1, 2, 4, 8, 16, 64, 256, 1024, 4096}) {
    for (std::uint64_t seed = 0; seed < (n <= 1024 ? 20u : 3u); ++seed) {
      const auto x = random_samples(n, seed * 131 + n);
      const auto got = fft(x);
      const auto want = dcan::testing::direct_dft(x);
      double scale = 0.0;
      for (const auto& v : want) scale = std::max(scale, std::abs(v));
      for (std::size_t k = 0; k < n; ++k) {
        ASSERT_LE(std::abs(got[k] - want[k]) / scale, 1e-6) << "n=" << n << " k=" << k;
      }
      const auto mag = fft_magnitude(x, 1.0);
      for (std::size_t k = 0; k <= n / 2; ++k) {
        ASSERT_LE(std::abs(mag.magnitudes[k] - std::abs(want[k])) / scale, 1e-6);
      }
    }
  }
}

TEST(Fft, Parseval) {
  for (std::size_t n : {8, 256, 4096}) {
    const auto x = random_samples(n, n);
    double time_energy = 0.0;
    for (double v : x) time_energy += v * v;
    double freq_energy = 0.0;
    for (const auto& c : fft(x)) freq_energy += std::norm(c);
    EXPECT_NEAR(freq_energy / static_cast<double>(n), time_energy, 1e-6 * time_energy);
  }
}

TEST(Fft, RejectsNonPowerOfTwo) {
  EXPECT_THROW(fft(std::vector<double>(100, 0.0)), LengthError);
  EXPECT_THROW(fft(std::vector<double>{}), LengthError);
  EXPECT_THROW(fft_magnitude(std::vector<double>(4095, 0.0), 1024.0), LengthError);
  EXPECT_TRUE(is_power_of_two(4096));
  EXPECT_FALSE(is_power_of_two(0));
  EXPECT_FALSE(is_power_of_two(12));
}

TEST(Dominant, DcOnlyReturnsLowestNonDcBin) {
  const auto s = fft_magnitude(std::vector<double>(64, 3.0), 64.0);
  EXPECT_EQ(dominant_frequency(s), 1.0);
}

TEST(Dominant, TiesGoLow) {
  Waveform w = sine(100.0);
  const Waveform w2 = sine(200.0);
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] += w2.samples[i];
  EXPECT_EQ(dominant_frequency(fft_magnitude(w)), 100.0);
}

TEST(Synth, ZeroSpecIsSilent) {
  NormalSignalSpec s = main_only(0.0);
  const auto w = synth_normal(s, 1);
  ASSERT_EQ(w.samples.size(), 4096u);
  for (double v : w.samples) EXPECT_EQ(v, 0.0);
}

TEST(Synth, MainOnlyDominant) {
  EXPECT_EQ(dominant_frequency(fft_magnitude(synth_normal(main_only(), 3))), 136.0);
}

TEST(Synth, DefaultSpectrumShape) {
  const NormalSignalSpec spec;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = fft_magnitude(synth_normal(spec, seed));
    EXPECT_EQ(dominant_frequency(s), 136.0);
    const double noise_floor = s.magnitudes[1000];  // 250 Hz, no tone there
    EXPECT_GT(s.magnitudes[240], 10.0 * noise_floor);  // 60 Hz
    EXPECT_GT(s.magnitudes[544], s.magnitudes[240]);
    EXPECT_GT(s.magnitudes[240], s.magnitudes[1088]);  // 272 Hz
  }
}

TEST(Synth, ReproduciblePerSeed) {
  const NormalSignalSpec spec;
  EXPECT_EQ(synth_normal(spec, 42).samples, synth_normal(spec, 42).samples);
  EXPECT_NE(synth_normal(spec, 42).samples, synth_normal(spec, 43).samples);
}

TEST(Synth, DefaultPhasesAreZero) {
  const NormalSignalSpec spec = main_only();
  const auto a = synth_normal(spec, 1);
  const auto b = synth_normal(spec, 2);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_NEAR(a.samples[i], b.samples[i], 1e-15);
  EXPECT_NEAR(a.samples[0], 0.0, 1e-15);
}

TEST(Synth, StartTimeModelEvaluatesAbsoluteTime) {
  NormalSignalSpec spec = main_only();
  spec.phases = PhaseModel::start_time;
  spec.harmonics = {{272.0, 0.01}};
  const double t0 = 1234.5678;
  const auto w = synth_normal(spec, 8, t0);
  for (std::size_t n = 0; n < 64; ++n) {
    const double t = t0 + static_cast<double>(n) / 1024.0;
    const double want = 0.05 * std::sin(2.0 * std::numbers::pi * 136.0 * t) +
                        0.01 * std::sin(2.0 * std::numbers::pi * 272.0 * t);
    EXPECT_NEAR(w.samples[n], want, 1e-9);
  }
}

TEST(Synth, FrameAxesShareStartTime) {
  NormalSignalSpec spec;
  spec.noise_std = 0.0;
  spec.phases = PhaseModel::start_time;
  const auto f = synth_frame(spec, 3, 21);
  for (std::size_t i = 0; i < 4096; ++i) {
    EXPECT_EQ(f.axis(0)[i], f.axis(1)[i]);
    EXPECT_EQ(f.axis(0)[i], f.axis(2)[i]);
  }
  spec.phases = PhaseModel::independent;
  const auto g = synth_frame(spec, 3, 21);
  EXPECT_NE(g.axis(0)[100], g.axis(1)[100]);
}

TEST(Synth, SpecValidation) {
  NormalSignalSpec s;
  s.main.freq_hz = 512.0;
  EXPECT_THROW(synth_normal(s, 0), SpecError);
  s = {};
  s.secondary.amplitude = -1.0;
  EXPECT_THROW(synth_normal(s, 0), SpecError);
  s = {};
  s.noise_std = -0.1;
  EXPECT_THROW(s.validate(), SpecError);
}

TEST(TimeScale, CompressionDoublesFrequency) {
  const auto r = time_scale(sine(136.0), 0.5);
  EXPECT_EQ(r.waveform.samples.size(), 4096u);
  EXPECT_EQ(dominant_frequency(fft_magnitude(r.waveform)), 272.0);
  EXPECT_FALSE(r.aliasing_warning);
}

TEST(TimeScale, StretchHalvesFrequency) {
  const auto r = time_scale(sine(136.0), 2.0);
  EXPECT_EQ(r.waveform.samples.size(), 4096u);
  EXPECT_EQ(dominant_frequency(fft_magnitude(r.waveform)), 68.0);
}

TEST(TimeScale, DefaultSpecFrequencies) {
  const NormalSignalSpec spec;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto w = synth_normal(spec, seed);
    EXPECT_EQ(dominant_frequency(fft_magnitude(time_scale(w, 0.5).waveform)), 272.0);
    EXPECT_EQ(dominant_frequency(fft_magnitude(time_scale(w, 2.0).waveform)), 68.0);
  }
}

TEST(TimeScale, IdentityFactor) {
  const auto w = synth_normal(NormalSignalSpec{}, 9);
  const auto r = time_scale(w, 1.0);
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(r.waveform.samples[i], w.samples[i], 1e-6);
}

TEST(TimeScale, RoundTripRecoversDominant) {
  for (double f : {0.5, 2.0, 0.8, 1.25}) {
    const auto back = time_scale(time_scale(sine(136.0), f).waveform, 1.0 / f).waveform;
    EXPECT_EQ(dominant_frequency(fft_magnitude(back)), 136.0) << f;
  }
}

TEST(TimeScale, AliasingWarning) {
  const auto r = time_scale(sine(300.0), 0.5);
  EXPECT_TRUE(r.aliasing_warning);
  EXPECT_FALSE(r.warning.empty());
  // The default spec's 408 Hz harmonic lands at 816 Hz.
  EXPECT_TRUE(time_scale(synth_normal(NormalSignalSpec{}, 1), 0.5).aliasing_warning);
  EXPECT_FALSE(time_scale(synth_normal(NormalSignalSpec{}, 1), 2.0).aliasing_warning);
}

TEST(TimeScale, RejectsNonPositiveFactor) {
  EXPECT_THROW(time_scale(sine(10.0), 0.0), SpecError);
  EXPECT_THROW(time_scale(sine(10.0), -1.0), SpecError);
}

TEST(Sawtooth, PeakZeroIsIdentity) {
  const auto w = synth_normal(NormalSignalSpec{}, 4);
  EXPECT_EQ(inject_sawtooth(w, 136.0, 0.0).samples, w.samples);
}

TEST(Sawtooth, ZeroMeanOverExactPeriod) {
  // 128 Hz at 1024 Hz: period of exactly 8 samples.
  const Waveform silent{std::vector<double>(4096, 0.0), 1024.0};
  const auto s = inject_sawtooth(silent, 128.0, 0.04);
  double sum = 0.0;
  for (std::size_t i = 0; i < 8; ++i) sum += s.samples[i];
  EXPECT_NEAR(sum / 8.0, 0.0, 1e-9);
  double lo = 0.0, hi = 0.0;
  for (double v : s.samples) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -0.04 - 1e-12);
  EXPECT_LE(hi, 0.04 + 1e-12);
  EXPECT_GT(hi, 0.03);
  // Rising ramp within one period.
  for (std::size_t i = 1; i < 8; ++i) EXPECT_GT(s.samples[i], s.samples[i - 1]);
}

TEST(Sawtooth, Additive) {
  const auto w = synth_normal(NormalSignalSpec{}, 5);
  const auto twice = inject_sawtooth(inject_sawtooth(w, 136.0, 0.02), 136.0, 0.02);
  const auto once = inject_sawtooth(w, 136.0, 0.04);
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(twice.samples[i], once.samples[i], 1e-9);
}

TEST(Sawtooth, AddsHarmonicsAtMainFrequency) {
  NormalSignalSpec spec = main_only();
  const auto w = synth_normal(spec, 6);
  const auto s = inject_sawtooth(w, kSawtoothFreqHz, kSawtoothPeakG);
  const auto before = fft_magnitude(w);
  const auto after = fft_magnitude(s);
  // Harmonic 2 of 136 Hz (272 Hz, bin 1088) appears; bin 544 changes.
  EXPECT_GT(after.magnitudes[1088], 100.0 * (before.magnitudes[1088] + 1e-9));
  EXPECT_GT(std::abs(after.magnitudes[544] - before.magnitudes[544]), 1.0);
  EXPECT_EQ(kSawtoothPeakG, 0.04);
  EXPECT_EQ(kSawtoothFreqHz, 136.0);
}

TEST(Csv, RoundTrip) {
  const auto w = synth_normal(NormalSignalSpec{}, 7);
  const auto text = waveform_to_csv(w);
  EXPECT_EQ(text.substr(0, 12), "index,value\n");
  const auto back = waveform_from_csv(text);
  EXPECT_EQ(back.samples, w.samples);
}

TEST(Csv, RejectsGarbage) {
  EXPECT_THROW(waveform_from_csv("index,value\n0,abc\n"), ParseError);
  EXPECT_THROW(waveform_from_csv("index,value\n1,0.5\n"), ParseError);
}

TEST(SynthFrame, AxesIndependentAndPerturbed) {
  const NormalSignalSpec spec;
  const auto f = synth_frame(spec, 3, 11);
  ASSERT_EQ(f.axes, 3u);
  ASSERT_EQ(f.samples.size(), 3u * 4096u);
  EXPECT_NE(std::vector<float>(f.axis(0).begin(), f.axis(0).end()),
            std::vector<float>(f.axis(1).begin(), f.axis(1).end()));
  Perturbation p;
  p.time_scale = 0.5;
  const auto g = synth_frame(spec, 3, 11, p);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_EQ(dominant_frequency(fft_magnitude(frame_axis(g, a))), 272.0);
  }
}

TEST(SynthFrame, BatchIsDeterministic) {
  const auto a = synth_frames(NormalSignalSpec{}, 3, 4, 99);
  const auto b = synth_frames(NormalSignalSpec{}, 3, 4, 99);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0].samples, a[1].samples);
  EXPECT_EQ(a[2].timestamp, 1200u);
}
