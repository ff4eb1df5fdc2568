// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. A9 needs the NASA IMS bearing data under $DCAN_NASA_ROOT
// and reports SKIP otherwise.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dcan/checkpoint.hpp"
#include "dcan/fleet.hpp"
#include "dcan/ingest.hpp"
#include "dcan/model.hpp"
#include "dcan/nn.hpp"
#include "dcan/scoring.hpp"
#include "dcan/signal.hpp"
#include "dcan/training.hpp"
#include "support/oracles.hpp"

using namespace dcan;
using dcan::testing::finite_difference_check;
using dcan::testing::random_tensor;

namespace {

struct Outcome {
  enum { pass, fail, skip } status = fail;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

// Nearest-rank percentile.
double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

std::vector<double> total_mse(const Checkpoint& c, const std::vector<Frame>& frames) {
  std::vector<double> out;
  for (const auto& r : reconstruction_reports(c, frames)) out.push_back(r.total_mse);
  return out;
}

Outcome a1_shape_chain() {
  const auto model = build<float>(DcanConfig::standard(3), 1);
  const float slope = static_cast<float>(model.config.leaky_slope);
  auto h = random_tensor<float>({1, 1, 3, 4096}, 2);
  for (const auto& layer : model.conv) h = nn::leaky_relu(nn::conv2d_forward(h, layer), slope);
  const bool encoder_ok = h.shape() == Shape{1, 16, 1, 57};
  const auto features = encode(model, random_tensor<float>({1, 1, 3, 4096}, 2));
  const bool features_ok = features.shape() == Shape{1, 912};
  const auto out = decode(model, features);
  const bool decoder_ok = out.shape() == Shape{1, 1, 3, 4096};
  return check(encoder_ok && features_ok && decoder_ok,
               std::string("encoder 16x1x57 ") + (encoder_ok ? "ok" : "wrong") + ", features 912 " +
                   (features_ok ? "ok" : "wrong") + ", decoder 1x3x4096 " + (decoder_ok ? "ok" : "wrong"));
}

Outcome a2_gradients() {
  double worst = 0.0;
  auto note = [&](double e) { worst = std::max(worst, e); };

  {
    auto layer = nn::Conv2dLayer<double>::make(2, 3, {2, 5}, {1, 2});
    nn::init_params(layer, 1);
    layer.bias = random_tensor<double>(layer.bias.shape(), 2, -0.5, 0.5);
    auto x = random_tensor<double>({2, 2, 4, 13}, 3);
    const auto up = random_tensor<double>(nn::conv2d_forward(x, layer).shape(), 4);
    const auto g = nn::conv2d_backward(x, layer, up);
    auto loss = [&] { return dcan::testing::inner(nn::conv2d_forward(x, layer), up); };
    note(finite_difference_check(x, g.input, loss).max_rel_error);
    note(finite_difference_check(layer.weights, g.weights, loss).max_rel_error);
    note(finite_difference_check(layer.bias, g.bias, loss).max_rel_error);
  }
  {
    auto layer = nn::ConvTranspose2dLayer<double>::make(3, 2, {2, 5}, {1, 2});
    nn::init_params(layer, 5);
    layer.bias = random_tensor<double>(layer.bias.shape(), 6, -0.5, 0.5);
    auto x = random_tensor<double>({2, 3, 3, 5}, 7);
    const auto up = random_tensor<double>(nn::conv_transpose2d_forward(x, layer).shape(), 8);
    const auto g = nn::conv_transpose2d_backward(x, layer, up);
    auto loss = [&] { return dcan::testing::inner(nn::conv_transpose2d_forward(x, layer), up); };
    note(finite_difference_check(x, g.input, loss).max_rel_error);
    note(finite_difference_check(layer.weights, g.weights, loss).max_rel_error);
    note(finite_difference_check(layer.bias, g.bias, loss).max_rel_error);
  }
  {
    auto layer = nn::DenseLayer<double>::make(7, 5);
    nn::init_params(layer, 9);
    layer.bias = random_tensor<double>(layer.bias.shape(), 10, -0.5, 0.5);
    auto x = random_tensor<double>({3, 7}, 11);
    const auto up = random_tensor<double>({3, 5}, 12);
    const auto g = nn::dense_backward(x, layer, up);
    auto loss = [&] { return dcan::testing::inner(nn::dense_forward(x, layer), up); };
    note(finite_difference_check(x, g.input, loss).max_rel_error);
    note(finite_difference_check(layer.weights, g.weights, loss).max_rel_error);
    note(finite_difference_check(layer.bias, g.bias, loss).max_rel_error);
  }
  {
    auto x = random_tensor<double>({2, 3, 4, 5}, 13);
    const auto up = random_tensor<double>(x.shape(), 14);
    const auto g = nn::leaky_relu_backward(x, up, 0.01);
    auto loss = [&] { return dcan::testing::inner(nn::leaky_relu(x, 0.01), up); };
    note(finite_difference_check(x, g, loss).max_rel_error);
  }
  {
    auto model = build<double>(DcanConfig::tiny(3), 15);
    for (auto& [name, t] : model.named_parameters()) {
      if (name.ends_with(".bias")) *t = random_tensor<double>(t->shape(), 16, -0.1, 0.1);
    }
    const auto x = random_tensor<double>({2, 1, 3, 64}, 17);
    auto grads = DcanModel<double>::zeros(model.config);
    (void)reconstruction_loss_and_grad(model, x, grads);
    auto loss = [&] { return nn::mse(reconstruct(model, x), x); };
    auto params = model.named_parameters();
    auto gparams = grads.named_parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
      note(finite_difference_check(*params[i].second, *gparams[i].second, loss).max_rel_error);
    }
  }
  return check(worst <= 1e-4, fmt("max relative error %.3g (limit 1e-4), layers and end-to-end tiny model", worst));
}

struct TrainedModel {
  Checkpoint checkpoint;
  TrainResult result;
  double seconds = 0.0;
};

TrainedModel train_synthetic() {
  const signal::NormalSignalSpec spec;
  const auto frames = signal::synth_frames(spec, 3, 2000, 1);
  TrainedModel t;
  t.checkpoint.stats = fit_standardization(frames);
  t.checkpoint.model = build<float>(DcanConfig::standard(3), 7);
  const auto start = std::chrono::steady_clock::now();
  t.result = train(t.checkpoint.model, frames, t.checkpoint.stats, TrainConfig{});
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

Outcome a3_convergence(const TrainedModel& t) {
  const auto& e = t.result.history.epochs;
  if (e.empty()) return check(false, "no epochs recorded");
  const double first = e.front().train_mse;
  const double last = e.back().train_mse;
  const double ratio = last / first;
  return check(ratio <= 0.10, fmt("epoch-1 train mse %.4f, final %.4f, ratio %.4f (limit 0.10)", first, last, ratio) +
                                  ", " + std::to_string(e.size()) + " epochs" + fmt(", %.0f s", t.seconds));
}

Outcome a4_separation(const TrainedModel& t) {
  const signal::NormalSignalSpec spec;
  const auto normal = total_mse(t.checkpoint, signal::synth_frames(spec, 3, 200, 1001));
  struct Generator {
    const char* name;
    signal::Perturbation p;
  };
  std::vector<Generator> generators(3);
  generators[0] = {"time-scale 0.5", {}};
  generators[0].p.time_scale = 0.5;
  generators[1] = {"time-scale 2.0", {}};
  generators[1].p.time_scale = 2.0;
  generators[2] = {"sawtooth 136 Hz 0.04 g", {}};
  generators[2].p.sawtooth = signal::Tone{signal::kSawtoothFreqHz, signal::kSawtoothPeakG};

  const double normal_mean = mean(normal);
  const double normal_p99 = percentile(normal, 99);
  bool ok = true;
  std::string detail = fmt("normal mean %.4f p99 %.4f", normal_mean, normal_p99);
  std::uint64_t seed = 2001;
  for (const auto& g : generators) {
    const auto mse = total_mse(t.checkpoint, signal::synth_frames(spec, 3, 200, seed++ * 1000, g.p));
    const double ratio = mean(mse) / normal_mean;
    const double p1 = percentile(mse, 1);
    ok = ok && ratio >= 5.0 && normal_p99 < p1;
    detail += std::string("; ") + g.name + fmt(": mean %.4f ratio %.1f p1 %.4f", mean(mse), ratio, p1);
  }
  return check(ok, detail + " (need ratio >= 5 and p99 < p1)");
}

Outcome a5_hysteresis() {
  auto run = [](const std::vector<bool>& pattern) {
    HysteresisState s;
    std::vector<HysteresisStep> steps;
    for (bool a : pattern) {
      steps.push_back(hysteresis_step(s, a, {}));
      s = steps.back().state;
    }
    return steps;
  };
  bool fresh_ok = true;
  for (std::size_t n = 1; n <= 30; ++n) {
    HysteresisState s;
    for (std::size_t i = 0; i < 29; ++i) s.window.push_back({i < n - 1, false});
    fresh_ok = fresh_ok && hysteresis_step(s, true, {}).alarm_fired == (n > 16);
  }
  fresh_ok = fresh_ok && !run(std::vector<bool>(16, true)).back().alarm_fired &&
             run(std::vector<bool>(17, true)).back().alarm_fired;

  bool sensitized_ok = true;
  for (std::size_t n = 2; n <= 30; ++n) {
    HysteresisState s;
    s.window.push_back({true, true});
    for (std::size_t i = 1; i < 29; ++i) s.window.push_back({i < n - 1, false});
    sensitized_ok = sensitized_ok && hysteresis_step(s, true, {}).alarm_fired == (n > 12);
  }

  bool quiet_ok = true;
  for (const auto& step : run(std::vector<bool>(1000, false))) quiet_ok = quiet_ok && !step.alarm_fired;

  bool replay_ok = true;
  std::mt19937_64 rng(5);
  for (int stream = 0; stream < 1000 && replay_ok; ++stream) {
    std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
    HysteresisState s;
    dcan::testing::ReferenceAlarm ref;
    for (int i = 0; i < 150; ++i) {
      const bool a = coin(rng);
      auto step = hysteresis_step(s, a, {});
      replay_ok = replay_ok && step.alarm_fired == ref.step(a) && step.state.window.size() <= 30;
      s = std::move(step.state);
    }
  }
  return check(fresh_ok && sensitized_ok && quiet_ok && replay_ok,
               std::string("fresh 17/16 ") + (fresh_ok ? "ok" : "wrong") + ", sensitized 13/12 " +
                   (sensitized_ok ? "ok" : "wrong") + ", all-normal " + (quiet_ok ? "ok" : "wrong") +
                   ", 1000 streams vs reference " + (replay_ok ? "ok" : "wrong"));
}

Outcome a6_fft() {
  double worst = 0.0;
  double parseval = 0.0;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t n : {8, 64, 256, 1024, 4096}) {
    for (int rep = 0; rep < 3; ++rep) {
      std::vector<double> x(n);
      for (auto& v : x) v = d(rng);
      const auto ref = dcan::testing::direct_dft(x);
      const auto s = signal::fft_magnitude(x, 1024.0);
      double scale = 0.0;
      for (std::size_t k = 0; k <= n / 2; ++k) scale = std::max(scale, std::abs(ref[k]));
      for (std::size_t k = 0; k <= n / 2; ++k) worst = std::max(worst, std::abs(s.magnitudes[k] - std::abs(ref[k])) / scale);
      double time_energy = 0.0, freq_energy = 0.0;
      for (double v : x) time_energy += v * v;
      for (const auto& c : signal::fft(x)) freq_energy += std::norm(c);
      parseval = std::max(parseval, std::abs(freq_energy / static_cast<double>(n) - time_energy) / time_energy);
    }
  }
  std::vector<double> sine(4096);
  for (std::size_t i = 0; i < sine.size(); ++i) sine[i] = std::sin(2.0 * std::numbers::pi * 136.0 * static_cast<double>(i) / 1024.0);
  const auto spec = signal::fft_magnitude(sine, 1024.0);
  const auto peak = static_cast<std::size_t>(
      std::max_element(spec.magnitudes.begin() + 1, spec.magnitudes.end()) - spec.magnitudes.begin());
  return check(worst <= 1e-6 && parseval <= 1e-6 && peak == 544,
               fmt("max relative deviation from direct DFT %.3g, Parseval %.3g (limits 1e-6), 136 Hz peak bin %.0f",
                   worst, parseval, static_cast<double>(peak)));
}

Outcome a7_time_scale() {
  signal::NormalSignalSpec spec;
  spec.secondary.amplitude = 0.0;
  spec.harmonics.clear();
  spec.noise_std = 0.0;
  const auto w = signal::synth_normal(spec, 7);
  const double base = signal::dominant_frequency(signal::fft_magnitude(w));
  const double fast = signal::dominant_frequency(signal::fft_magnitude(signal::time_scale(w, 0.5).waveform));
  const double slow = signal::dominant_frequency(signal::fft_magnitude(signal::time_scale(w, 2.0).waveform));
  // The default (multi-tone) spectrum must shift the same way.
  const auto full = signal::synth_normal(signal::NormalSignalSpec{}, 8);
  const double full_fast = signal::dominant_frequency(signal::fft_magnitude(signal::time_scale(full, 0.5).waveform));
  const double full_slow = signal::dominant_frequency(signal::fft_magnitude(signal::time_scale(full, 2.0).waveform));
  return check(base == 136.0 && fast == 272.0 && slow == 68.0 && full_fast == 272.0 && full_slow == 68.0,
               fmt("136 Hz -> %.2f Hz (x0.5), %.2f Hz (x2.0); default spectrum -> %.2f / %.2f Hz", fast, slow,
                   full_fast, full_slow));
}

Outcome a8_round_trips(const TrainedModel& t) {
  const auto dir = std::filesystem::temp_directory_path() / ("dcan_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto& c = t.checkpoint;
  save_checkpoint(dir / "model.dcan", c.model, c.stats, metadata_from(t.result));
  const auto loaded = load_checkpoint(dir / "model.dcan");
  const auto frames = signal::synth_frames(signal::NormalSignalSpec{}, 3, 8, 77);
  const auto x = standardized_tensor(frames, c.stats);
  const auto a = reconstruct(c.model, x);
  const auto b = reconstruct(loaded.model, x);
  const bool ckpt_ok = std::equal(a.data().begin(), a.data().end(), b.data().begin()) && loaded.stats == c.stats &&
                       serialize_checkpoint(loaded.model, loaded.stats, loaded.training) == read_file_bytes(dir / "model.dcan");

  auto config = FleetConfig::default_six(dir / "model.dcan");
  const auto norm = calibrate_predictor(c, signal::synth_frames(signal::NormalSignalSpec{}, 3, 50, 88));
  for (auto& p : config.predictors) p.normalization = norm;
  FrameStreams streams;
  std::uint64_t seed = 500;
  for (const auto& p : config.predictors) {
    signal::Perturbation pert;
    if (p.id == "gear-right") pert.time_scale = 0.5;
    streams[p.id] = signal::synth_frames(signal::NormalSignalSpec{}, 3, 20, seed++, pert, 1'700'000'000);
  }
  config.report_log = dir / "first.jsonl";
  const auto reports = run_fleet(config, streams);
  config.report_log = dir / "second.jsonl";
  run_fleet(config, streams);
  const auto first = read_file_bytes(dir / "first.jsonl");
  const bool replay_ok = !first.empty() && first == read_file_bytes(dir / "second.jsonl");
  const bool log_ok = read_report_log(dir / "first.jsonl") == reports;
  std::filesystem::remove_all(dir);
  return check(ckpt_ok && replay_ok && log_ok,
               std::string("checkpoint ") + (ckpt_ok ? "bit-exact" : "differs") + ", report log round trip " +
                   (log_ok ? "lossless" : "lossy") + ", replayed log " + (replay_ok ? "byte-identical" : "differs") +
                   " (" + std::to_string(reports.size()) + " reports)");
}

Outcome a9_nasa() {
  const char* root = std::getenv("DCAN_NASA_ROOT");
  if (!root || !*root) return {Outcome::skip, "DCAN_NASA_ROOT not set"};
  const auto splits = build_nasa_splits(root, SplitSpec{}, 1);
  for (const auto& w : splits.warnings) std::fprintf(stderr, "A9 warning: %s\n", w.c_str());
  Checkpoint c;
  c.stats = fit_standardization(splits.train);
  c.model = build<float>(DcanConfig::standard(1), 7);
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochLoss& e) {
    std::fprintf(stderr, "A9 epoch %zu train %.5f val %.5f\n", e.epoch, e.train_mse, e.val_mse);
  };
  train(c.model, splits.train, c.stats, TrainConfig{}, hooks);
  bool ok = true;
  std::string detail = "train frames " + std::to_string(splits.train.size());
  for (const auto& [label, frames] : splits.test) {
    const auto mse = total_mse(c, frames);
    const std::size_t half = mse.size() / 2;
    const std::size_t tail = std::max<std::size_t>(1, mse.size() / 10);
    const double early = mean(std::vector<double>(mse.begin(), mse.begin() + static_cast<std::ptrdiff_t>(half)));
    const double late = mean(std::vector<double>(mse.end() - static_cast<std::ptrdiff_t>(tail), mse.end()));
    ok = ok && half > 0 && late >= 2.0 * early;
    detail += "; " + label + fmt(": first-half mean %.4f, final-10%% mean %.4f, ratio %.2f", early, late, late / early);
  }
  return check(ok, detail + " (need ratio >= 2)");
}

}  // namespace

int main() {
  bool failed = false;
  auto report = [&](const char* id, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const char* word = o.status == Outcome::pass ? "PASS" : o.status == Outcome::skip ? "SKIP" : "FAIL";
    failed = failed || o.status == Outcome::fail;
    std::printf("%s %s  %s\n", id, word, o.detail.c_str());
    std::fflush(stdout);
  };

  report("A1", a1_shape_chain);
  report("A2", a2_gradients);
  TrainedModel trained;
  bool trained_ok = true;
  try {
    trained = train_synthetic();
  } catch (const std::exception& e) {
    trained_ok = false;
    std::printf("training failed: %s\n", e.what());
  }
  report("A3", [&] { return trained_ok ? a3_convergence(trained) : Outcome{Outcome::fail, "training failed"}; });
  report("A4", [&] { return trained_ok ? a4_separation(trained) : Outcome{Outcome::fail, "training failed"}; });
  report("A5", a5_hysteresis);
  report("A6", a6_fft);
  report("A7", a7_time_scale);
  report("A8", [&] { return trained_ok ? a8_round_trips(trained) : Outcome{Outcome::fail, "training failed"}; });
  report("A9", a9_nasa);
  return failed ? 1 : 0;
}
