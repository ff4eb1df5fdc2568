#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <vector>

#include "dcan/checkpoint.hpp"
#include "dcan/error.hpp"
#include "dcan/signal.hpp"
#include "dcan/training.hpp"
#include "support/oracles.hpp"

using namespace dcan;
using signal::NormalSignalSpec;
using signal::synth_frame;

namespace {

Frame make_frame(std::vector<std::vector<float>> axes) {
  Frame f;
  f.axes = axes.size();
  for (auto& a : axes) f.samples.insert(f.samples.end(), a.begin(), a.end());
  return f;
}

Tensor<float> tiny_data(std::size_t n, std::uint64_t seed) {
  return dcan::testing::random_tensor<float>({n, 1, 3, 64}, seed, -1.5, 1.5);
}

bool same_parameters(const DcanModel<float>& a, const DcanModel<float>& b) {
  auto pa = a.named_parameters();
  auto pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i].first != pb[i].first || pa[i].second->shape() != pb[i].second->shape()) return false;
    if (!std::ranges::equal(pa[i].second->data(), pb[i].second->data())) return false;
  }
  return true;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("dcan_training_" + name);
}

}  // namespace

TEST(Standardization, PopulationStatsPerAxis) {
  const std::vector<Frame> frames{make_frame({{1, 2, 3}, {0, 0, 10}}), make_frame({{4, 5, 6}, {10, 10, 10}})};
  const auto s = fit_standardization(frames);
  ASSERT_EQ(s.axes(), 2u);
  EXPECT_NEAR(s.mean[0], 3.5, 1e-12);
  EXPECT_NEAR(s.std[0], std::sqrt(17.5 / 6.0), 1e-12);
  EXPECT_NEAR(s.mean[1], 40.0 / 6.0, 1e-12);
  const double m = 40.0 / 6.0;
  const double var = (2 * m * m + 4 * (10 - m) * (10 - m)) / 6.0;
  EXPECT_NEAR(s.std[1], std::sqrt(var), 1e-12);
}

TEST(Standardization, StandardizedDataHasUnitStats) {
  NormalSignalSpec spec;
  std::vector<Frame> frames;
  for (std::uint64_t i = 0; i < 6; ++i) frames.push_back(synth_frame(spec, 3, 100 + i));
  const auto stats = fit_standardization(frames);
  std::vector<Frame> z;
  for (const auto& f : frames) z.push_back(standardize(f, stats));
  const auto again = fit_standardization(z);
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_NEAR(again.mean[a], 0.0, 1e-6);
    EXPECT_NEAR(again.std[a], 1.0, 1e-6);
  }
  const auto back = destandardize(z[2], stats);
  for (std::size_t i = 0; i < back.samples.size(); ++i) EXPECT_NEAR(back.samples[i], frames[2].samples[i], 1e-6);
}

TEST(Standardization, RejectsDegenerateInput) {
  EXPECT_THROW(fit_standardization(std::vector<Frame>{make_frame({{1, 2}})}), CalibrationError);
  const std::vector<Frame> flat{make_frame({{1, 2}, {3, 3}}), make_frame({{0, 5}, {3, 3}})};
  try {
    fit_standardization(flat);
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_NE(std::string(e.what()).find("axis 1"), std::string::npos) << e.what();
  }
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.validation_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Train, ValidationFramesNeverEnterGradients) {
  auto model = build<float>(DcanConfig::tiny(), 1);
  const auto data = tiny_data(40, 2);
  TrainConfig c;
  c.max_epochs = 4;
  c.batch_size = 8;
  c.seed = 9;
  std::multiset<std::size_t> seen;
  TrainHooks hooks;
  hooks.on_gradient_frame = [&](std::size_t i) { seen.insert(i); };
  const auto r = train(model, data, c, hooks);
  ASSERT_EQ(r.validation_indices.size(), 4u);
  ASSERT_EQ(r.train_indices.size(), 36u);
  for (std::size_t v : r.validation_indices) EXPECT_EQ(seen.count(v), 0u) << v;
  for (std::size_t t : r.train_indices) EXPECT_EQ(seen.count(t), r.history.epochs.size()) << t;
}

TEST(Train, DeterministicForSeed) {
  const auto data = tiny_data(24, 3);
  TrainConfig c;
  c.max_epochs = 3;
  c.batch_size = 5;
  c.seed = 4;
  auto a = build<float>(DcanConfig::tiny(), 7);
  auto b = build<float>(DcanConfig::tiny(), 7);
  const auto ra = train(a, data, c);
  const auto rb = train(b, data, c);
  EXPECT_EQ(ra.history.to_csv(), rb.history.to_csv());
  EXPECT_TRUE(same_parameters(a, b));

  c.seed = 5;
  auto d = build<float>(DcanConfig::tiny(), 7);
  train(d, data, c);
  EXPECT_FALSE(same_parameters(a, d));
}

TEST(Train, LossDecreasesAndBestWeightsKept) {
  auto model = build<float>(DcanConfig::tiny(), 11);
  const auto data = tiny_data(64, 12);
  TrainConfig c;
  c.max_epochs = 30;
  c.batch_size = 16;
  c.patience = 3;
  const auto r = train(model, data, c);
  ASSERT_FALSE(r.history.epochs.empty());
  EXPECT_LT(r.history.epochs.back().train_mse, r.history.epochs.front().train_mse);
  double best = INFINITY;
  std::size_t best_epoch = 0;
  for (const auto& e : r.history.epochs) {
    if (e.val_mse < best) {
      best = e.val_mse;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  const auto val = gather_rows(data, r.validation_indices);
  EXPECT_NEAR(evaluate_mse(model, val), best, 1e-6 * std::max(1.0, best));
  if (r.early_stopped) EXPECT_EQ(r.history.epochs.size(), best_epoch + c.patience);
}

TEST(Train, RejectsMismatchedGeometry) {
  auto model = build<float>(DcanConfig::tiny(), 1);
  EXPECT_THROW(train(model, dcan::testing::random_tensor<float>({8, 1, 2, 64}, 1), TrainConfig{}), DimensionError);
}

TEST(Train, NonFiniteLossIsTrainingError) {
  auto model = build<float>(DcanConfig::tiny(), 1);
  auto data = tiny_data(16, 1);
  for (std::size_t i = 0; i < 16; ++i) data[i * 192 + 5] = NAN;
  TrainConfig c;
  c.max_epochs = 1;
  c.batch_size = 4;
  EXPECT_THROW(train(model, data, c), TrainingError);
}

TEST(LossHistoryTest, CsvLayout) {
  LossHistory h;
  h.epochs = {{1, 0.5, 0.75}, {2, 0.25, 0.125}};
  EXPECT_EQ(h.to_csv(), "epoch,train_mse,val_mse\n1,0.5,0.75\n2,0.25,0.125\n");
}

TEST(CheckpointTest, RoundTripIsBitExact) {
  const auto model = build<float>(DcanConfig::standard(3), 21);
  const StandardizationStats stats{{0.1, -0.2, 0.3}, {1.5, 2.5, 3.5}};
  const TrainingMetadata meta{12, 9, 0.0123, 0.0456};
  const auto path = temp_path("roundtrip.ckpt");
  save_checkpoint(path, model, stats, meta);
  const auto loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(loaded.model.config, model.config);
  EXPECT_EQ(loaded.stats, stats);
  EXPECT_EQ(loaded.training, meta);
  EXPECT_TRUE(same_parameters(loaded.model, model));
  const auto x = dcan::testing::random_tensor<float>({2, 1, 3, 4096}, 5, -3.0, 3.0);
  EXPECT_TRUE(std::ranges::equal(reconstruct(loaded.model, x).data(), reconstruct(model, x).data()));
  EXPECT_EQ(serialize_checkpoint(loaded.model, loaded.stats, loaded.training), serialize_checkpoint(model, stats, meta));
}

TEST(CheckpointTest, TinyConfigRoundTrip) {
  const auto model = build<float>(DcanConfig::tiny(1), 2);
  const auto bytes = serialize_checkpoint(model, {{0.0}, {1.0}});
  const auto c = parse_checkpoint(bytes);
  EXPECT_EQ(c.model.config, model.config);
  EXPECT_FALSE(c.training.final_train_mse.has_value());
}

TEST(CheckpointTest, EveryTruncationIsRejected) {
  const auto bytes = serialize_checkpoint(build<float>(DcanConfig::tiny(), 3), {{0, 0, 0}, {1, 1, 1}});
  for (std::size_t len = 0; len < bytes.size(); len += (len < 200 ? 1 : 97)) {
    EXPECT_THROW(parse_checkpoint(std::string_view(bytes).substr(0, len)), FormatError) << len;
  }
  EXPECT_THROW(parse_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 1)), TruncatedFileError);
}

TEST(CheckpointTest, BadMagicAndVersion) {
  auto bytes = serialize_checkpoint(build<float>(DcanConfig::tiny(), 3), {{0, 0, 0}, {1, 1, 1}});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(
      {
        try {
          parse_checkpoint(bad);
        } catch (const VersionMismatchError&) {
          FAIL() << "magic error reported as version mismatch";
        } catch (const TruncatedFileError&) {
          FAIL() << "magic error reported as truncation";
        }
      },
      FormatError);
  auto v2 = bytes;
  v2[4] = 2;
  EXPECT_THROW(parse_checkpoint(v2), VersionMismatchError);
  EXPECT_THROW(parse_checkpoint(bytes + "junk"), FormatError);
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_THROW(load_checkpoint(temp_path("does_not_exist.ckpt")), IoError);
}
