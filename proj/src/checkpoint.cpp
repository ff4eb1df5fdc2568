#include "dcan/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"

namespace dcan {

namespace {

constexpr std::string_view kMagic = "DCAN";

nlohmann::json config_to_json(const DcanConfig& c) {
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& s : c.conv) {
    conv.push_back({{"out_channels", s.out_channels}, {"kernel_width", s.kernel_width}, {"stride_width", s.stride_width}});
  }
  return {{"axes", c.axes}, {"frame_len", c.frame_len}, {"conv", conv}, {"fc_hidden", c.fc_hidden},
          {"leaky_slope", c.leaky_slope}};
}

DcanConfig config_from_json(const nlohmann::json& j) {
  DcanConfig c;
  c.axes = j.at("axes").get<std::size_t>();
  c.frame_len = j.at("frame_len").get<std::size_t>();
  const auto& conv = j.at("conv");
  if (!conv.is_array() || conv.size() != 3) throw FormatError("checkpoint must describe exactly 3 conv stages");
  for (std::size_t i = 0; i < 3; ++i) {
    c.conv[i] = {conv[i].at("out_channels").get<std::size_t>(), conv[i].at("kernel_width").get<std::size_t>(),
                 conv[i].at("stride_width").get<std::size_t>()};
  }
  c.fc_hidden = j.at("fc_hidden").get<std::vector<std::size_t>>();
  c.leaky_slope = j.at("leaky_slope").get<double>();
  return c;
}

nlohmann::json optional_number(const std::optional<double>& v) {
  return v.has_value() ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

TrainingMetadata metadata_from(const TrainResult& result) {
  TrainingMetadata m;
  m.epochs_run = result.history.epochs.size();
  m.best_epoch = result.best_epoch;
  if (!result.history.epochs.empty()) {
    m.final_train_mse = result.history.epochs.back().train_mse;
    m.final_val_mse = result.history.epochs.back().val_mse;
  }
  return m;
}

std::string serialize_checkpoint(const DcanModel<float>& model, const StandardizationStats& stats,
                                 const TrainingMetadata& training) {
  if (stats.axes() != model.config.axes) {
    throw ConfigError("standardization covers " + std::to_string(stats.axes()) + " axes but the model expects " +
                      std::to_string(model.config.axes));
  }
  const nlohmann::json meta = {
      {"config", config_to_json(model.config)},
      {"standardization", {{"mean", stats.mean}, {"std", stats.std}}},
      {"training",
       {{"epochs_run", training.epochs_run},
        {"best_epoch", training.best_epoch},
        {"final_train_mse", optional_number(training.final_train_mse)},
        {"final_val_mse", optional_number(training.final_val_mse)}}}};
  const std::string meta_text = meta.dump();

  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(meta_text.size()));
  w.put_bytes(meta_text);
  const auto params = model.named_parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(tensor->rank()));
    for (std::size_t d : tensor->shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : tensor->data()) w.put<float>(v);
  }
  return std::move(w).take();
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  detail::ByteReader r(bytes.substr(kMagic.size()), "checkpoint");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                               std::to_string(kCheckpointVersion) + ")");
  }
  const auto meta_len = r.get<std::uint32_t>();
  const std::string_view meta_text = r.take(meta_len);

  Checkpoint ck;
  try {
    const auto meta = nlohmann::json::parse(meta_text);
    const DcanConfig config = config_from_json(meta.at("config"));
    ck.model = DcanModel<float>::zeros(config);
    ck.stats.mean = meta.at("standardization").at("mean").get<std::vector<double>>();
    ck.stats.std = meta.at("standardization").at("std").get<std::vector<double>>();
    const auto& t = meta.at("training");
    ck.training.epochs_run = t.at("epochs_run").get<std::size_t>();
    ck.training.best_epoch = t.at("best_epoch").get<std::size_t>();
    ck.training.final_train_mse = optional_from(t.at("final_train_mse"));
    ck.training.final_val_mse = optional_from(t.at("final_val_mse"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is malformed: ") + e.what());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("checkpoint describes an invalid model: ") + e.what());
  }
  if (ck.stats.mean.size() != ck.model.config.axes || ck.stats.std.size() != ck.model.config.axes) {
    throw FormatError("checkpoint standardization does not match the model axis count");
  }

  auto params = ck.model.named_parameters();
  const auto count = r.get<std::uint32_t>();
  if (count != params.size()) {
    throw FormatError("checkpoint holds " + std::to_string(count) + " tensors, model needs " +
                      std::to_string(params.size()));
  }
  for (auto& [name, tensor] : params) {
    const auto name_len = r.get<std::uint32_t>();
    const std::string_view stored = r.take(name_len);
    if (stored != name) {
      throw FormatError("checkpoint tensor '" + std::string(stored) + "' found where '" + name + "' was expected");
    }
    const auto rank = r.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    if (shape != tensor->shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_string(shape) + ", expected " +
                        shape_string(tensor->shape()));
    }
    for (float& v : tensor->data()) v = r.get<float>();
  }
  if (r.remaining() != 0) {
    throw FormatError("checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const DcanModel<float>& model,
                     const StandardizationStats& stats, const TrainingMetadata& training) {
  write_file_bytes(path, serialize_checkpoint(model, stats, training));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file_bytes(path)); }

}  // namespace dcan
