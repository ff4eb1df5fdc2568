#include "dcan/model.hpp"

#include <random>

#include "dcan/kernels.hpp"

namespace dcan {

// ---------------------------------------------------------------------------
// Configuration

DcanConfig DcanConfig::standard(std::size_t axes) {
  DcanConfig config;
  config.axes = axes;
  return config;
}

DcanConfig DcanConfig::tiny(std::size_t axes) {
  DcanConfig config;
  config.axes = axes;
  config.frame_len = 64;
  config.conv = {{{4, 16, 4}, {8, 5, 2}, {8, 3, 1}}};
  config.fc_hidden = {16, 16, 16, 16};
  return config;
}

std::array<std::size_t, 3> DcanConfig::encoder_widths() const {
  std::array<std::size_t, 3> widths{};
  std::size_t width = frame_len;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto& stage = conv[i];
    if (stage.kernel_width == 0 || stage.stride_width == 0 || stage.kernel_width > width) {
      throw ConfigError("conv" + std::to_string(i + 1) + ": kernel width " + std::to_string(stage.kernel_width) +
                        " does not fit input width " + std::to_string(width));
    }
    width = (width - stage.kernel_width) / stage.stride_width + 1;
    widths[i] = width;
  }
  return widths;
}

std::size_t DcanConfig::feature_length() const { return conv[2].out_channels * encoder_widths()[2]; }

void DcanConfig::validate() const {
  if (axes != 1 && axes != 3) {
    throw ConfigError("unsupported axis count " + std::to_string(axes) + " (expected 1 or 3)");
  }
  if (frame_len == 0) throw ConfigError("frame length must be positive");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) throw ConfigError("leaky slope must lie in (0, 1)");
  std::size_t width = frame_len;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    const auto& stage = conv[i];
    if (stage.out_channels == 0) throw ConfigError("conv" + std::to_string(i + 1) + ": zero output channels");
    if (stage.kernel_width == 0 || stage.stride_width == 0 || stage.kernel_width > width) {
      throw ConfigError("conv" + std::to_string(i + 1) + ": kernel width does not fit input width " +
                        std::to_string(width));
    }
    if ((width - stage.kernel_width) % stage.stride_width != 0) {
      throw ConfigError("conv" + std::to_string(i + 1) + ": stride " + std::to_string(stage.stride_width) +
                        " does not divide " + std::to_string(width) + " - " + std::to_string(stage.kernel_width) +
                        "; the transposed stage would not restore the width");
    }
    width = (width - stage.kernel_width) / stage.stride_width + 1;
  }
  if (fc_hidden.empty()) throw ConfigError("at least one hidden fully-connected layer is required");
  for (std::size_t w : fc_hidden) {
    if (w == 0) throw ConfigError("fully-connected hidden width must be positive");
  }
}

// ---------------------------------------------------------------------------
// Model container

template <typename T>
DcanModel<T> DcanModel<T>::zeros(const DcanConfig& config) {
  config.validate();
  const std::size_t a = config.axes;
  const auto& c = config.conv;
  DcanModel<T> m;
  m.config = config;
  m.conv[0] = nn::Conv2dLayer<T>::make(1, c[0].out_channels, {a, c[0].kernel_width}, {1, c[0].stride_width});
  m.conv[1] = nn::Conv2dLayer<T>::make(c[0].out_channels, c[1].out_channels, {1, c[1].kernel_width},
                                       {1, c[1].stride_width});
  m.conv[2] = nn::Conv2dLayer<T>::make(c[1].out_channels, c[2].out_channels, {1, c[2].kernel_width},
                                       {1, c[2].stride_width});

  std::size_t width = config.feature_length();
  for (std::size_t hidden : config.fc_hidden) {
    m.fc.push_back(nn::DenseLayer<T>::make(width, hidden));
    width = hidden;
  }
  m.fc.push_back(nn::DenseLayer<T>::make(width, config.feature_length()));

  m.deconv[0] = nn::ConvTranspose2dLayer<T>::make(c[2].out_channels, c[1].out_channels, {1, c[2].kernel_width},
                                                  {1, c[2].stride_width});
  m.deconv[1] = nn::ConvTranspose2dLayer<T>::make(c[1].out_channels, c[0].out_channels, {1, c[1].kernel_width},
                                                  {1, c[1].stride_width});
  m.deconv[2] = nn::ConvTranspose2dLayer<T>::make(c[0].out_channels, 1, {a, c[0].kernel_width},
                                                  {1, c[0].stride_width});
  return m;
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> DcanModel<T>::named_parameters() {
  std::vector<std::pair<std::string, Tensor<T>*>> out;
  for (std::size_t i = 0; i < conv.size(); ++i) {
    out.emplace_back("conv" + std::to_string(i + 1) + ".weight", &conv[i].weights);
    out.emplace_back("conv" + std::to_string(i + 1) + ".bias", &conv[i].bias);
  }
  for (std::size_t i = 0; i < fc.size(); ++i) {
    out.emplace_back("fc" + std::to_string(i + 1) + ".weight", &fc[i].weights);
    out.emplace_back("fc" + std::to_string(i + 1) + ".bias", &fc[i].bias);
  }
  for (std::size_t i = 0; i < deconv.size(); ++i) {
    out.emplace_back("deconv" + std::to_string(i + 1) + ".weight", &deconv[i].weights);
    out.emplace_back("deconv" + std::to_string(i + 1) + ".bias", &deconv[i].bias);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const Tensor<T>*>> DcanModel<T>::named_parameters() const {
  auto mutable_params = const_cast<DcanModel*>(this)->named_parameters();
  std::vector<std::pair<std::string, const Tensor<T>*>> out;
  out.reserve(mutable_params.size());
  for (auto& [name, tensor] : mutable_params) out.emplace_back(std::move(name), tensor);
  return out;
}

template <typename T>
std::size_t DcanModel<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.second->size();
  return n;
}

template <typename T>
void DcanModel<T>::set_zero() {
  for (auto& p : named_parameters()) p.second->fill(T(0));
}

template <typename T>
DcanModel<T> build(const DcanConfig& config, std::uint64_t seed) {
  DcanModel<T> m = DcanModel<T>::zeros(config);
  std::mt19937_64 seeds(seed);
  for (auto& layer : m.conv) nn::init_params(layer, seeds());
  for (auto& layer : m.fc) nn::init_params(layer, seeds());
  for (auto& layer : m.deconv) nn::init_params(layer, seeds());
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

template <typename T>
void check_frames(const DcanModel<T>& model, const Tensor<T>& frames) {
  const auto& c = model.config;
  const Shape want{frames.rank() == 4 ? frames.dim(0) : 0, 1, c.axes, c.frame_len};
  if (frames.rank() != 4 || frames.shape() != want) {
    throw DimensionError("frames must have shape (B, 1, " + std::to_string(c.axes) + ", " +
                         std::to_string(c.frame_len) + "), got " + shape_string(frames.shape()));
  }
}

// Activations kept for the backward pass. LeakyReLU outputs share the sign of
// their inputs, so the activated tensors are enough to recover derivatives.
template <typename T>
struct Trace {
  std::array<Tensor<T>, 3> conv_out;  // activated
  std::vector<Tensor<T>> fc_in;       // input of each dense layer
  Tensor<T> code;                     // output of the last dense layer
  std::array<Tensor<T>, 2> deconv_out;  // activated outputs of deconv1, deconv2
  Tensor<T> output;
};

template <typename T>
Tensor<T> run_encoder(const DcanModel<T>& model, const Tensor<T>& frames, Trace<T>* trace) {
  const T slope = static_cast<T>(model.config.leaky_slope);
  Tensor<T> h = frames;
  for (std::size_t i = 0; i < model.conv.size(); ++i) {
    h = nn::conv2d_forward(h, model.conv[i]);
    nn::leaky_relu_inplace(h, slope);
    if (trace != nullptr) trace->conv_out[i] = h;
  }
  const std::size_t batch = frames.dim(0);
  return std::move(h).reshaped({batch, model.config.feature_length()});
}

template <typename T>
Tensor<T> run_decoder(const DcanModel<T>& model, const Tensor<T>& features, Trace<T>* trace) {
  const T slope = static_cast<T>(model.config.leaky_slope);
  const std::size_t feature_len = model.config.feature_length();
  if (features.rank() != 2 || features.dim(1) != feature_len) {
    throw DimensionError("features must have shape (B, " + std::to_string(feature_len) + "), got " +
                         shape_string(features.shape()));
  }
  Tensor<T> h = features;
  for (std::size_t i = 0; i < model.fc.size(); ++i) {
    if (trace != nullptr) trace->fc_in.push_back(h);
    h = nn::dense_forward(h, model.fc[i]);
    if (i + 1 < model.fc.size()) nn::leaky_relu_inplace(h, slope);
  }
  if (trace != nullptr) trace->code = h;

  const std::size_t batch = features.dim(0);
  const std::size_t width = model.config.encoder_widths()[2];
  h = std::move(h).reshaped({batch, model.config.conv[2].out_channels, 1, width});
  for (std::size_t i = 0; i < model.deconv.size(); ++i) {
    h = nn::conv_transpose2d_forward(h, model.deconv[i]);
    if (i + 1 < model.deconv.size()) {
      nn::leaky_relu_inplace(h, slope);
      if (trace != nullptr) trace->deconv_out[i] = h;
    }
  }
  return h;
}

}  // namespace

template <typename T>
Tensor<T> encode(const DcanModel<T>& model, const Tensor<T>& frames) {
  check_frames(model, frames);
  return run_encoder<T>(model, frames, nullptr);
}

template <typename T>
Tensor<T> decode(const DcanModel<T>& model, const Tensor<T>& features) {
  return run_decoder<T>(model, features, nullptr);
}

template <typename T>
Tensor<T> reconstruct(const DcanModel<T>& model, const Tensor<T>& frames) {
  return decode(model, encode(model, frames));
}

template <typename T>
std::vector<ReconstructionReport> report(const Tensor<T>& input, const Tensor<T>& reconstructed) {
  if (input.shape() != reconstructed.shape()) {
    throw DimensionError("report: shapes " + shape_string(input.shape()) + " and " +
                         shape_string(reconstructed.shape()) + " differ");
  }
  if (input.rank() != 4 || input.dim(1) != 1) {
    throw DimensionError("report: expected (B, 1, A, L) tensors, got " + shape_string(input.shape()));
  }
  const std::size_t batch = input.dim(0), axes = input.dim(2), len = input.dim(3);
  std::vector<ReconstructionReport> reports(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    auto& r = reports[b];
    r.per_axis_mse.resize(axes);
    double total = 0.0;
    for (std::size_t a = 0; a < axes; ++a) {
      const double sq = kernels::sum_sq_diff(&input.at(b, 0, a, 0), &reconstructed.at(b, 0, a, 0), len);
      r.per_axis_mse[a] = sq / static_cast<double>(len);
      total += sq;
    }
    r.total_mse = total / static_cast<double>(axes * len);
  }
  return reports;
}

template <typename T>
double reconstruction_loss_and_grad(const DcanModel<T>& model, const Tensor<T>& frames, DcanModel<T>& grads) {
  check_frames(model, frames);
  const T slope = static_cast<T>(model.config.leaky_slope);
  Trace<T> trace;
  const Tensor<T> features = run_encoder(model, frames, &trace);
  trace.output = run_decoder(model, features, &trace);
  const double loss = nn::mse(trace.output, frames);

  // d/dy mean((y - x)^2)
  const T scale = static_cast<T>(2.0 / static_cast<double>(frames.size()));
  Tensor<T> g(frames.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (trace.output[i] - frames[i]);

  // Transposed-convolution reconstructor.
  Tensor<T> gin;
  nn::conv_transpose2d_backward_accumulate(trace.deconv_out[1], model.deconv[2], g, &gin, grads.deconv[2].weights,
                                           grads.deconv[2].bias);
  nn::leaky_relu_backward_inplace(trace.deconv_out[1], gin, slope);
  g = std::move(gin);
  nn::conv_transpose2d_backward_accumulate(trace.deconv_out[0], model.deconv[1], g, &gin, grads.deconv[1].weights,
                                           grads.deconv[1].bias);
  nn::leaky_relu_backward_inplace(trace.deconv_out[0], gin, slope);
  g = std::move(gin);
  const Tensor<T> code4 = trace.code.reshaped(
      {frames.dim(0), model.config.conv[2].out_channels, 1, model.config.encoder_widths()[2]});
  nn::conv_transpose2d_backward_accumulate(code4, model.deconv[0], g, &gin, grads.deconv[0].weights,
                                           grads.deconv[0].bias);
  g = std::move(gin).reshaped(trace.code.shape());

  // Fully-connected auto-encoder.
  for (std::size_t i = model.fc.size(); i-- > 0;) {
    nn::dense_backward_accumulate(trace.fc_in[i], model.fc[i], g, &gin, grads.fc[i].weights, grads.fc[i].bias);
    g = std::move(gin);
    // fc_in[i] for i > 0 is the activated output of layer i - 1; fc_in[0] is
    // the flattened (activated) conv3 output.
    nn::leaky_relu_backward_inplace(trace.fc_in[i], g, slope);
  }

  // Convolutional feature extractor.
  g = std::move(g).reshaped(trace.conv_out[2].shape());
  for (std::size_t i = model.conv.size(); i-- > 0;) {
    const Tensor<T>& input = i == 0 ? frames : trace.conv_out[i - 1];
    nn::conv2d_backward_accumulate(input, model.conv[i], g, i == 0 ? nullptr : &gin, grads.conv[i].weights,
                                   grads.conv[i].bias);
    if (i > 0) {
      g = std::move(gin);
      nn::leaky_relu_backward_inplace(trace.conv_out[i - 1], g, slope);
    }
  }
  return loss;
}

#define DCAN_INSTANTIATE_MODEL(T)                                                                  \
  template struct DcanModel<T>;                                                                   \
  template DcanModel<T> build<T>(const DcanConfig&, std::uint64_t);                               \
  template Tensor<T> encode(const DcanModel<T>&, const Tensor<T>&);                               \
  template Tensor<T> decode(const DcanModel<T>&, const Tensor<T>&);                               \
  template Tensor<T> reconstruct(const DcanModel<T>&, const Tensor<T>&);                          \
  template std::vector<ReconstructionReport> report(const Tensor<T>&, const Tensor<T>&);          \
  template double reconstruction_loss_and_grad(const DcanModel<T>&, const Tensor<T>&, DcanModel<T>&);

DCAN_INSTANTIATE_MODEL(float)
DCAN_INSTANTIATE_MODEL(double)

#undef DCAN_INSTANTIATE_MODEL

}  // namespace dcan
