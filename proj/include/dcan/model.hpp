#pragma once

// Deep convolutional auto-encoding network: a three-stage convolutional
// feature extractor, a fully-connected auto-encoder over the flattened
// features and a three-stage transposed-convolution reconstructor.
//
// Default shape chain for a 3-axis frame:
//   1x3x4096 -conv1-> 8x1x253 -conv2-> 16x1x61 -conv3-> 16x1x57 -> 912
//   912 -> 200 -> 200 -> 200 -> 200 -> 912
//   16x1x57 -deconv1-> 16x1x61 -deconv2-> 8x1x253 -deconv3-> 1x3x4096

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dcan/nn.hpp"
#include "dcan/tensor.hpp"

namespace dcan {

struct ConvStage {
  std::size_t out_channels = 0;
  std::size_t kernel_width = 0;
  std::size_t stride_width = 1;

  friend bool operator==(const ConvStage&, const ConvStage&) = default;
};

struct DcanConfig {
  std::size_t axes = 3;
  std::size_t frame_len = 4096;
  std::array<ConvStage, 3> conv{{{8, 64, 16}, {16, 13, 4}, {16, 5, 1}}};
  // Hidden widths of the fully-connected auto-encoder; a final linear layer
  // maps the last hidden width back to feature_length().
  std::vector<std::size_t> fc_hidden{200, 200, 200, 200};
  double leaky_slope = nn::kDefaultLeakySlope;

  static DcanConfig standard(std::size_t axes = 3);
  // Frame length 64 with halved channel counts and narrow FC layers; used for
  // end-to-end finite-difference checks.
  static DcanConfig tiny(std::size_t axes = 3);

  // Throws ConfigError unless the layer table round-trips frame_len exactly.
  void validate() const;

  // Width after each convolution stage.
  std::array<std::size_t, 3> encoder_widths() const;
  std::size_t feature_length() const;

  friend bool operator==(const DcanConfig&, const DcanConfig&) = default;
};

template <typename T>
struct DcanModel {
  DcanConfig config;
  std::array<nn::Conv2dLayer<T>, 3> conv;
  std::vector<nn::DenseLayer<T>> fc;
  std::array<nn::ConvTranspose2dLayer<T>, 3> deconv;

  // Model with every parameter zero; also used as a gradient accumulator.
  static DcanModel zeros(const DcanConfig& config);

  std::vector<std::pair<std::string, Tensor<T>*>> named_parameters();
  std::vector<std::pair<std::string, const Tensor<T>*>> named_parameters() const;
  std::size_t parameter_count() const;

  void set_zero();

  template <typename U>
  DcanModel<U> cast() const;
};

template <typename T>
DcanModel<T> build(const DcanConfig& config, std::uint64_t seed);

// frames: (B, 1, axes, frame_len) -> (B, feature_length)
template <typename T>
Tensor<T> encode(const DcanModel<T>& model, const Tensor<T>& frames);

// features: (B, feature_length) -> (B, 1, axes, frame_len)
template <typename T>
Tensor<T> decode(const DcanModel<T>& model, const Tensor<T>& features);

template <typename T>
Tensor<T> reconstruct(const DcanModel<T>& model, const Tensor<T>& frames);

struct ReconstructionReport {
  std::vector<double> per_axis_mse;
  double total_mse = 0.0;
};

// One report per batch entry of two (B, 1, A, L) tensors.
template <typename T>
std::vector<ReconstructionReport> report(const Tensor<T>& input, const Tensor<T>& reconstructed);

// Returns mse(reconstruct(frames), frames) over the whole batch and adds its
// gradient with respect to every parameter into `grads`.
template <typename T>
double reconstruction_loss_and_grad(const DcanModel<T>& model, const Tensor<T>& frames, DcanModel<T>& grads);

template <typename T>
template <typename U>
DcanModel<U> DcanModel<T>::cast() const {
  DcanModel<U> out = DcanModel<U>::zeros(config);
  auto src = named_parameters();
  auto dst = out.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<U>();
  return out;
}

}  // namespace dcan
