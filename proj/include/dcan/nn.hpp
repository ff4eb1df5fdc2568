#pragma once

// Layer primitives for the convolutional auto-encoder: valid (unpadded)
// strided 2-D convolution and its transpose, fully-connected layers,
// LeakyReLU, MSE and an Adam optimizer. All functions are instantiated for
// float (production) and double (gradient checking).

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcan/tensor.hpp"

namespace dcan::nn {

using Extent2 = std::array<std::size_t, 2>;  // (height, width)

// weights: (out_channels, in_channels, kh, kw); bias: (out_channels)
template <typename T>
struct Conv2dLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Extent2 kernel{};
  Extent2 stride{1, 1};
  Tensor<T> weights;
  Tensor<T> bias;

  static Conv2dLayer make(std::size_t in_channels, std::size_t out_channels, Extent2 kernel, Extent2 stride);
  Extent2 output_extent(Extent2 input) const;
  std::size_t fan_in() const noexcept { return in_channels * kernel[0] * kernel[1]; }
};

// Weights are stored (in_channels, out_channels, kh, kw) so that a transposed
// layer can share the weight tensor of the convolution it mirrors.
template <typename T>
struct ConvTranspose2dLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  Extent2 kernel{};
  Extent2 stride{1, 1};
  Tensor<T> weights;
  Tensor<T> bias;

  static ConvTranspose2dLayer make(std::size_t in_channels, std::size_t out_channels, Extent2 kernel,
                                   Extent2 stride);
  Extent2 output_extent(Extent2 input) const noexcept;
  std::size_t fan_in() const noexcept { return in_channels * kernel[0] * kernel[1]; }
};

// y = W x + b with W: (out_features, in_features).
template <typename T>
struct DenseLayer {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> weights;
  Tensor<T> bias;

  static DenseLayer make(std::size_t in_features, std::size_t out_features);
  std::size_t fan_in() const noexcept { return in_features; }
};

template <typename T>
struct LayerGrads {
  Tensor<T> input;  // empty when the caller did not ask for it
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2dLayer<T>& layer);

template <typename T>
LayerGrads<T> conv2d_backward(const Tensor<T>& input, const Conv2dLayer<T>& layer, const Tensor<T>& upstream,
                              bool want_input_grad = true);

// Accumulating form used by the training loop: adds into grad_weights /
// grad_bias and, when grad_input is non-null, overwrites *grad_input.
template <typename T>
void conv2d_backward_accumulate(const Tensor<T>& input, const Conv2dLayer<T>& layer, const Tensor<T>& upstream,
                                Tensor<T>* grad_input, Tensor<T>& grad_weights, Tensor<T>& grad_bias);

template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer);

template <typename T>
LayerGrads<T> conv_transpose2d_backward(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer,
                                        const Tensor<T>& upstream, bool want_input_grad = true);

template <typename T>
void conv_transpose2d_backward_accumulate(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer,
                                          const Tensor<T>& upstream, Tensor<T>* grad_input,
                                          Tensor<T>& grad_weights, Tensor<T>& grad_bias);

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const DenseLayer<T>& layer);

template <typename T>
LayerGrads<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                             bool want_input_grad = true);

template <typename T>
void dense_backward_accumulate(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                               Tensor<T>* grad_input, Tensor<T>& grad_weights, Tensor<T>& grad_bias);

inline constexpr double kDefaultLeakySlope = 0.01;

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope);

template <typename T>
void leaky_relu_inplace(Tensor<T>& x, T slope) noexcept;

// Gradient of LeakyReLU given its input (or output: the sign is preserved).
// The derivative at exactly zero is taken as 1.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, const Tensor<T>& upstream, T slope);

template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& upstream, T slope);

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct ParamRef {
  std::string name;
  Tensor<T>* value = nullptr;
  const Tensor<T>* grad = nullptr;
};

template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  const std::vector<Tensor<T>>& first_moment() const noexcept { return m_; }
  const std::vector<Tensor<T>>& second_moment() const noexcept { return v_; }

  // Applies one bias-corrected Adam update to every parameter. All gradients
  // are validated before any parameter changes; a non-finite element throws
  // TrainingError naming the parameter.
  void step(const std::vector<ParamRef<T>>& params);

 private:
  AdamConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
};

template <typename T>
void adam_step(const std::vector<ParamRef<T>>& params, AdamState<T>& state) {
  state.step(params);
}

// Uniform weights in [-s, s], s = sqrt(1 / fan_in); zero biases.
template <typename T>
void init_params(Conv2dLayer<T>& layer, std::uint64_t seed);
template <typename T>
void init_params(ConvTranspose2dLayer<T>& layer, std::uint64_t seed);
template <typename T>
void init_params(DenseLayer<T>& layer, std::uint64_t seed);

}  // namespace dcan::nn
