#include "dcan/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dcan/kernels.hpp"

namespace dcan::nn {

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* op, const char* what) {
  if (shape.size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(shape));
  }
}

void require_axis(const char* op, const char* axis, std::size_t got, std::size_t want) {
  if (got != want) {
    throw DimensionError(std::string(op) + ": " + axis + " is " + std::to_string(got) + ", expected " +
                         std::to_string(want));
  }
}

void require_same_shape(const char* op, const Shape& got, const Shape& want) {
  if (got != want) {
    throw DimensionError(std::string(op) + ": upstream gradient shape " + shape_string(got) +
                         " does not match forward output " + shape_string(want));
  }
}

void require_positive(const char* what, std::size_t v) {
  if (v == 0) throw ConfigError(std::string(what) + " must be positive");
}

template <typename T>
void uniform_fill(Tensor<T>& t, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  T limit = static_cast<T>(bound);
  if (static_cast<double>(limit) > bound) limit = std::nextafter(limit, T(0));
  for (T& w : t.data()) w = std::clamp(static_cast<T>(dist(rng)), -limit, limit);
}

}  // namespace

// ---------------------------------------------------------------------------
// Layer construction

template <typename T>
Conv2dLayer<T> Conv2dLayer<T>::make(std::size_t in_channels, std::size_t out_channels, Extent2 kernel,
                                    Extent2 stride) {
  require_positive("conv in_channels", in_channels);
  require_positive("conv out_channels", out_channels);
  require_positive("conv kernel height", kernel[0]);
  require_positive("conv kernel width", kernel[1]);
  require_positive("conv stride height", stride[0]);
  require_positive("conv stride width", stride[1]);
  Conv2dLayer layer;
  layer.in_channels = in_channels;
  layer.out_channels = out_channels;
  layer.kernel = kernel;
  layer.stride = stride;
  layer.weights = Tensor<T>({out_channels, in_channels, kernel[0], kernel[1]});
  layer.bias = Tensor<T>({out_channels});
  return layer;
}

template <typename T>
Extent2 Conv2dLayer<T>::output_extent(Extent2 input) const {
  if (kernel[0] > input[0]) {
    throw DimensionError("conv2d: kernel height " + std::to_string(kernel[0]) + " exceeds input height " +
                         std::to_string(input[0]));
  }
  if (kernel[1] > input[1]) {
    throw DimensionError("conv2d: kernel width " + std::to_string(kernel[1]) + " exceeds input width " +
                         std::to_string(input[1]));
  }
  return {(input[0] - kernel[0]) / stride[0] + 1, (input[1] - kernel[1]) / stride[1] + 1};
}

template <typename T>
ConvTranspose2dLayer<T> ConvTranspose2dLayer<T>::make(std::size_t in_channels, std::size_t out_channels,
                                                      Extent2 kernel, Extent2 stride) {
  require_positive("deconv in_channels", in_channels);
  require_positive("deconv out_channels", out_channels);
  require_positive("deconv kernel height", kernel[0]);
  require_positive("deconv kernel width", kernel[1]);
  require_positive("deconv stride height", stride[0]);
  require_positive("deconv stride width", stride[1]);
  ConvTranspose2dLayer layer;
  layer.in_channels = in_channels;
  layer.out_channels = out_channels;
  layer.kernel = kernel;
  layer.stride = stride;
  layer.weights = Tensor<T>({in_channels, out_channels, kernel[0], kernel[1]});
  layer.bias = Tensor<T>({out_channels});
  return layer;
}

template <typename T>
Extent2 ConvTranspose2dLayer<T>::output_extent(Extent2 input) const noexcept {
  return {(input[0] - 1) * stride[0] + kernel[0], (input[1] - 1) * stride[1] + kernel[1]};
}

template <typename T>
DenseLayer<T> DenseLayer<T>::make(std::size_t in_features, std::size_t out_features) {
  require_positive("dense in_features", in_features);
  require_positive("dense out_features", out_features);
  DenseLayer layer;
  layer.in_features = in_features;
  layer.out_features = out_features;
  layer.weights = Tensor<T>({out_features, in_features});
  layer.bias = Tensor<T>({out_features});
  return layer;
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

// dst[cols x rows] = src[rows x cols]^T (src leading dimension ld).
template <typename T>
std::vector<T> transposed(const T* src, std::size_t rows, std::size_t cols, std::size_t ld) {
  std::vector<T> dst(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * ld + c];
  }
  return dst;
}

// Patch geometry of one output row of a strided 2-D correlation: patch
// element (c, r, j) of output column p reads input (c, row0 + r, p * sw + j).
struct Patches {
  std::size_t channels, kh, kw, sw, in_h, in_w, row0, cols;
  std::size_t k() const noexcept { return channels * kh * kw; }
  std::size_t offset(std::size_t c, std::size_t r) const noexcept { return (c * in_h + row0 + r) * in_w; }
};

// colT[k x cols] from a (channels, in_h, in_w) plane.
template <typename T>
void gather_cols_t(const T* src, const Patches& g, T* colT) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < g.kh; ++r) {
      const T* row = src + g.offset(c, r);
      for (std::size_t j = 0; j < g.kw; ++j) {
        T* dst = colT + ((c * g.kh + r) * g.kw + j) * g.cols;
        for (std::size_t p = 0; p < g.cols; ++p) dst[p] = row[p * g.sw + j];
      }
    }
  }
}

// col[cols x k] from a (channels, in_h, in_w) plane.
template <typename T>
void gather_cols(const T* src, const Patches& g, T* col) {
  const std::size_t k = g.k();
  for (std::size_t p = 0; p < g.cols; ++p) {
    T* dst = col + p * k;
    for (std::size_t c = 0; c < g.channels; ++c) {
      for (std::size_t r = 0; r < g.kh; ++r) {
        const T* row = src + g.offset(c, r) + p * g.sw;
        std::copy_n(row, g.kw, dst);
        dst += g.kw;
      }
    }
  }
}

// Adjoint of gather_cols_t: scatter-adds colT back into the plane.
template <typename T>
void scatter_cols_t(const T* colT, const Patches& g, T* dst) {
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t r = 0; r < g.kh; ++r) {
      T* row = dst + g.offset(c, r);
      for (std::size_t j = 0; j < g.kw; ++j) {
        const T* src = colT + ((c * g.kh + r) * g.kw + j) * g.cols;
        for (std::size_t p = 0; p < g.cols; ++p) row[p * g.sw + j] += src[p];
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Conv2dLayer<T>& layer) {
  require_rank(input.shape(), 4, "conv2d", "input");
  require_axis("conv2d", "input channels (axis 1)", input.dim(1), layer.in_channels);
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const auto [out_h, out_w] = layer.output_extent({height, width});
  const auto [kh, kw] = layer.kernel;
  const auto [sh, sw] = layer.stride;
  const std::size_t outs = layer.out_channels, plane = out_h * out_w;

  Tensor<T> out({batch, outs, out_h, out_w});
  Patches g{channels, kh, kw, sw, height, width, 0, out_w};
  std::vector<T> colT(g.k() * out_w);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) std::fill_n(&out.at(b, o, 0, 0), plane, layer.bias[o]);
    for (std::size_t oh = 0; oh < out_h; ++oh) {
      g.row0 = oh * sh;
      gather_cols_t(&input.at(b, 0, 0, 0), g, colT.data());
      kernels::gemm(outs, out_w, g.k(), layer.weights.ptr(), g.k(), colT.data(), out_w, &out.at(b, 0, oh, 0), plane);
    }
  }
  return out;
}

template <typename T>
void conv2d_backward_accumulate(const Tensor<T>& input, const Conv2dLayer<T>& layer, const Tensor<T>& upstream,
                                Tensor<T>* grad_input, Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  require_rank(input.shape(), 4, "conv2d_backward", "input");
  require_axis("conv2d_backward", "input channels (axis 1)", input.dim(1), layer.in_channels);
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const auto [out_h, out_w] = layer.output_extent({height, width});
  require_same_shape("conv2d_backward", upstream.shape(), {batch, layer.out_channels, out_h, out_w});
  const auto [kh, kw] = layer.kernel;
  const auto [sh, sw] = layer.stride;
  const std::size_t outs = layer.out_channels, plane = out_h * out_w;

  Patches g{channels, kh, kw, sw, height, width, 0, out_w};
  const std::size_t k = g.k();
  std::vector<T> col(out_w * k);
  std::vector<T> gcolT;
  std::vector<T> wT;
  if (grad_input != nullptr) {
    *grad_input = Tensor<T>(input.shape());
    gcolT.resize(k * out_w);
    wT = transposed(layer.weights.ptr(), outs, k, k);
  }
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) grad_bias[o] += kernels::sum(&upstream.at(b, o, 0, 0), plane);
    for (std::size_t oh = 0; oh < out_h; ++oh) {
      g.row0 = oh * sh;
      const T* grad_rows = &upstream.at(b, 0, oh, 0);
      gather_cols(&input.at(b, 0, 0, 0), g, col.data());
      kernels::gemm(outs, k, out_w, grad_rows, plane, col.data(), k, grad_weights.ptr(), k);
      if (grad_input != nullptr) {
        std::fill(gcolT.begin(), gcolT.end(), T(0));
        kernels::gemm(k, out_w, outs, wT.data(), outs, grad_rows, plane, gcolT.data(), out_w);
        scatter_cols_t(gcolT.data(), g, &grad_input->at(b, 0, 0, 0));
      }
    }
  }
}

template <typename T>
LayerGrads<T> conv2d_backward(const Tensor<T>& input, const Conv2dLayer<T>& layer, const Tensor<T>& upstream,
                              bool want_input_grad) {
  LayerGrads<T> grads{{}, Tensor<T>(layer.weights.shape()), Tensor<T>(layer.bias.shape())};
  conv2d_backward_accumulate(input, layer, upstream, want_input_grad ? &grads.input : nullptr, grads.weights,
                             grads.bias);
  return grads;
}

// The transposed convolution is the adjoint of a correlation whose input is
// this layer's output: each input row produces patch columns that are
// scatter-added into the output.
template <typename T>
Tensor<T> conv_transpose2d_forward(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer) {
  require_rank(input.shape(), 4, "conv_transpose2d", "input");
  require_axis("conv_transpose2d", "input channels (axis 1)", input.dim(1), layer.in_channels);
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const auto [out_h, out_w] = layer.output_extent({height, width});
  const auto [kh, kw] = layer.kernel;
  const auto [sh, sw] = layer.stride;
  const std::size_t outs = layer.out_channels, plane = out_h * out_w, in_plane = height * width;

  Tensor<T> out({batch, outs, out_h, out_w});
  Patches g{outs, kh, kw, sw, out_h, out_w, 0, width};
  const std::size_t k = g.k();
  const std::vector<T> wT = transposed(layer.weights.ptr(), channels, k, k);
  std::vector<T> colT(k * width);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) std::fill_n(&out.at(b, o, 0, 0), plane, layer.bias[o]);
    for (std::size_t ih = 0; ih < height; ++ih) {
      g.row0 = ih * sh;
      std::fill(colT.begin(), colT.end(), T(0));
      kernels::gemm(k, width, channels, wT.data(), channels, &input.at(b, 0, ih, 0), in_plane, colT.data(), width);
      scatter_cols_t(colT.data(), g, &out.at(b, 0, 0, 0));
    }
  }
  return out;
}

template <typename T>
void conv_transpose2d_backward_accumulate(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer,
                                          const Tensor<T>& upstream, Tensor<T>* grad_input,
                                          Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  require_rank(input.shape(), 4, "conv_transpose2d_backward", "input");
  require_axis("conv_transpose2d_backward", "input channels (axis 1)", input.dim(1), layer.in_channels);
  const std::size_t batch = input.dim(0), channels = input.dim(1), height = input.dim(2), width = input.dim(3);
  const auto [out_h, out_w] = layer.output_extent({height, width});
  require_same_shape("conv_transpose2d_backward", upstream.shape(), {batch, layer.out_channels, out_h, out_w});
  const auto [kh, kw] = layer.kernel;
  const auto [sh, sw] = layer.stride;
  const std::size_t outs = layer.out_channels, plane = out_h * out_w, in_plane = height * width;

  Patches g{outs, kh, kw, sw, out_h, out_w, 0, width};
  const std::size_t k = g.k();
  std::vector<T> col(width * k);
  std::vector<T> colT;
  if (grad_input != nullptr) {
    *grad_input = Tensor<T>(input.shape());
    colT.resize(k * width);
  }
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t o = 0; o < outs; ++o) grad_bias[o] += kernels::sum(&upstream.at(b, o, 0, 0), plane);
    for (std::size_t ih = 0; ih < height; ++ih) {
      g.row0 = ih * sh;
      const T* x_rows = &input.at(b, 0, ih, 0);
      gather_cols(&upstream.at(b, 0, 0, 0), g, col.data());
      kernels::gemm(channels, k, width, x_rows, in_plane, col.data(), k, grad_weights.ptr(), k);
      if (grad_input != nullptr) {
        gather_cols_t(&upstream.at(b, 0, 0, 0), g, colT.data());
        kernels::gemm(channels, width, k, layer.weights.ptr(), k, colT.data(), width, &grad_input->at(b, 0, ih, 0),
                      in_plane);
      }
    }
  }
}

template <typename T>
LayerGrads<T> conv_transpose2d_backward(const Tensor<T>& input, const ConvTranspose2dLayer<T>& layer,
                                        const Tensor<T>& upstream, bool want_input_grad) {
  LayerGrads<T> grads{{}, Tensor<T>(layer.weights.shape()), Tensor<T>(layer.bias.shape())};
  conv_transpose2d_backward_accumulate(input, layer, upstream, want_input_grad ? &grads.input : nullptr,
                                       grads.weights, grads.bias);
  return grads;
}

// ---------------------------------------------------------------------------
// Fully connected

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const DenseLayer<T>& layer) {
  require_rank(input.shape(), 2, "dense", "input");
  require_axis("dense", "input features (axis 1)", input.dim(1), layer.in_features);
  const std::size_t batch = input.dim(0), fin = layer.in_features, fout = layer.out_features;
  Tensor<T> out({batch, fout});
  for (std::size_t b = 0; b < batch; ++b) std::copy_n(layer.bias.ptr(), fout, out.ptr() + b * fout);
  const std::vector<T> wT = transposed(layer.weights.ptr(), fout, fin, fin);
  kernels::gemm(batch, fout, fin, input.ptr(), fin, wT.data(), fout, out.ptr(), fout);
  return out;
}

template <typename T>
void dense_backward_accumulate(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                               Tensor<T>* grad_input, Tensor<T>& grad_weights, Tensor<T>& grad_bias) {
  require_rank(input.shape(), 2, "dense_backward", "input");
  require_axis("dense_backward", "input features (axis 1)", input.dim(1), layer.in_features);
  const std::size_t batch = input.dim(0), fin = layer.in_features, fout = layer.out_features;
  require_same_shape("dense_backward", upstream.shape(), {batch, fout});

  const std::vector<T> gT = transposed(upstream.ptr(), batch, fout, fout);
  for (std::size_t j = 0; j < fout; ++j) grad_bias[j] += kernels::sum(gT.data() + j * batch, batch);
  kernels::gemm(fout, fin, batch, gT.data(), batch, input.ptr(), fin, grad_weights.ptr(), fin);
  if (grad_input != nullptr) {
    *grad_input = Tensor<T>(input.shape());
    kernels::gemm(batch, fin, fout, upstream.ptr(), fout, layer.weights.ptr(), fin, grad_input->ptr(), fin);
  }
}

template <typename T>
LayerGrads<T> dense_backward(const Tensor<T>& input, const DenseLayer<T>& layer, const Tensor<T>& upstream,
                             bool want_input_grad) {
  LayerGrads<T> grads{{}, Tensor<T>(layer.weights.shape()), Tensor<T>(layer.bias.shape())};
  dense_backward_accumulate(input, layer, upstream, want_input_grad ? &grads.input : nullptr, grads.weights,
                            grads.bias);
  return grads;
}

// ---------------------------------------------------------------------------
// Activation and loss

template <typename T>
void leaky_relu_inplace(Tensor<T>& x, T slope) noexcept {
  for (T& v : x.data()) v = v >= T(0) ? v : slope * v;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, T slope) {
  Tensor<T> out = input;
  leaky_relu_inplace(out, slope);
  return out;
}

template <typename T>
void leaky_relu_backward_inplace(const Tensor<T>& activation, Tensor<T>& upstream, T slope) {
  if (activation.shape() != upstream.shape()) {
    throw DimensionError("leaky_relu_backward: shapes " + shape_string(activation.shape()) + " and " +
                         shape_string(upstream.shape()) + " differ");
  }
  for (std::size_t i = 0; i < upstream.size(); ++i) {
    if (activation[i] < T(0)) upstream[i] *= slope;
  }
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, const Tensor<T>& upstream, T slope) {
  Tensor<T> grad = upstream;
  leaky_relu_backward_inplace(input, grad, slope);
  return grad;
}

template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("mse: shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
  if (a.empty()) return 0.0;
  return kernels::sum_sq_diff(a.ptr(), b.ptr(), a.size()) / static_cast<double>(a.size());
}

// ---------------------------------------------------------------------------
// Optimizer and initialization

template <typename T>
void AdamState<T>::step(const std::vector<ParamRef<T>>& params) {
  for (const auto& p : params) {
    if (p.value == nullptr || p.grad == nullptr) throw ConfigError("adam: parameter '" + p.name + "' is unbound");
    if (p.grad->shape() != p.value->shape()) {
      throw DimensionError("adam: gradient for '" + p.name + "' has shape " + shape_string(p.grad->shape()) +
                           ", parameter has " + shape_string(p.value->shape()));
    }
    for (T g : p.grad->data()) {
      if (!std::isfinite(g)) throw TrainingError("adam: non-finite gradient in parameter '" + p.name + "'");
    }
  }
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.value->shape());
      v_.emplace_back(p.value->shape());
    }
  } else if (m_.size() != params.size()) {
    throw ConfigError("adam: parameter list changed between steps");
  }

  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    T* w = params[k].value->ptr();
    const T* g = params[k].grad->ptr();
    T* m = m_[k].ptr();
    T* v = v_[k].ptr();
    for (std::size_t i = 0; i < params[k].value->size(); ++i) {
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<T>(mi);
      v[i] = static_cast<T>(vi);
      const double update = config_.lr * (mi / correction1) / (std::sqrt(vi / correction2) + config_.epsilon);
      w[i] = static_cast<T>(w[i] - update);
    }
  }
}

template <typename T>
void init_params(Conv2dLayer<T>& layer, std::uint64_t seed) {
  uniform_fill(layer.weights, std::sqrt(1.0 / static_cast<double>(layer.fan_in())), seed);
  layer.bias.fill(T(0));
}

template <typename T>
void init_params(ConvTranspose2dLayer<T>& layer, std::uint64_t seed) {
  uniform_fill(layer.weights, std::sqrt(1.0 / static_cast<double>(layer.fan_in())), seed);
  layer.bias.fill(T(0));
}

template <typename T>
void init_params(DenseLayer<T>& layer, std::uint64_t seed) {
  uniform_fill(layer.weights, std::sqrt(1.0 / static_cast<double>(layer.fan_in())), seed);
  layer.bias.fill(T(0));
}

#define DCAN_INSTANTIATE_NN(T)                                                                                \
  template struct Conv2dLayer<T>;                                                                            \
  template struct ConvTranspose2dLayer<T>;                                                                   \
  template struct DenseLayer<T>;                                                                             \
  template class AdamState<T>;                                                                               \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Conv2dLayer<T>&);                                \
  template LayerGrads<T> conv2d_backward(const Tensor<T>&, const Conv2dLayer<T>&, const Tensor<T>&, bool);   \
  template void conv2d_backward_accumulate(const Tensor<T>&, const Conv2dLayer<T>&, const Tensor<T>&,        \
                                           Tensor<T>*, Tensor<T>&, Tensor<T>&);                              \
  template Tensor<T> conv_transpose2d_forward(const Tensor<T>&, const ConvTranspose2dLayer<T>&);             \
  template LayerGrads<T> conv_transpose2d_backward(const Tensor<T>&, const ConvTranspose2dLayer<T>&,         \
                                                   const Tensor<T>&, bool);                                  \
  template void conv_transpose2d_backward_accumulate(const Tensor<T>&, const ConvTranspose2dLayer<T>&,       \
                                                     const Tensor<T>&, Tensor<T>*, Tensor<T>&, Tensor<T>&);  \
  template Tensor<T> dense_forward(const Tensor<T>&, const DenseLayer<T>&);                                  \
  template LayerGrads<T> dense_backward(const Tensor<T>&, const DenseLayer<T>&, const Tensor<T>&, bool);     \
  template void dense_backward_accumulate(const Tensor<T>&, const DenseLayer<T>&, const Tensor<T>&,          \
                                          Tensor<T>*, Tensor<T>&, Tensor<T>&);                               \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                        \
  template void leaky_relu_inplace(Tensor<T>&, T) noexcept;                                                  \
  template Tensor<T> leaky_relu_backward(const Tensor<T>&, const Tensor<T>&, T);                             \
  template void leaky_relu_backward_inplace(const Tensor<T>&, Tensor<T>&, T);                                \
  template double mse(const Tensor<T>&, const Tensor<T>&);                                                   \
  template void init_params(Conv2dLayer<T>&, std::uint64_t);                                                 \
  template void init_params(ConvTranspose2dLayer<T>&, std::uint64_t);                                        \
  template void init_params(DenseLayer<T>&, std::uint64_t);

DCAN_INSTANTIATE_NN(float)
DCAN_INSTANTIATE_NN(double)

#undef DCAN_INSTANTIATE_NN

}  // namespace dcan::nn
