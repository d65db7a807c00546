#pragma once

#include <cstdint>
#include <vector>

#include "avaseg/rng.hpp"
#include "avaseg/tensor.hpp"

namespace avaseg::nn {

enum class Mode { train, eval };

// Convolution with zero same-padding. Kernels are (out, in, k, k) with odd k.

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> kernels;
  Tensor<T> bias;
};

/// Gradients of conv2d given the upstream gradient. The input gradient is
/// skipped (left empty) when need_input is false.
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& grad_output,
                               bool need_input = true);

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;
  std::vector<T> inv_std;
};

/// Per-channel normalization over (batch, height, width). Train mode uses
/// batch statistics and updates the running statistics
/// (running = momentum * running + (1 - momentum) * batch); eval mode uses
/// the running statistics. `cache` may be null.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& offset, Tensor<T>& running_mean,
                       Tensor<T>& running_var, Mode mode, BatchNormCache<T>* cache);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> gain;
  Tensor<T> offset;
};

/// Backward of train-mode batch_norm2d.
template <typename T>
BatchNormGrads<T> batch_norm2d_backward(const Tensor<T>& grad_output, const Tensor<T>& gain, const BatchNormCache<T>& cache);

/// 2x2 max pool, stride 2. `argmax` receives the flat input index of each
/// output (first occurrence on ties).
template <typename T>
Tensor<T> max_pool_2x2(const Tensor<T>& input, std::vector<std::uint32_t>* argmax);

template <typename T>
Tensor<T> max_pool_2x2_backward(const Tensor<T>& grad_output, const std::vector<std::uint32_t>& argmax,
                                const std::vector<std::size_t>& input_shape);

/// 2x bilinear upsampling, half-pixel (align_corners = false) convention.
template <typename T>
Tensor<T> upsample_bilinear_2x(const Tensor<T>& input);

/// Adjoint of upsample_bilinear_2x.
template <typename T>
Tensor<T> upsample_bilinear_2x_backward(const Tensor<T>& grad_output);

/// Train mode zeroes each element with probability `rate` and scales the
/// survivors by 1 / (1 - rate); `mask` receives the per-element multiplier.
template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Mode mode, Rng& rng, Tensor<T>* mask);

enum class Activation { relu, sigmoid };

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind);

/// Gradient w.r.t. the activation input, from the forward output.
template <typename T>
Tensor<T> activation_backward(const Tensor<T>& output, const Tensor<T>& grad_output, Activation kind);

/// Stacks tensors along the channel axis (dim 1).
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// Splits a channel-axis gradient back into the two concatenated parts.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& grad, std::size_t first_channels);

struct LossConfig {
  double avalanche_weight = 2.0;
  double background_weight = 1.0;

  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-7;

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> grad;
};

/// Class-weighted binary cross-entropy averaged over all elements.
template <typename T>
LossResult<T> weighted_bce(const Tensor<T>& pred, const Tensor<T>& labels, const LossConfig& cfg);

}  // namespace avaseg::nn
