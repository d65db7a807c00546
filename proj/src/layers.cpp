#include "avaseg/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <limits>

#include "avaseg/error.hpp"

namespace avaseg::nn {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMatrix = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMapMatrix = Eigen::Map<const RowMatrix<T>>;

template <typename T>
void require_rank4(const Tensor<T>& t, const char* what) {
  if (t.rank() != 4) throw ShapeError(std::string(what) + " expects a (N, C, H, W) tensor, got " + t.shape_string());
}

// Unfolds one sample (C, H, W) into (C*k*k, H*W) with zero padding.
template <typename T>
void im2col(const T* x, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, T* col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* plane = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* dst = col + ((c * k + ky) * k + kx) * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad, dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::ptrdiff_t r = 0; r < H; ++r, dst += W) {
          const std::ptrdiff_t sr = r + dy;
          if (sr < 0 || sr >= H) {
            std::fill(dst, dst + W, T(0));
            continue;
          }
          const T* src = plane + sr * W;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx), hi = std::min<std::ptrdiff_t>(W, W - dx);
          std::fill(dst, dst + lo, T(0));
          std::copy(src + lo + dx, src + hi + dx, dst + lo);
          std::fill(dst + hi, dst + W, T(0));
        }
      }
    }
  }
}

// Adjoint of im2col: accumulates (C*k*k, H*W) back into (C, H, W).
template <typename T>
void col2im(const T* col, std::size_t channels, std::size_t h, std::size_t w, std::size_t k, T* x) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h), W = static_cast<std::ptrdiff_t>(w);
  for (std::size_t c = 0; c < channels; ++c) {
    T* plane = x + c * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* src = col + ((c * k + ky) * k + kx) * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad, dx = static_cast<std::ptrdiff_t>(kx) - pad;
        for (std::ptrdiff_t r = 0; r < H; ++r, src += W) {
          const std::ptrdiff_t sr = r + dy;
          if (sr < 0 || sr >= H) continue;
          T* dst = plane + sr * W;
          const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -dx), hi = std::min<std::ptrdiff_t>(W, W - dx);
          for (std::ptrdiff_t q = lo; q < hi; ++q) dst[q + dx] += src[q];
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& input, const Tensor<T>& kernels) {
  require_rank4(input, "conv2d");
  if (kernels.rank() != 4 || kernels.dim(2) != kernels.dim(3) || kernels.dim(2) % 2 == 0)
    throw ShapeError("conv2d kernels must be (out, in, k, k) with odd k, got " + kernels.shape_string());
  if (kernels.dim(1) != input.dim(1))
    throw ShapeError("conv2d channel mismatch: input " + input.shape_string() + ", kernels " + kernels.shape_string());
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias) {
  check_conv_shapes(input, kernels);
  const std::size_t n = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t co = kernels.dim(0), k = kernels.dim(2), kk = ci * k * k, hw = h * w;
  if (bias.size() != co) throw ShapeError("conv2d bias length does not match output channels");
  Tensor<T> out({n, co, h, w});
  std::vector<T> col(k == 1 ? 0 : kk * hw);
  ConstMapMatrix<T> wm(kernels.ptr(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(kk));
  for (std::size_t s = 0; s < n; ++s) {
    const T* x = input.ptr() + s * ci * hw;
    const T* colp = x;
    if (k != 1) {
      im2col(x, ci, h, w, k, col.data());
      colp = col.data();
    }
    ConstMapMatrix<T> cm(colp, static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
    MapMatrix<T> om(out.ptr() + s * co * hw, static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(hw));
    om.noalias() = wm * cm;
    for (std::size_t o = 0; o < co; ++o) om.row(static_cast<Eigen::Index>(o)).array() += bias[o];
  }
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& grad_output,
                               bool need_input) {
  check_conv_shapes(input, kernels);
  const std::size_t n = input.dim(0), ci = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t co = kernels.dim(0), k = kernels.dim(2), kk = ci * k * k, hw = h * w;
  if (grad_output.shape() != std::vector<std::size_t>{n, co, h, w})
    throw ShapeError("conv2d_backward gradient shape " + grad_output.shape_string() + " does not match output");
  Conv2dGrads<T> g{need_input ? Tensor<T>(input.shape()) : Tensor<T>(), Tensor<T>(kernels.shape()), Tensor<T>({co})};
  std::vector<T> col(k == 1 ? 0 : kk * hw), dcol(need_input && k != 1 ? kk * hw : 0);
  ConstMapMatrix<T> wm(kernels.ptr(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(kk));
  MapMatrix<T> dwm(g.kernels.ptr(), static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(kk));
  for (std::size_t s = 0; s < n; ++s) {
    const T* x = input.ptr() + s * ci * hw;
    const T* colp = x;
    if (k != 1) {
      im2col(x, ci, h, w, k, col.data());
      colp = col.data();
    }
    ConstMapMatrix<T> cm(colp, static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
    ConstMapMatrix<T> dym(grad_output.ptr() + s * co * hw, static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(hw));
    dwm.noalias() += dym * cm.transpose();
    for (std::size_t o = 0; o < co; ++o) {
      const T* dy = grad_output.ptr() + (s * co + o) * hw;
      T acc = 0;
      for (std::size_t i = 0; i < hw; ++i) acc += dy[i];
      g.bias[o] += acc;
    }
    if (need_input) {
      if (k == 1) {
        MapMatrix<T> dxm(g.input.ptr() + s * ci * hw, static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
        dxm.noalias() = wm.transpose() * dym;
      } else {
        MapMatrix<T> dcm(dcol.data(), static_cast<Eigen::Index>(kk), static_cast<Eigen::Index>(hw));
        dcm.noalias() = wm.transpose() * dym;
        col2im(dcol.data(), ci, h, w, k, g.input.ptr() + s * ci * hw);
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& input, const Tensor<T>& gain, const Tensor<T>& offset, Tensor<T>& running_mean,
                       Tensor<T>& running_var, Mode mode, BatchNormCache<T>* cache) {
  require_rank4(input, "batch_norm2d");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  if (gain.size() != c || offset.size() != c || running_mean.size() != c || running_var.size() != c)
    throw ShapeError("batch_norm2d parameter length does not match channels of " + input.shape_string());
  const std::size_t m = n * hw;
  if (mode == Mode::train && m < 2) throw ShapeError("batch_norm2d in train mode needs more than one value per channel");
  Tensor<T> out(input.shape());
  if (cache) {
    cache->normalized = Tensor<T>(input.shape());
    cache->inv_std.assign(c, T(0));
  }
  for (std::size_t ch = 0; ch < c; ++ch) {
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const T* p = input.ptr() + (s * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sum += p[i];
      }
      mean = sum / static_cast<double>(m);
      double sq = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        const T* p = input.ptr() + (s * c + ch) * hw;
        for (std::size_t i = 0; i < hw; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / static_cast<double>(m);
      const double unbiased = sq / static_cast<double>(m - 1);
      running_mean[ch] = static_cast<T>(kBatchNormMomentum * running_mean[ch] + (1.0 - kBatchNormMomentum) * mean);
      running_var[ch] = static_cast<T>(kBatchNormMomentum * running_var[ch] + (1.0 - kBatchNormMomentum) * unbiased);
    } else {
      mean = running_mean[ch];
      var = running_var[ch];
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEpsilon));
    const T mu = static_cast<T>(mean);
    if (cache) cache->inv_std[ch] = inv_std;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t base = (s * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T xhat = (input[base + i] - mu) * inv_std;
        if (cache) cache->normalized[base + i] = xhat;
        out[base + i] = gain[ch] * xhat + offset[ch];
      }
    }
  }
  return out;
}

template <typename T>
BatchNormGrads<T> batch_norm2d_backward(const Tensor<T>& grad_output, const Tensor<T>& gain, const BatchNormCache<T>& cache) {
  require_rank4(grad_output, "batch_norm2d_backward");
  const std::size_t n = grad_output.dim(0), c = grad_output.dim(1), hw = grad_output.dim(2) * grad_output.dim(3);
  const double m = static_cast<double>(n * hw);
  BatchNormGrads<T> g{Tensor<T>(grad_output.shape()), Tensor<T>({c}), Tensor<T>({c})};
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t base = (s * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        sum_dy += grad_output[base + i];
        sum_dy_xhat += static_cast<double>(grad_output[base + i]) * cache.normalized[base + i];
      }
    }
    g.offset[ch] = static_cast<T>(sum_dy);
    g.gain[ch] = static_cast<T>(sum_dy_xhat);
    const double scale = static_cast<double>(gain[ch]) * cache.inv_std[ch];
    const double mean_dy = sum_dy / m, mean_dy_xhat = sum_dy_xhat / m;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t base = (s * c + ch) * hw;
      for (std::size_t i = 0; i < hw; ++i)
        g.input[base + i] =
            static_cast<T>(scale * (grad_output[base + i] - mean_dy - cache.normalized[base + i] * mean_dy_xhat));
    }
  }
  return g;
}

template <typename T>
Tensor<T> max_pool_2x2(const Tensor<T>& input, std::vector<std::uint32_t>* argmax) {
  require_rank4(input, "max_pool_2x2");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h % 2 || w % 2) throw ShapeError("max_pool_2x2 needs even height and width, got " + input.shape_string());
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor<T> out({n, c, oh, ow});
  if (argmax) argmax->assign(out.size(), 0);
  std::size_t o = 0;
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const std::size_t base = plane * h * w;
    for (std::size_t r = 0; r < oh; ++r) {
      for (std::size_t q = 0; q < ow; ++q, ++o) {
        std::size_t best = base + 2 * r * w + 2 * q;
        for (std::size_t idx : {base + 2 * r * w + 2 * q + 1, base + (2 * r + 1) * w + 2 * q, base + (2 * r + 1) * w + 2 * q + 1})
          if (input[idx] > input[best]) best = idx;
        out[o] = input[best];
        if (argmax) (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> max_pool_2x2_backward(const Tensor<T>& grad_output, const std::vector<std::uint32_t>& argmax,
                                const std::vector<std::size_t>& input_shape) {
  if (argmax.size() != grad_output.size()) throw ShapeError("max_pool_2x2_backward argmax size mismatch");
  Tensor<T> g(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += grad_output[i];
  return g;
}

namespace {

// Source taps of output index o for 2x half-pixel upsampling of a length-n axis.
struct Taps {
  std::size_t lo, hi;
  double w_hi;
};

inline Taps upsample_taps(std::size_t o, std::size_t n) {
  double src = (static_cast<double>(o) + 0.5) / 2.0 - 0.5;
  if (src < 0) src = 0;
  const auto lo = static_cast<std::size_t>(src);
  const std::size_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, src - static_cast<double>(lo)};
}

}  // namespace

template <typename T>
Tensor<T> upsample_bilinear_2x(const Tensor<T>& input) {
  require_rank4(input, "upsample_bilinear_2x");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t oh = 2 * h, ow = 2 * w;
  Tensor<T> out({n, c, oh, ow});
  std::vector<Taps> rows(oh), cols(ow);
  for (std::size_t r = 0; r < oh; ++r) rows[r] = upsample_taps(r, h);
  for (std::size_t q = 0; q < ow; ++q) cols[q] = upsample_taps(q, w);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = input.ptr() + plane * h * w;
    T* dst = out.ptr() + plane * oh * ow;
    for (std::size_t r = 0; r < oh; ++r) {
      const auto& tr = rows[r];
      const T wr1 = static_cast<T>(tr.w_hi), wr0 = static_cast<T>(1.0 - tr.w_hi);
      for (std::size_t q = 0; q < ow; ++q) {
        const auto& tc = cols[q];
        const T wc1 = static_cast<T>(tc.w_hi), wc0 = static_cast<T>(1.0 - tc.w_hi);
        dst[r * ow + q] = wr0 * (wc0 * src[tr.lo * w + tc.lo] + wc1 * src[tr.lo * w + tc.hi]) +
                          wr1 * (wc0 * src[tr.hi * w + tc.lo] + wc1 * src[tr.hi * w + tc.hi]);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> upsample_bilinear_2x_backward(const Tensor<T>& grad_output) {
  require_rank4(grad_output, "upsample_bilinear_2x_backward");
  const std::size_t n = grad_output.dim(0), c = grad_output.dim(1), oh = grad_output.dim(2), ow = grad_output.dim(3);
  if (oh % 2 || ow % 2) throw ShapeError("upsample gradient must have even spatial size");
  const std::size_t h = oh / 2, w = ow / 2;
  Tensor<T> g({n, c, h, w});
  std::vector<Taps> rows(oh), cols(ow);
  for (std::size_t r = 0; r < oh; ++r) rows[r] = upsample_taps(r, h);
  for (std::size_t q = 0; q < ow; ++q) cols[q] = upsample_taps(q, w);
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const T* src = grad_output.ptr() + plane * oh * ow;
    T* dst = g.ptr() + plane * h * w;
    for (std::size_t r = 0; r < oh; ++r) {
      const auto& tr = rows[r];
      const T wr1 = static_cast<T>(tr.w_hi), wr0 = static_cast<T>(1.0 - tr.w_hi);
      for (std::size_t q = 0; q < ow; ++q) {
        const auto& tc = cols[q];
        const T wc1 = static_cast<T>(tc.w_hi), wc0 = static_cast<T>(1.0 - tc.w_hi);
        const T v = src[r * ow + q];
        dst[tr.lo * w + tc.lo] += wr0 * wc0 * v;
        dst[tr.lo * w + tc.hi] += wr0 * wc1 * v;
        dst[tr.hi * w + tc.lo] += wr1 * wc0 * v;
        dst[tr.hi * w + tc.hi] += wr1 * wc1 * v;
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Mode mode, Rng& rng, Tensor<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (mode == Mode::eval || rate == 0.0) {
    if (mask) *mask = Tensor<T>(input.shape(), T(1));
    return input;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> out(input.shape());
  Tensor<T> m(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) {
    m[i] = rng.uniform() < rate ? T(0) : scale;
    out[i] = input[i] * m[i];
  }
  if (mask) *mask = std::move(m);
  return out;
}

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind) {
  Tensor<T> out(input.shape());
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T(0) ? input[i] : T(0);
  } else {
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = T(1) / (T(1) + std::exp(-input[i]));
  }
  return out;
}

template <typename T>
Tensor<T> activation_backward(const Tensor<T>& output, const Tensor<T>& grad_output, Activation kind) {
  if (!output.same_shape(grad_output)) throw ShapeError("activation_backward shape mismatch");
  Tensor<T> g(output.shape());
  if (kind == Activation::relu) {
    for (std::size_t i = 0; i < output.size(); ++i) g[i] = output[i] > T(0) ? grad_output[i] : T(0);
  } else {
    for (std::size_t i = 0; i < output.size(); ++i) g[i] = grad_output[i] * output[i] * (T(1) - output[i]);
  }
  return g;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank4(a, "concat_channels");
  require_rank4(b, "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3))
    throw ShapeError("concat_channels shape mismatch: " + a.shape_string() + " and " + b.shape_string());
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  Tensor<T> out({n, ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(a.ptr() + s * ca * hw, ca * hw, out.ptr() + s * (ca + cb) * hw);
    std::copy_n(b.ptr() + s * cb * hw, cb * hw, out.ptr() + s * (ca + cb) * hw + ca * hw);
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& grad, std::size_t first_channels) {
  require_rank4(grad, "split_channels");
  const std::size_t n = grad.dim(0), c = grad.dim(1), hw = grad.dim(2) * grad.dim(3);
  if (first_channels > c) throw ShapeError("split_channels beyond channel count");
  Tensor<T> a({n, first_channels, grad.dim(2), grad.dim(3)}), b({n, c - first_channels, grad.dim(2), grad.dim(3)});
  for (std::size_t s = 0; s < n; ++s) {
    std::copy_n(grad.ptr() + s * c * hw, first_channels * hw, a.ptr() + s * first_channels * hw);
    std::copy_n(grad.ptr() + s * c * hw + first_channels * hw, (c - first_channels) * hw, b.ptr() + s * (c - first_channels) * hw);
  }
  return {std::move(a), std::move(b)};
}

void LossConfig::validate() const {
  if (!(avalanche_weight > 0 && background_weight > 0)) throw ConfigError("loss weights must be positive");
}

template <typename T>
LossResult<T> weighted_bce(const Tensor<T>& pred, const Tensor<T>& labels, const LossConfig& cfg) {
  cfg.validate();
  if (!pred.same_shape(labels))
    throw ShapeError("weighted_bce shape mismatch: " + pred.shape_string() + " vs " + labels.shape_string());
  LossResult<T> r{0.0, Tensor<T>(pred.shape())};
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double raw = pred[i];
    const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = labels[i];
    total -= cfg.avalanche_weight * y * std::log(p) + cfg.background_weight * (1.0 - y) * std::log(1.0 - p);
    // Zero gradient where the clamp is active.
    const bool clamped = raw < kProbabilityClamp || raw > 1.0 - kProbabilityClamp;
    r.grad[i] = clamped ? T(0)
                        : static_cast<T>(-(cfg.avalanche_weight * y / p - cfg.background_weight * (1.0 - y) / (1.0 - p)) * inv_n);
  }
  r.loss = total * inv_n;
  return r;
}

#define AVASEG_INSTANTIATE_LAYERS(T)                                                                                  \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                                   \
  template Conv2dGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool);               \
  template Tensor<T> batch_norm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>&, Tensor<T>&, Mode, \
                                  BatchNormCache<T>*);                                                               \
  template BatchNormGrads<T> batch_norm2d_backward(const Tensor<T>&, const Tensor<T>&, const BatchNormCache<T>&);    \
  template Tensor<T> max_pool_2x2(const Tensor<T>&, std::vector<std::uint32_t>*);                                    \
  template Tensor<T> max_pool_2x2_backward(const Tensor<T>&, const std::vector<std::uint32_t>&,                      \
                                           const std::vector<std::size_t>&);                                         \
  template Tensor<T> upsample_bilinear_2x(const Tensor<T>&);                                                         \
  template Tensor<T> upsample_bilinear_2x_backward(const Tensor<T>&);                                                \
  template Tensor<T> dropout(const Tensor<T>&, double, Mode, Rng&, Tensor<T>*);                                      \
  template Tensor<T> activation(const Tensor<T>&, Activation);                                                       \
  template Tensor<T> activation_backward(const Tensor<T>&, const Tensor<T>&, Activation);                            \
  template Tensor<T> concat_channels(const Tensor<T>&, const Tensor<T>&);                                            \
  template std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>&, std::size_t);                            \
  template LossResult<T> weighted_bce(const Tensor<T>&, const Tensor<T>&, const LossConfig&);

AVASEG_INSTANTIATE_LAYERS(float)
AVASEG_INSTANTIATE_LAYERS(double)

}  // namespace avaseg::nn
