#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "avaseg/layers.hpp"
#include "avaseg/sarprep.hpp"

namespace avaseg::nn {

/// How the PAR channel reaches the network.
enum class ParMode { none, concat, attention };

std::string to_string(ParMode m);
ParMode par_mode_from_string(const std::string& s);

struct ModelConfig {
  std::size_t base_filters = 8;
  std::size_t depth = 4;
  double dropout_rate = 0.4;
  /// SAR channels fed to the U-Net (subset of vv, vh, vvvh, in stack order).
  std::vector<sarprep::Channel> sar_channels{sarprep::Channel::vv, sarprep::Channel::vh, sarprep::Channel::vvvh};
  bool use_slope = true;
  ParMode par_mode = ParMode::attention;
  std::size_t attention_filters = 8;

  /// Channels entering the U-Net.
  std::size_t in_channels() const;
  bool use_attention() const { return par_mode == ParMode::attention; }
  /// Innermost width base_filters * 2^(depth - 1).
  std::size_t innermost_filters() const { return base_filters << (depth - 1); }
  /// Spatial sizes must be multiples of this.
  std::size_t size_multiple() const { return std::size_t{1} << (depth - 1); }
  void validate() const;

  /// Desk-scale default (8 filters, depth 4, 8 attention filters).
  static ModelConfig desk();
  /// Full scale (32 filters, depth 5, 32 attention filters).
  static ModelConfig paper();

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
  bool operator==(const ModelConfig&) const = default;
};

/// Topological channels are divided by this before entering the network.
inline constexpr double kTopoScaleDeg = 90.0;

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;
};

/// U-Net segmentation network with an optional PAR attention branch.
/// Input is the 5-channel feature stack (N, 5, H, W); channels disabled by
/// the config are never read.
template <typename T>
class Model {
 public:
  static Model build(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  Parameter<T>& parameter(const std::string& name);

  /// Number of trainable scalars.
  std::size_t trainable_count() const;

  /// Soft mask (N, 1, H, W) in (0, 1). Train mode caches activations for
  /// backward() and needs a dropout RNG.
  Tensor<T> forward(const Tensor<T>& stack, Mode mode, Rng* rng = nullptr);

  /// Accumulates parameter gradients from d(loss)/d(output) of the last
  /// train-mode forward.
  void backward(const Tensor<T>& grad_output);
  void zero_grad();

  /// Attention mask (N, 1, H, W) from a raw PAR tensor in degrees.
  Tensor<T> attention_mask(const Tensor<T>& par_deg) const;

  /// Receptive field (pixels) of the innermost encoder block.
  std::size_t innermost_receptive_field() const;

  template <typename U>
  Model<U> converted() const;

 private:
  template <typename>
  friend class Model;

  struct ConvUnit {
    std::size_t kernel, bias, gain, offset, mean, var;
  };
  struct UnitCache {
    Tensor<T> input;
    BatchNormCache<T> bn;
    Tensor<T> output;
  };
  struct EncoderBlock {
    ConvUnit first, second;
    bool dropout;
  };
  struct DecoderBlock {
    ConvUnit first, second;
  };
  struct EncoderCache {
    UnitCache first, second;
    Tensor<T> drop_mask;
    std::vector<std::uint32_t> argmax;
    std::vector<std::size_t> pre_pool_shape;
  };
  struct DecoderCache {
    std::size_t up_channels = 0;
    UnitCache first, second;
    Tensor<T> drop_mask;
  };
  struct PlainConv {
    std::size_t kernel, bias;
  };
  struct ForwardCache {
    Tensor<T> stack;
    Tensor<T> par_input;
    std::vector<Tensor<T>> attention_inputs;  // input of each attention conv
    std::vector<Tensor<T>> attention_outputs;  // activation output of each attention conv
    std::vector<EncoderCache> encoder;
    std::vector<DecoderCache> decoder;
    Tensor<T> head_input;
    Tensor<T> output;
    bool valid = false;
  };

  std::size_t add(const std::string& name, std::vector<std::size_t> shape, bool trainable);
  ConvUnit add_unit(const std::string& prefix, std::size_t in, std::size_t out);
  PlainConv add_conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t k);

  Tensor<T> unit_forward(const ConvUnit& u, const Tensor<T>& x, Mode mode, UnitCache* cache);
  Tensor<T> unit_backward(const ConvUnit& u, const UnitCache& cache, const Tensor<T>& grad);
  Tensor<T> attention_forward(const Tensor<T>& par_scaled, ForwardCache* cache) const;
  Tensor<T> unet_input(const Tensor<T>& stack, const Tensor<T>* mask) const;

  ModelConfig cfg_;
  std::vector<Parameter<T>> params_;
  std::vector<EncoderBlock> encoder_;
  std::vector<DecoderBlock> decoder_;  // decoder_[i] produces encoder level i
  PlainConv head_{};
  std::vector<PlainConv> attention_;
  ForwardCache cache_;
};

// Weight file: "AVW1", u32 tensor count, per tensor (u16 name length, name,
// u8 rank, rank x u32 dims, f32 data), then u32 length + model config JSON.
std::vector<std::uint8_t> encode_weights(const Model<float>& model);
Model<float> decode_weights(std::span<const std::uint8_t> bytes);
void save_weights(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_weights(const std::filesystem::path& path);

/// Adam with bias correction.
struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::uint64_t step = 0;
};

/// Updates trainable parameters from their accumulated gradients.
void adam_step(std::vector<Parameter<float>>& params, AdamState& state, const AdamHyper& hyper);
inline void adam_step(Model<float>& model, AdamState& state, const AdamHyper& hyper) {
  adam_step(model.parameters(), state, hyper);
}

}  // namespace avaseg::nn
