#include "avaseg/model.hpp"

#include <cmath>
#include <cstring>

#include <json.hpp>

#include "avaseg/bytes.hpp"
#include "avaseg/error.hpp"

namespace avaseg::nn {

using json = nlohmann::json;
using sarprep::Channel;

std::string to_string(ParMode m) {
  switch (m) {
    case ParMode::none: return "none";
    case ParMode::concat: return "concat";
    case ParMode::attention: return "attention";
  }
  return "none";
}

ParMode par_mode_from_string(const std::string& s) {
  if (s == "none") return ParMode::none;
  if (s == "concat") return ParMode::concat;
  if (s == "attention") return ParMode::attention;
  throw ConfigError("unknown par_mode '" + s + "' (expected none, concat or attention)");
}

std::size_t ModelConfig::in_channels() const {
  return sar_channels.size() + (use_slope ? 1 : 0) + (par_mode == ParMode::concat ? 1 : 0);
}

void ModelConfig::validate() const {
  if (base_filters == 0) throw ConfigError("base_filters must be positive");
  if (depth < 1 || depth > 8) throw ConfigError("depth must lie in [1, 8]");
  if (!(dropout_rate >= 0 && dropout_rate < 1)) throw ConfigError("dropout_rate must lie in [0, 1)");
  if (use_attention() && attention_filters == 0) throw ConfigError("attention_filters must be positive");
  if (use_attention() && sar_channels.empty()) throw ConfigError("attention needs at least one SAR channel to mask");
  for (std::size_t i = 0; i < sar_channels.size(); ++i) {
    if (sar_channels[i] != Channel::vv && sar_channels[i] != Channel::vh && sar_channels[i] != Channel::vvvh)
      throw ConfigError("sar_channels may only contain vv, vh and vvvh");
    if (i > 0 && sar_channels[i] <= sar_channels[i - 1]) throw ConfigError("sar_channels must be unique and in stack order");
  }
  if (in_channels() == 0) throw ConfigError("model has no input channels");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::paper() {
  ModelConfig c;
  c.base_filters = 32;
  c.depth = 5;
  c.attention_filters = 32;
  return c;
}

std::string ModelConfig::to_json() const {
  json channels = json::array();
  for (auto c : sar_channels) channels.push_back(sarprep::kChannelNames[static_cast<std::size_t>(c)]);
  json j = {{"base_filters", base_filters},   {"depth", depth},         {"dropout_rate", dropout_rate},
            {"sar_channels", channels},       {"use_slope", use_slope}, {"par_mode", to_string(par_mode)},
            {"attention_filters", attention_filters}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    for (const auto& [key, value] : j.items()) {
      if (key == "base_filters") c.base_filters = value.get<std::size_t>();
      else if (key == "depth") c.depth = value.get<std::size_t>();
      else if (key == "dropout_rate") c.dropout_rate = value.get<double>();
      else if (key == "use_slope") c.use_slope = value.get<bool>();
      else if (key == "par_mode") c.par_mode = par_mode_from_string(value.get<std::string>());
      else if (key == "attention_filters") c.attention_filters = value.get<std::size_t>();
      else if (key == "sar_channels") {
        c.sar_channels.clear();
        for (const auto& n : value) c.sar_channels.push_back(sarprep::channel_from_name(n.get<std::string>()));
      } else {
        throw ConfigError("unknown model config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
std::size_t Model<T>::add(const std::string& name, std::vector<std::size_t> shape, bool trainable) {
  Parameter<T> p{name, Tensor<T>(shape), trainable ? Tensor<T>(shape) : Tensor<T>(), trainable};
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

template <typename T>
typename Model<T>::ConvUnit Model<T>::add_unit(const std::string& prefix, std::size_t in, std::size_t out) {
  ConvUnit u{};
  u.kernel = add(prefix + ".conv.weight", {out, in, 3, 3}, true);
  u.bias = add(prefix + ".conv.bias", {out}, true);
  u.gain = add(prefix + ".bn.gain", {out}, true);
  u.offset = add(prefix + ".bn.offset", {out}, true);
  u.mean = add(prefix + ".bn.running_mean", {out}, false);
  u.var = add(prefix + ".bn.running_var", {out}, false);
  params_[u.gain].value.fill(T(1));
  params_[u.var].value.fill(T(1));
  return u;
}

template <typename T>
typename Model<T>::PlainConv Model<T>::add_conv(const std::string& prefix, std::size_t in, std::size_t out, std::size_t k) {
  PlainConv c{};
  c.kernel = add(prefix + ".weight", {out, in, k, k}, true);
  c.bias = add(prefix + ".bias", {out}, true);
  return c;
}

template <typename T>
Model<T> Model<T>::build(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg_ = cfg;
  if (cfg.use_attention()) {
    std::size_t in = 1;
    for (int i = 0; i < 3; ++i) {
      m.attention_.push_back(m.add_conv("attention.conv" + std::to_string(i), in, cfg.attention_filters, 3));
      in = cfg.attention_filters;
    }
    m.attention_.push_back(m.add_conv("attention.out", in, 1, 1));
  }
  std::size_t in = cfg.in_channels();
  for (std::size_t level = 0; level < cfg.depth; ++level) {
    const std::size_t n = cfg.base_filters << level;
    const std::string prefix = "enc" + std::to_string(level);
    EncoderBlock b{m.add_unit(prefix + ".unit0", in, n), m.add_unit(prefix + ".unit1", n, n), level + 1 < cfg.depth};
    m.encoder_.push_back(b);
    in = n;
  }
  m.decoder_.resize(cfg.depth > 0 ? cfg.depth - 1 : 0);
  for (std::size_t level = cfg.depth - 1; level-- > 0;) {
    const std::size_t n = cfg.base_filters << level;
    const std::string prefix = "dec" + std::to_string(level);
    m.decoder_[level] = DecoderBlock{m.add_unit(prefix + ".unit0", in + n, n), m.add_unit(prefix + ".unit1", n, n)};
    in = n;
  }
  m.head_ = m.add_conv("head", in, 1, 1);

  // He-normal kernels; biases and BN offsets start at zero.
  Rng rng(seed);
  for (auto& p : m.params_) {
    if (p.value.rank() != 4) continue;
    const double fan_in = static_cast<double>(p.value.dim(1) * p.value.dim(2) * p.value.dim(3));
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : p.value.data()) v = static_cast<T>(rng.normal(0.0, std));
  }
  return m;
}

template <typename T>
Parameter<T>& Model<T>::parameter(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw ConfigError("no parameter named '" + name + "'");
}

template <typename T>
std::size_t Model<T>::trainable_count() const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p.trainable) n += p.value.size();
  return n;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto& p : params_)
    if (p.trainable) p.grad.fill(T(0));
}

template <typename T>
std::size_t Model<T>::innermost_receptive_field() const {
  std::size_t rf = 1, jump = 1;
  for (std::size_t level = 0; level < cfg_.depth; ++level) {
    rf += 2 * 2 * jump;  // two 3x3 convolutions
    if (level + 1 < cfg_.depth) {
      rf += jump;  // 2x2 pool
      jump *= 2;
    }
  }
  return rf;
}

template <typename T>
Tensor<T> Model<T>::unit_forward(const ConvUnit& u, const Tensor<T>& x, Mode mode, UnitCache* cache) {
  Tensor<T> y = conv2d(x, params_[u.kernel].value, params_[u.bias].value);
  y = batch_norm2d(y, params_[u.gain].value, params_[u.offset].value, params_[u.mean].value, params_[u.var].value, mode,
                   cache ? &cache->bn : nullptr);
  y = activation(y, Activation::relu);
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

template <typename T>
Tensor<T> Model<T>::unit_backward(const ConvUnit& u, const UnitCache& cache, const Tensor<T>& grad) {
  Tensor<T> g = activation_backward(cache.output, grad, Activation::relu);
  auto bn = batch_norm2d_backward(g, params_[u.gain].value, cache.bn);
  auto add_to = [](Tensor<T>& acc, const Tensor<T>& d) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  };
  add_to(params_[u.gain].grad, bn.gain);
  add_to(params_[u.offset].grad, bn.offset);
  auto conv = conv2d_backward(cache.input, params_[u.kernel].value, bn.input);
  add_to(params_[u.kernel].grad, conv.kernels);
  add_to(params_[u.bias].grad, conv.bias);
  return std::move(conv.input);
}

template <typename T>
Tensor<T> Model<T>::attention_forward(const Tensor<T>& par_scaled, ForwardCache* cache) const {
  Tensor<T> x = par_scaled;
  for (std::size_t i = 0; i < attention_.size(); ++i) {
    const bool last = i + 1 == attention_.size();
    if (cache) cache->attention_inputs.push_back(x);
    x = conv2d(x, params_[attention_[i].kernel].value, params_[attention_[i].bias].value);
    x = activation(x, last ? Activation::sigmoid : Activation::relu);
    if (cache) cache->attention_outputs.push_back(x);
  }
  return x;
}

namespace {

template <typename T>
void check_stack(const Tensor<T>& stack, std::size_t multiple) {
  if (stack.rank() != 4 || stack.dim(1) != sarprep::kChannelCount)
    throw ShapeError("model input must be (N, 5, H, W), got " + stack.shape_string());
  if (stack.dim(2) % multiple != 0 || stack.dim(3) % multiple != 0)
    throw ShapeError("model input spatial size " + std::to_string(stack.dim(2)) + "x" + std::to_string(stack.dim(3)) +
                     " must be divisible by " + std::to_string(multiple));
}

template <typename T>
Tensor<T> stack_channel(const Tensor<T>& stack, Channel ch, T scale) {
  const std::size_t n = stack.dim(0), h = stack.dim(2), w = stack.dim(3);
  Tensor<T> out({n, 1, h, w});
  for (std::size_t s = 0; s < n; ++s) {
    const T* src = stack.ptr() + (s * sarprep::kChannelCount + static_cast<std::size_t>(ch)) * h * w;
    T* dst = out.ptr() + s * h * w;
    for (std::size_t i = 0; i < h * w; ++i) dst[i] = src[i] * scale;
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> Model<T>::unet_input(const Tensor<T>& stack, const Tensor<T>* mask) const {
  const std::size_t n = stack.dim(0), h = stack.dim(2), w = stack.dim(3), hw = h * w;
  const std::size_t cin = cfg_.in_channels();
  Tensor<T> x({n, cin, h, w});
  const T topo = static_cast<T>(1.0 / kTopoScaleDeg);
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t c = 0;
    auto src = [&](Channel ch) { return stack.ptr() + (s * sarprep::kChannelCount + static_cast<std::size_t>(ch)) * hw; };
    for (Channel ch : cfg_.sar_channels) {
      const T* p = src(ch);
      T* d = x.ptr() + (s * cin + c++) * hw;
      if (mask) {
        const T* m = mask->ptr() + s * hw;
        for (std::size_t i = 0; i < hw; ++i) d[i] = p[i] * m[i];
      } else {
        std::copy_n(p, hw, d);
      }
    }
    if (cfg_.use_slope) {
      const T* p = src(Channel::slope);
      T* d = x.ptr() + (s * cin + c++) * hw;
      for (std::size_t i = 0; i < hw; ++i) d[i] = p[i] * topo;
    }
    if (cfg_.par_mode == ParMode::concat) {
      const T* p = src(Channel::par);
      T* d = x.ptr() + (s * cin + c++) * hw;
      for (std::size_t i = 0; i < hw; ++i) d[i] = p[i] * topo;
    }
  }
  return x;
}

template <typename T>
Tensor<T> Model<T>::attention_mask(const Tensor<T>& par_deg) const {
  if (!cfg_.use_attention()) throw ConfigError("model has no attention branch");
  if (par_deg.rank() != 4 || par_deg.dim(1) != 1) throw ShapeError("attention input must be (N, 1, H, W)");
  Tensor<T> scaled(par_deg.shape());
  const T topo = static_cast<T>(1.0 / kTopoScaleDeg);
  for (std::size_t i = 0; i < par_deg.size(); ++i) scaled[i] = par_deg[i] * topo;
  return attention_forward(scaled, nullptr);
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& stack, Mode mode, Rng* rng) {
  check_stack(stack, cfg_.size_multiple());
  const bool train = mode == Mode::train;
  if (train && !rng) throw ConfigError("train-mode forward needs a dropout RNG");
  cache_ = ForwardCache{};
  ForwardCache* cache = train ? &cache_ : nullptr;
  if (cache) cache->stack = stack;

  Tensor<T> mask;
  if (cfg_.use_attention()) {
    Tensor<T> par = stack_channel(stack, Channel::par, static_cast<T>(1.0 / kTopoScaleDeg));
    mask = attention_forward(par, cache);
    if (cache) cache->par_input = std::move(par);
  }
  Tensor<T> x = unet_input(stack, cfg_.use_attention() ? &mask : nullptr);

  std::vector<Tensor<T>> skips;
  if (cache) cache->encoder.resize(encoder_.size());
  for (std::size_t level = 0; level < encoder_.size(); ++level) {
    const auto& b = encoder_[level];
    EncoderCache* ec = cache ? &cache->encoder[level] : nullptr;
    x = unit_forward(b.first, x, mode, ec ? &ec->first : nullptr);
    x = unit_forward(b.second, x, mode, ec ? &ec->second : nullptr);
    if (b.dropout) {
      Rng dummy;
      x = dropout(x, cfg_.dropout_rate, mode, rng ? *rng : dummy, ec ? &ec->drop_mask : nullptr);
    }
    if (level + 1 < encoder_.size()) {
      skips.push_back(x);
      if (ec) ec->pre_pool_shape = x.shape();
      x = max_pool_2x2(x, ec ? &ec->argmax : nullptr);
    }
  }
  if (cache) cache->decoder.resize(decoder_.size());
  for (std::size_t level = decoder_.size(); level-- > 0;) {
    const auto& b = decoder_[level];
    DecoderCache* dc = cache ? &cache->decoder[level] : nullptr;
    Tensor<T> up = upsample_bilinear_2x(x);
    if (dc) dc->up_channels = up.dim(1);
    x = concat_channels(up, skips[level]);
    x = unit_forward(b.first, x, mode, dc ? &dc->first : nullptr);
    x = unit_forward(b.second, x, mode, dc ? &dc->second : nullptr);
    Rng dummy;
    x = dropout(x, cfg_.dropout_rate, mode, rng ? *rng : dummy, dc ? &dc->drop_mask : nullptr);
  }
  if (cache) cache->head_input = x;
  x = conv2d(x, params_[head_.kernel].value, params_[head_.bias].value);
  x = activation(x, Activation::sigmoid);
  if (cache) {
    cache->output = x;
    cache->valid = true;
  }
  return x;
}

template <typename T>
void Model<T>::backward(const Tensor<T>& grad_output) {
  if (!cache_.valid) throw ConfigError("backward() needs a preceding train-mode forward()");
  auto& cache = cache_;
  if (!grad_output.same_shape(cache.output)) throw ShapeError("backward gradient shape does not match output");
  auto add_to = [](Tensor<T>& acc, const Tensor<T>& d) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += d[i];
  };

  Tensor<T> g = activation_backward(cache.output, grad_output, Activation::sigmoid);
  {
    auto conv = conv2d_backward(cache.head_input, params_[head_.kernel].value, g);
    add_to(params_[head_.kernel].grad, conv.kernels);
    add_to(params_[head_.bias].grad, conv.bias);
    g = std::move(conv.input);
  }

  std::vector<Tensor<T>> skip_grads(encoder_.size());
  for (std::size_t level = 0; level < decoder_.size(); ++level) {
    const auto& b = decoder_[level];
    const auto& dc = cache.decoder[level];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= dc.drop_mask[i];
    g = unit_backward(b.second, dc.second, g);
    g = unit_backward(b.first, dc.first, g);
    auto [up, skip] = split_channels(g, dc.up_channels);
    skip_grads[level] = std::move(skip);
    g = upsample_bilinear_2x_backward(up);
  }

  for (std::size_t level = encoder_.size(); level-- > 0;) {
    const auto& b = encoder_[level];
    const auto& ec = cache.encoder[level];
    if (level + 1 < encoder_.size()) {
      g = max_pool_2x2_backward(g, ec.argmax, ec.pre_pool_shape);
      add_to(g, skip_grads[level]);
    }
    if (b.dropout)
      for (std::size_t i = 0; i < g.size(); ++i) g[i] *= ec.drop_mask[i];
    g = unit_backward(b.second, ec.second, g);
    const bool need_input = level > 0 || cfg_.use_attention();
    if (need_input) {
      g = unit_backward(b.first, ec.first, g);
    } else {
      // The network input needs no gradient.
      Tensor<T> a = activation_backward(ec.first.output, g, Activation::relu);
      auto bn = batch_norm2d_backward(a, params_[b.first.gain].value, ec.first.bn);
      add_to(params_[b.first.gain].grad, bn.gain);
      add_to(params_[b.first.offset].grad, bn.offset);
      auto conv = conv2d_backward(ec.first.input, params_[b.first.kernel].value, bn.input, false);
      add_to(params_[b.first.kernel].grad, conv.kernels);
      add_to(params_[b.first.bias].grad, conv.bias);
    }
  }

  if (!cfg_.use_attention()) return;

  // g is d(loss)/d(unet input); route the masked SAR channels into the mask.
  const auto& stack = cache.stack;
  const std::size_t n = stack.dim(0), hw = stack.dim(2) * stack.dim(3), cin = cfg_.in_channels();
  Tensor<T> gmask({n, 1, stack.dim(2), stack.dim(3)});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < cfg_.sar_channels.size(); ++c) {
      const T* sar = stack.ptr() + (s * sarprep::kChannelCount + static_cast<std::size_t>(cfg_.sar_channels[c])) * hw;
      const T* gx = g.ptr() + (s * cin + c) * hw;
      T* gm = gmask.ptr() + s * hw;
      for (std::size_t i = 0; i < hw; ++i) gm[i] += gx[i] * sar[i];
    }
  }
  Tensor<T> ga = std::move(gmask);
  for (std::size_t i = attention_.size(); i-- > 0;) {
    const bool last = i + 1 == attention_.size();
    ga = activation_backward(cache.attention_outputs[i], ga, last ? Activation::sigmoid : Activation::relu);
    auto conv = conv2d_backward(cache.attention_inputs[i], params_[attention_[i].kernel].value, ga, i > 0);
    add_to(params_[attention_[i].kernel].grad, conv.kernels);
    add_to(params_[attention_[i].bias].grad, conv.bias);
    ga = std::move(conv.input);
  }
}

template <typename T>
template <typename U>
Model<U> Model<T>::converted() const {
  Model<U> m;
  m.cfg_ = cfg_;
  for (const auto& p : params_)
    m.params_.push_back(
        Parameter<U>{p.name, Tensor<U>::cast(p.value), p.trainable ? Tensor<U>(p.value.shape()) : Tensor<U>(), p.trainable});
  for (const auto& b : encoder_)
    m.encoder_.push_back({{b.first.kernel, b.first.bias, b.first.gain, b.first.offset, b.first.mean, b.first.var},
                          {b.second.kernel, b.second.bias, b.second.gain, b.second.offset, b.second.mean, b.second.var},
                          b.dropout});
  for (const auto& b : decoder_)
    m.decoder_.push_back({{b.first.kernel, b.first.bias, b.first.gain, b.first.offset, b.first.mean, b.first.var},
                          {b.second.kernel, b.second.bias, b.second.gain, b.second.offset, b.second.mean, b.second.var}});
  m.head_ = {head_.kernel, head_.bias};
  for (const auto& a : attention_) m.attention_.push_back({a.kernel, a.bias});
  return m;
}

template class Model<float>;
template class Model<double>;
template Model<double> Model<float>::converted<double>() const;
template Model<float> Model<double>::converted<float>() const;
template Model<float> Model<float>::converted<float>() const;

namespace {
constexpr char kWeightMagic[4] = {'A', 'V', 'W', '1'};
}

std::vector<std::uint8_t> encode_weights(const Model<float>& model) {
  std::vector<std::uint8_t> out(kWeightMagic, kWeightMagic + 4);
  const auto& params = model.parameters();
  bytes::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    bytes::put_u16(out, static_cast<std::uint16_t>(p.name.size()));
    bytes::put_raw(out, p.name);
    bytes::put_u8(out, static_cast<std::uint8_t>(p.value.rank()));
    for (auto d : p.value.shape()) bytes::put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : p.value.data()) bytes::put_f32(out, v);
  }
  const std::string cfg = model.config().to_json();
  bytes::put_u32(out, static_cast<std::uint32_t>(cfg.size()));
  bytes::put_raw(out, cfg);
  return out;
}

Model<float> decode_weights(std::span<const std::uint8_t> data) {
  bytes::Reader in(data);
  auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kWeightMagic, 4) != 0) throw ParseError("weight file: bad magic (expected AVW1)");
  const std::uint32_t count = in.u32("tensor count");
  struct Loaded {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<float> data;
  };
  std::vector<Loaded> tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    Loaded l;
    l.name = in.str(in.u16("name length"), "tensor name");
    const std::uint8_t rank = in.u8("rank");
    for (std::uint8_t r = 0; r < rank; ++r) l.shape.push_back(in.u32("dimension"));
    l.data.resize(Tensor<float>::product(l.shape));
    for (auto& v : l.data) v = in.f32("tensor data");
    tensors.push_back(std::move(l));
  }
  const std::uint32_t cfg_len = in.u32("config length");
  const ModelConfig cfg = ModelConfig::from_json(in.str(cfg_len, "config"));
  if (in.remaining() != 0) throw ParseError("weight file: trailing bytes after config");

  Model<float> m = Model<float>::build(cfg, 0);
  auto& params = m.parameters();
  if (params.size() != tensors.size())
    throw ParseError("weight file holds " + std::to_string(tensors.size()) + " tensors, config expects " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != tensors[i].name || params[i].value.shape() != tensors[i].shape)
      throw ParseError("weight file tensor " + std::to_string(i) + " ('" + tensors[i].name + "') does not match the topology");
    params[i].value = Tensor<float>(tensors[i].shape, std::move(tensors[i].data));
  }
  return m;
}

void save_weights(const Model<float>& model, const std::filesystem::path& path) {
  bytes::write_file(path.string(), encode_weights(model));
}

Model<float> load_weights(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("weight file not found: " + path.string());
  try {
    return decode_weights(bytes::read_file(path.string()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void adam_step(std::vector<Parameter<float>>& params, AdamState& state, const AdamHyper& hyper) {
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), {});
    state.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i].trainable) continue;
      state.m[i].assign(params[i].value.size(), 0.0);
      state.v[i].assign(params[i].value.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t), c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g;
      v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g * g;
      const double mhat = m[k] / c1, vhat = v[k] / c2;
      p.value[k] = static_cast<float>(p.value[k] - hyper.lr * mhat / (std::sqrt(vhat) + hyper.eps));
    }
  }
}

}  // namespace avaseg::nn
