#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "avaseg/bytes.hpp"
#include "avaseg/model.hpp"
#include "support.hpp"

using namespace avaseg;
using namespace avaseg::nn;
using sarprep::Channel;

namespace {

ModelConfig small_config(ParMode mode = ParMode::attention) {
  ModelConfig c;
  c.base_filters = 3;
  c.depth = 3;
  c.attention_filters = 3;
  c.par_mode = mode;
  return c;
}

template <typename T>
Tensor<T> random_stack(std::size_t n, std::size_t h, std::size_t w, Rng& rng) {
  Tensor<T> s({n, sarprep::kChannelCount, h, w});
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        s.at(b, 0, y, x) = static_cast<T>(rng.uniform(-3, 6));
        s.at(b, 1, y, x) = static_cast<T>(rng.uniform(-3, 6));
        s.at(b, 2, y, x) = s.at(b, 0, y, x) * s.at(b, 1, y, x);
        s.at(b, 3, y, x) = static_cast<T>(rng.uniform(0, 60));
        s.at(b, 4, y, x) = static_cast<T>(rng.uniform(5, 50));
      }
  return s;
}

// Trainable scalar count from the layer widths alone.
std::size_t closed_form_count(const ModelConfig& c) {
  auto unit = [](std::size_t in, std::size_t out) { return 9 * in * out + out + 2 * out; };
  std::size_t n = 0;
  if (c.par_mode == ParMode::attention) {
    const std::size_t a = c.attention_filters;
    n += (9 * 1 * a + a) + 2 * (9 * a * a + a) + (a + 1);
  }
  std::size_t in = c.in_channels();
  for (std::size_t l = 0; l < c.depth; ++l) {
    const std::size_t f = c.base_filters << l;
    n += unit(in, f) + unit(f, f);
    in = f;
  }
  for (std::size_t l = c.depth - 1; l-- > 0;) {
    const std::size_t f = c.base_filters << l;
    n += unit(in + f, f) + unit(f, f);
    in = f;
  }
  return n + in + 1;
}

std::vector<float> values(const Tensor32& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(ModelConfig, ParameterCountMatchesClosedForm) {
  for (auto mode : {ParMode::none, ParMode::concat, ParMode::attention}) {
    for (auto cfg : {small_config(mode), ModelConfig::desk(), ModelConfig::paper()}) {
      cfg.par_mode = mode;
      EXPECT_EQ(Model<float>::build(cfg, 1).trainable_count(), closed_form_count(cfg)) << to_string(mode);
    }
  }
  ModelConfig vv_only = small_config(ParMode::none);
  vv_only.sar_channels = {Channel::vv};
  vv_only.use_slope = false;
  EXPECT_EQ(vv_only.in_channels(), 1u);
  EXPECT_EQ(Model<float>::build(vv_only, 1).trainable_count(), closed_form_count(vv_only));
}

TEST(ModelConfig, ReceptiveField) {
  // Innermost block of the full scale sees 140 pixels; desk scale 68.
  EXPECT_EQ(Model<float>::build(ModelConfig::paper(), 0).innermost_receptive_field(), 140u);
  EXPECT_EQ(Model<float>::build(ModelConfig::desk(), 0).innermost_receptive_field(), 68u);
}

TEST(ModelConfig, JsonRoundTripAndValidation) {
  ModelConfig c = small_config(ParMode::concat);
  c.sar_channels = {Channel::vv, Channel::vvvh};
  EXPECT_EQ(ModelConfig::from_json(c.to_json()), c);
  EXPECT_THROW(ModelConfig::from_json(R"({"depth":0})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json(R"({"colour":"red"})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json(R"({"sar_channels":["vh","vv"]})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json(R"({"sar_channels":["slope"]})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json(R"({"par_mode":"sideways"})"), ConfigError);
  EXPECT_THROW(ModelConfig::from_json("{"), ConfigError);
}

TEST(Model, DeterministicBuildAndForward) {
  auto a = Model<float>::build(small_config(), 11);
  auto b = Model<float>::build(small_config(), 11);
  auto c = Model<float>::build(small_config(), 12);
  EXPECT_EQ(values(a.parameters()[0].value), values(b.parameters()[0].value));
  EXPECT_NE(values(a.parameters()[0].value), values(c.parameters()[0].value));
  Rng rng(1);
  auto x = random_stack<float>(2, 16, 16, rng);
  EXPECT_EQ(values(a.forward(x, Mode::eval)), values(b.forward(x, Mode::eval)));
  Rng d1(5), d2(5);
  EXPECT_EQ(values(a.forward(x, Mode::train, &d1)), values(b.forward(x, Mode::train, &d2)));
}

TEST(Model, AcceptsAnyMultipleOfTheDownsampling) {
  auto m = Model<float>::build(small_config(), 1);
  Rng rng(2);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {16, 24}, {40, 8}}) {
    auto y = m.forward(random_stack<float>(1, h, w, rng), Mode::eval);
    EXPECT_EQ(y.shape(), (std::vector<std::size_t>{1, 1, h, w}));
    for (float v : y.data()) {
      EXPECT_GT(v, 0.0f);
      EXPECT_LT(v, 1.0f);
    }
  }
  EXPECT_THROW(m.forward(random_stack<float>(1, 10, 16, rng), Mode::eval), ShapeError);
  EXPECT_THROW(m.forward(Tensor32({1, 4, 16, 16}), Mode::eval), ShapeError);
  EXPECT_THROW(m.forward(random_stack<float>(1, 16, 16, rng), Mode::train), ConfigError);
}

TEST(Model, EvalOutputIsBatchIndependent) {
  auto m = Model<float>::build(small_config(), 3);
  Rng rng(3);
  auto batch = random_stack<float>(3, 16, 16, rng);
  auto all = m.forward(batch, Mode::eval);
  const std::size_t per = 5 * 16 * 16;
  for (std::size_t s = 0; s < 3; ++s) {
    Tensor32 one({1, 5, 16, 16}, std::vector<float>(batch.ptr() + s * per, batch.ptr() + (s + 1) * per));
    auto y = m.forward(one, Mode::eval);
    for (std::size_t i = 0; i < 256; ++i) EXPECT_FLOAT_EQ(y[i], all[s * 256 + i]);
  }
}

TEST(Model, DisabledChannelsAreNeverRead) {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  struct Case {
    std::vector<Channel> sar;
    bool slope;
    ParMode par;
    std::vector<std::size_t> unused;
  };
  const std::vector<Case> cases = {
      {{Channel::vv}, false, ParMode::none, {1, 2, 3, 4}},
      {{Channel::vv, Channel::vh}, false, ParMode::none, {2, 3, 4}},
      {{Channel::vv, Channel::vh, Channel::vvvh}, true, ParMode::none, {4}},
      {{Channel::vv, Channel::vh, Channel::vvvh}, false, ParMode::concat, {3}},
      {{Channel::vh}, true, ParMode::attention, {0, 2}},
  };
  Rng rng(4);
  for (const auto& k : cases) {
    ModelConfig c = small_config(k.par);
    c.sar_channels = k.sar;
    c.use_slope = k.slope;
    auto m = Model<float>::build(c, 9);
    auto x = random_stack<float>(2, 8, 8, rng);
    auto clean = m.forward(x, Mode::eval);
    for (std::size_t ch : k.unused)
      for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t i = 0; i < 64; ++i) x.at(b, ch, i / 8, i % 8) = nan;
    auto poisoned = m.forward(x, Mode::eval);
    EXPECT_EQ(values(clean), values(poisoned)) << c.to_json();
  }
}

TEST(Model, AttentionMaskIsLocal) {
  auto m = Model<double>::build(small_config(), 5);
  Rng rng(6);
  Tensor64 par({1, 1, 20, 20});
  for (std::size_t i = 0; i < par.size(); ++i) par[i] = rng.uniform(0, 60);
  auto base = m.attention_mask(par);
  for (double v : base.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  par.at(0, 0, 10, 10) += 30.0;
  auto moved = m.attention_mask(par);
  // Three 3x3 convolutions then a 1x1: a 7x7 footprint.
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c)
      if (std::max(std::abs(r - 10), std::abs(c - 10)) > 3) EXPECT_EQ(moved.at(0, 0, r, c), base.at(0, 0, r, c));
  EXPECT_THROW(Model<double>::build(small_config(ParMode::concat), 1).attention_mask(par), ConfigError);
}

TEST(Model, GradientsMatchFiniteDifferences) {
  for (auto mode : {ParMode::attention, ParMode::concat}) {
    auto m32 = Model<float>::build(small_config(mode), 21);
    auto m = m32.converted<double>();
    Rng rng(22);
    auto x = random_stack<double>(2, 8, 8, rng);
    Tensor64 y({2, 1, 8, 8});
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = rng.bernoulli(0.3) ? 1.0 : 0.0;
    LossConfig loss_cfg;
    auto loss = [&] {
      Rng drop(99);
      return weighted_bce(m.forward(x, Mode::train, &drop), y, loss_cfg).loss;
    };
    m.zero_grad();
    {
      Rng drop(99);
      auto out = m.forward(x, Mode::train, &drop);
      m.backward(weighted_bce(out, y, loss_cfg).grad);
    }
    // Sample parameters spread across every trainable tensor.
    double num2 = 0, den2 = 0;
    std::size_t checked = 0;
    Rng pick(23);
    for (auto& p : m.parameters()) {
      if (!p.trainable) continue;
      for (int t = 0; t < 4; ++t) {
        const std::size_t i = pick.below(p.value.size());
        const double keep = p.value[i], h = 1e-6;
        p.value[i] = keep + h;
        const double up = loss();
        p.value[i] = keep - h;
        const double down = loss();
        p.value[i] = keep;
        const double numeric = (up - down) / (2 * h);
        num2 += (numeric - p.grad[i]) * (numeric - p.grad[i]);
        den2 += numeric * numeric + p.grad[i] * p.grad[i];
        ++checked;
      }
    }
    EXPECT_GE(checked, 100u);
    EXPECT_LT(std::sqrt(num2 / den2), 1e-4) << to_string(mode);

    // The float model agrees with the double model on the same step.
    m32.zero_grad();
    Rng drop(99);
    auto out32 = m32.forward(Tensor32::cast(x), Mode::train, &drop);
    m32.backward(weighted_bce(out32, Tensor32::cast(y), loss_cfg).grad);
    double d2 = 0, n2 = 0;
    for (std::size_t k = 0; k < m.parameters().size(); ++k) {
      const auto& a = m.parameters()[k];
      if (!a.trainable) continue;
      for (std::size_t i = 0; i < a.grad.size(); ++i) {
        const double diff = a.grad[i] - m32.parameters()[k].grad[i];
        d2 += diff * diff;
        n2 += a.grad[i] * a.grad[i];
      }
    }
    EXPECT_LT(std::sqrt(d2 / n2), 1e-3) << to_string(mode);
  }
}

TEST(Model, BackwardNeedsTrainForward) {
  auto m = Model<float>::build(small_config(), 1);
  EXPECT_THROW(m.backward(Tensor32({1, 1, 8, 8})), ConfigError);
  Rng rng(1), drop(2);
  m.forward(random_stack<float>(1, 8, 8, rng), Mode::train, &drop);
  EXPECT_THROW(m.backward(Tensor32({1, 1, 16, 8})), ShapeError);
}

TEST(Weights, RoundTrip) {
  auto m = Model<float>::build(small_config(ParMode::concat), 8);
  m.parameter("enc0.unit0.bn.running_mean").value[1] = 0.25f;
  auto dir = fixtures::temp_dir("weights");
  save_weights(m, dir / "m.avw");
  auto back = load_weights(dir / "m.avw");
  EXPECT_EQ(back.config(), m.config());
  ASSERT_EQ(back.parameters().size(), m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    EXPECT_EQ(back.parameters()[i].name, m.parameters()[i].name);
    EXPECT_EQ(values(back.parameters()[i].value), values(m.parameters()[i].value));
  }
  Rng rng(3);
  auto x = random_stack<float>(1, 8, 8, rng);
  EXPECT_EQ(values(back.forward(x, Mode::eval)), values(m.forward(x, Mode::eval)));
}

TEST(Weights, RejectsDamagedFiles) {
  auto bytes = encode_weights(Model<float>::build(small_config(), 1));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_weights(bad_magic), ParseError);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(decode_weights(truncated), ParseError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_weights(trailing), ParseError);
  EXPECT_THROW(load_weights("/nonexistent/model.avw"), ConfigError);
}

TEST(Weights, GoldenFileDecodesAndPredicts) {
  const std::string dir = AVASEG_GOLDEN_DIR;
  auto m = load_weights(dir + "/tiny_model.avw");
  EXPECT_EQ(m.config().depth, 1u);
  EXPECT_EQ(m.config().in_channels(), 1u);
  std::ifstream in(dir + "/tiny_model_expected.json");
  auto j = nlohmann::json::parse(in);
  const std::size_t h = j["height"], w = j["width"];
  Tensor32 x({1, 5, h, w}, 7.0f);
  for (std::size_t i = 0; i < h * w; ++i) x.at(0, 0, i / w, i % w) = j["vv"][i].get<float>();
  auto y = m.forward(x, Mode::eval);
  for (std::size_t i = 0; i < h * w; ++i) EXPECT_NEAR(y[i], j["expected"][i].get<double>(), 1e-5);
  const auto golden = bytes::read_file(dir + "/tiny_model.avw");
  EXPECT_EQ(encode_weights(m), golden);
  auto again = decode_weights(encode_weights(m));
  EXPECT_EQ(values(again.forward(x, Mode::eval)), values(y));
}

TEST(Adam, ConstantGradientClosedForm) {
  std::vector<Parameter<float>> ps{{"w", Tensor32({3}, std::vector<float>{1.0f, -2.0f, 0.5f}),
                                    Tensor32({3}, std::vector<float>{0.5f, -3.0f, 0.0f}), true},
                                   {"frozen", Tensor32({1}, 4.0f), Tensor32(), false}};
  AdamState st;
  AdamHyper hp;
  hp.lr = 0.01;
  for (int t = 1; t <= 5; ++t) {
    adam_step(ps, st, hp);
    // With a constant gradient the bias-corrected moments equal g and g^2.
    EXPECT_NEAR(ps[0].value[0], 1.0 - t * 0.01 * 0.5 / (0.5 + 1e-8), 1e-6);
    EXPECT_NEAR(ps[0].value[1], -2.0 + t * 0.01 * 3.0 / (3.0 + 1e-8), 1e-6);
    EXPECT_EQ(ps[0].value[2], 0.5f);
  }
  EXPECT_EQ(ps[1].value[0], 4.0f);
  EXPECT_EQ(st.step, 5u);
}

TEST(Adam, FirstStepsFromRecurrence) {
  std::vector<Parameter<float>> ps{{"w", Tensor32({1}, 0.0f), Tensor32({1}, 0.0f), true}};
  AdamState st;
  AdamHyper hp{0.1, 0.5, 0.75, 0.0};
  const double g[2] = {1.0, -3.0};
  double w = 0, m = 0, v = 0;
  for (int t = 0; t < 2; ++t) {
    ps[0].grad[0] = static_cast<float>(g[t]);
    adam_step(ps, st, hp);
    m = 0.5 * m + 0.5 * g[t];
    v = 0.75 * v + 0.25 * g[t] * g[t];
    w -= 0.1 * (m / (1 - std::pow(0.5, t + 1))) / std::sqrt(v / (1 - std::pow(0.75, t + 1)));
    EXPECT_NEAR(ps[0].value[0], w, 1e-6);
  }
}
