#include "avaseg/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avaseg/error.hpp"
#include "avaseg/eval.hpp"
#include "avaseg/log.hpp"

namespace avaseg::train {

using sarprep::PatchSample;

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  loss.validate();
  augment_params.validate();
  if (!(optimizer.lr > 0)) throw ConfigError("learning rate must be positive");
}

Dataset split_dataset(std::vector<PatchSample> patches, double validation_fraction, std::uint64_t seed) {
  if (!(validation_fraction >= 0 && validation_fraction < 1)) throw ConfigError("validation fraction must lie in [0, 1)");
  Rng rng(derive_seed(seed, 0x5e1));
  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(patches.size())));
  if (validation_fraction > 0 && n_val == 0 && patches.size() >= 2) n_val = 1;
  Dataset d;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_val ? d.validation : d.train).push_back(std::move(patches[order[i]]));
  return d;
}

std::pair<Tensor32, Tensor32> make_batch(const std::vector<const PatchSample*>& samples) {
  if (samples.empty()) throw ConfigError("empty batch");
  const auto& shape = samples.front()->features.shape();
  const std::size_t c = shape[0], h = shape[1], w = shape[2];
  Tensor32 x({samples.size(), c, h, w}), y({samples.size(), 1, h, w});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i]->features.shape() != shape) throw ShapeError("patches in a batch must share a shape");
    std::copy(samples[i]->features.data().begin(), samples[i]->features.data().end(), x.ptr() + i * c * h * w);
    std::copy(samples[i]->labels.data().begin(), samples[i]->labels.data().end(), y.ptr() + i * h * w);
  }
  return {std::move(x), std::move(y)};
}

double validation_f1(nn::Model<float>& model, const std::vector<PatchSample>& samples, std::size_t batch_size,
                     bool* undefined) {
  eval::PixelCounts counts;
  for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
    std::vector<const PatchSample*> batch;
    for (std::size_t i = begin; i < std::min(samples.size(), begin + batch_size); ++i) batch.push_back(&samples[i]);
    auto [x, y] = make_batch(batch);
    const Tensor32 p = model.forward(x, nn::Mode::eval);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool pp = p[i] >= 0.5f, tt = y[i] == 1.0f;
      if (pp && tt) ++counts.tp;
      else if (pp) ++counts.fp;
      else if (tt) ++counts.fn;
      else ++counts.tn;
    }
  }
  const bool none = counts.tp + counts.fn == 0;
  if (undefined) *undefined = none;
  return none ? 0.0 : eval::scores_from_counts(counts).f1;
}

TrainResult train(nn::Model<float> model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw ConfigError("training set is empty");
  const std::size_t multiple = model.config().size_multiple();
  for (const auto& s : data.train)
    if (s.features.dim(1) % multiple != 0)
      throw ConfigError("patch size " + std::to_string(s.features.dim(1)) + " not divisible by " + std::to_string(multiple));

  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng augment_rng(derive_seed(cfg.seed, 2, cfg.augment_params.seed));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  nn::AdamState adam;

  TrainResult result{model, {}, 0, -1.0};
  std::size_t stale = 0;
  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle(order, order_rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<PatchSample> augmented;
      augmented.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = data.train[order[i]];
        if (cfg.augment) {
          const auto t = augment::sample_transform(cfg.augment_params, augment_rng);
          augmented.push_back(augment::apply_transform(s, t));
        } else {
          augmented.push_back(s);
        }
      }
      std::vector<const PatchSample*> ptrs;
      for (const auto& s : augmented) ptrs.push_back(&s);
      auto [x, y] = make_batch(ptrs);
      model.zero_grad();
      const Tensor32 p = model.forward(x, nn::Mode::train, &dropout_rng);
      const auto loss = nn::weighted_bce(p, y, cfg.loss);
      model.backward(loss.grad);
      nn::adam_step(model, adam, cfg.optimizer);
      loss_sum += loss.loss * static_cast<double>(end - begin);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    bool undefined = false;
    rec.validation_f1 = data.validation.empty() ? 0.0 : validation_f1(model, data.validation, cfg.batch_size, &undefined);
    if (undefined || data.validation.empty())
      log::event("warning", {{"message", "validation set has no avalanche pixels; F1 reported as 0"}, {"epoch", epoch}});
    rec.improved = rec.validation_f1 > result.best_validation_f1;
    if (rec.improved) {
      result.model = model;
      result.best_epoch = epoch;
      result.best_validation_f1 = rec.validation_f1;
      stale = 0;
    } else {
      ++stale;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (!rec.improved && stale >= std::max<std::size_t>(cfg.patience, 1)) break;
  }
  return result;
}

}  // namespace avaseg::train
