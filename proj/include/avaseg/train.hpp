#pragma once

#include <functional>
#include <vector>

#include "avaseg/augment.hpp"
#include "avaseg/model.hpp"

namespace avaseg::train {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  std::size_t patience = 5;
  std::uint64_t seed = 7;
  bool augment = true;
  nn::LossConfig loss;
  nn::AdamHyper optimizer;
  augment::AugmentParams augment_params;

  void validate() const;
};

struct Dataset {
  std::vector<sarprep::PatchSample> train;
  std::vector<sarprep::PatchSample> validation;
};

/// Random partition holding out `validation_fraction` of the patches (at
/// least one when there are two or more).
Dataset split_dataset(std::vector<sarprep::PatchSample> patches, double validation_fraction, std::uint64_t seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_f1 = 0.0;
  bool improved = false;
};

struct TrainResult {
  nn::Model<float> model;  // parameters of the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_f1 = 0.0;
};

/// Stacks samples [begin, end) into (N, 5, S, S) features and (N, 1, S, S) labels.
std::pair<Tensor32, Tensor32> make_batch(const std::vector<const sarprep::PatchSample*>& samples);

/// Pixel F1 at threshold 0.5 over all validation pixels, eval mode.
/// `undefined` is set when the set has no avalanche pixels (F1 reported as 0).
double validation_f1(nn::Model<float>& model, const std::vector<sarprep::PatchSample>& samples, std::size_t batch_size,
                     bool* undefined = nullptr);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on the weighted BCE with on-the-fly augmentation, model
/// selection on validation F1 and early stopping after `patience`
/// non-improving epochs.
TrainResult train(nn::Model<float> model, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace avaseg::train
