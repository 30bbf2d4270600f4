#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gzipt/models/detector.hpp"

namespace gzipt::models {

struct TrainingItem {
  nn::Tensor input;                        // [1, 128, T]
  std::vector<std::uint8_t> onset_labels;  // [T]
  std::vector<std::uint8_t> ipt_labels;    // [T]
};

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 8;
  std::size_t epochs = 30;
  std::uint64_t seed = 7;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double heldout_loss = 0.0;
};

struct TrainResult {
  double heldout_initial = 0.0;
  std::vector<EpochLog> epochs;
  std::size_t steps = 0;
};

// Mean loss over items in evaluation mode.
double evaluate_loss(const Detector& det, std::span<const TrainingItem> items);

// Initialises the detector from cfg.seed and trains it with Adam on
// mini-batches (gradients averaged over the batch), reshuffling every epoch.
// Training items must all be 256 frames long. A non-finite loss aborts with a
// NumericError naming the step.
TrainResult train_detector(Detector& det, std::span<const TrainingItem> train, std::span<const TrainingItem> heldout,
                           const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace gzipt::models
