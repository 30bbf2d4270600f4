#include "gzipt/models/train.hpp"

#include <cmath>
#include <numeric>

#include "gzipt/common/error.hpp"
#include "gzipt/data/sequence.hpp"
#include "gzipt/nn/adam.hpp"

namespace gzipt::models {

double evaluate_loss(const Detector& det, std::span<const TrainingItem> items) {
  require(!items.empty(), "evaluate_loss: no items");
  nn::Workspace<float> ws;
  double total = 0.0;
  for (const auto& item : items) {
    const auto& y = det.forward(item.input, nn::Mode::eval, nullptr, ws);
    total += det.loss(y.data(), item.onset_labels, item.ipt_labels);
  }
  return total / static_cast<double>(items.size());
}

TrainResult train_detector(Detector& det, std::span<const TrainingItem> train, std::span<const TrainingItem> heldout,
                           const TrainConfig& cfg, const std::function<void(const EpochLog&)>& on_epoch) {
  require(!train.empty(), "train: empty dataset");
  require(cfg.batch > 0 && cfg.epochs > 0 && cfg.lr > 0.0, "train: batch, epochs and lr must be positive");
  for (const auto& item : train)
    require(item.input.dim(2) == data::kTrainFrames && item.onset_labels.size() == data::kTrainFrames &&
                item.ipt_labels.size() == data::kTrainFrames,
            "train: every training item must be 256 frames");

  Rng init_rng(cfg.seed);
  det.init(init_rng);
  Rng order_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);
  Rng dropout_rng(cfg.seed ^ 0x14057b7ef767814fULL);

  auto& net = det.network();
  nn::Adam<float> adam(net.parameters(), {.lr = cfg.lr});
  nn::Workspace<float> ws;
  std::vector<float> grad;

  TrainResult result;
  result.heldout_initial = heldout.empty() ? 0.0 : evaluate_loss(det, heldout);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch);
      const float scale = 1.0f / static_cast<float>(stop - start);
      net.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& item = train[order[k]];
        const auto& y = det.forward(item.input, nn::Mode::train, &dropout_rng, ws);
        grad.resize(y.size());
        batch_loss += det.loss(y.data(), item.onset_labels, item.ipt_labels, grad);
        for (auto& g : grad) g *= scale;
        net.backward(item.input, ws, grad);
      }
      batch_loss /= static_cast<double>(stop - start);
      if (!std::isfinite(batch_loss))
        throw NumericError("training diverged: non-finite loss at step " + std::to_string(adam.steps() + 1));
      try {
        adam.step();
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at step " + std::to_string(adam.steps() + 1));
      }
      epoch_loss += batch_loss * static_cast<double>(stop - start);
    }
    EpochLog log{epoch, epoch_loss / static_cast<double>(train.size()),
                 heldout.empty() ? 0.0 : evaluate_loss(det, heldout)};
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.steps = adam.steps();
  return result;
}

}  // namespace gzipt::models
